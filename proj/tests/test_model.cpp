#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "marbayes/model.hpp"
#include "marbayes/stability.hpp"

using namespace marbayes;
using doctest::Approx;

namespace {

TimeSeries two_point(double prev, double cur) { return TimeSeries({prev, cur}); }

// Independent brute-force likelihood: products of mixture densities, no logs
// until the end, no shared helpers.
double brute_force_log_likelihood(const MARSpec& spec, const TimeSeries& y) {
  const std::size_t p = spec.max_order();
  double total = 0.0;
  for (std::size_t t = p; t < y.size(); ++t) {
    double dens = 0.0;
    for (std::size_t k = 0; k < spec.components(); ++k) {
      double nu = spec.shifts[k];
      for (std::size_t i = 0; i < spec.ar[k].size(); ++i) nu += spec.ar[k][i] * y[t - 1 - i];
      dens += spec.weights[k] * fixtures::normal_density(y[t], nu, spec.scales[k]);
    }
    total += std::log(dens);
  }
  return total;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

}  // namespace

TEST_CASE("MARSpec validation") {
  CHECK_THROWS_AS(MARSpec::make({0.5, 0.4}, {0, 0}, {{0.1}, {0.1}}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MARSpec::make({1.0}, {0}, {{0.1}}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(MARSpec::make({1.0}, {0}, {{}}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(MARSpec::make({0.0, 1.0}, {0, 0}, {{0.1}, {0.1}}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MARSpec::make({}, {}, {}, {}), std::invalid_argument);

  const auto spec = MARSpec::make({0.5, 0.5}, {0, 0}, {{0.4}, {0.3, -0.1}}, {1, 1});
  CHECK(spec.max_order() == 2);
  CHECK(spec.ar_coeff(0, 2) == 0.0);
  CHECK(spec.ar_coeff(1, 2) == -0.1);
  CHECK(spec.precision(0) == 1.0);
}

TEST_CASE("component means and the unit-root marker") {
  const auto a = fixtures::model_a();
  REQUIRE(a.mean(0).has_value());
  CHECK(*a.mean(0) == 0.0);
  CHECK_FALSE(a.mean(1).has_value());

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto spec = fixtures::random_spec(rng, 3, 4);
    for (std::size_t k = 0; k < spec.components(); ++k) {
      const auto mu = spec.mean(k);
      if (!mu) continue;
      CHECK(shift_from_mean(*mu, spec.ar[k]) == Approx(spec.shifts[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("component_residual") {
  const auto zero = fixtures::single_ar({0.0});
  CHECK(component_residual(zero, two_point(5.0, 1.7), 0, 1) == 1.7);

  const auto a = fixtures::model_a();
  CHECK(component_residual(a, two_point(2.0, 1.0), 0, 1) == Approx(2.0));
  CHECK(component_residual(a, two_point(2.0, 2.0), 1, 1) == Approx(0.0));

  CHECK_THROWS_AS(component_residual(a, two_point(2.0, 2.0), 2, 1), std::out_of_range);
  CHECK_THROWS_AS(component_residual(a, two_point(2.0, 2.0), 0, 0), std::out_of_range);
  CHECK_THROWS_AS(component_residual(a, two_point(2.0, 2.0), 0, 2), std::out_of_range);
}

TEST_CASE("conditional_pdf values") {
  const auto std_normal = fixtures::single_ar({0.0});
  CHECK(conditional_pdf(std_normal, two_point(3.0, 0.0), 1) == Approx(0.398942).epsilon(1e-6));

  const auto a = fixtures::model_a();
  CHECK(conditional_pdf(a, two_point(0.0, 0.0), 1) == Approx(0.299207).epsilon(1e-6));
}

TEST_CASE("conditional_pdf integrates to one and matches the cdf") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 25; ++rep) {
    const auto spec = fixtures::random_spec(rng, 1 + rep % 4, 3);
    const std::vector<double> past = {0.3, -1.2, 0.8};
    double smax = *std::max_element(spec.scales.begin(), spec.scales.end());
    double centre = 0.0;
    for (std::size_t k = 0; k < spec.components(); ++k) centre += component_location(spec, k, past);
    centre /= static_cast<double>(spec.components());
    const std::size_t m = 400001;
    const double lo = centre - 40 * smax, hi = centre + 40 * smax;
    std::vector<double> x(m), f(m);
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
      f[i] = std::exp(log_conditional_pdf_at(spec, past, x[i]));
    }
    CHECK(trapezoid(x, f) == Approx(1.0).epsilon(1e-6));

    // cdf equals the running integral of the pdf, and is monotone.
    double running = 0.0;
    double prev_cdf = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
      running += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
      if (i % 20000 == 0) {
        const double cdf = conditional_cdf_at(spec, past, x[i]);
        CHECK(std::abs(cdf - running) < 1e-6);
        CHECK(cdf >= prev_cdf);
        prev_cdf = cdf;
      }
    }
  }
}

TEST_CASE("conditional_cdf") {
  const auto a = fixtures::model_a();
  CHECK(conditional_cdf(a, two_point(0.0, 0.0), 1) == Approx(0.5));
  CHECK(conditional_cdf(a, two_point(0.0, 1e6), 1) == Approx(1.0));
  // nu_1 = 1 and nu_2 = -1 + 2 = 1.
  const auto spec = MARSpec::make({0.3, 0.7}, {1.0, -1.0}, {{0.0}, {1.0}}, {1.0, 3.0});
  CHECK(conditional_cdf(spec, two_point(2.0, 1.0), 1) == Approx(0.5));
}

TEST_CASE("conditional_moments") {
  const auto a = fixtures::model_a();
  const auto m1 = conditional_moments(a, two_point(1.0, 0.0), 1);
  CHECK(m1.mean == Approx(0.25));
  const auto m0 = conditional_moments(a, two_point(0.0, 0.0), 1);
  CHECK(m0.mean == Approx(0.0));
  CHECK(m0.variance == Approx(2.5));
  const auto single = fixtures::single_ar({0.7}, 0.3, 1.7);
  CHECK(conditional_moments(single, two_point(4.0, 0.0), 1).variance == Approx(1.7 * 1.7));

  // Variance of the mixture matches numeric second moment.
  const std::vector<double> past = {1.0};
  double m = 0, s = 0;
  const double lo = -40, hi = 40;
  const int steps = 200000;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + (hi - lo) * i / steps;
    const double w = (i == 0 || i == steps ? 0.5 : 1.0) * (hi - lo) / steps;
    const double f = std::exp(log_conditional_pdf_at(a, past, x));
    m += w * x * f;
    s += w * x * x * f;
  }
  const auto mom = conditional_moments(a, two_point(1.0, 0.0), 1);
  CHECK(mom.mean == Approx(m).epsilon(1e-8));
  CHECK(mom.variance == Approx(s - m * m).epsilon(1e-8));
}

TEST_CASE("log_likelihood") {
  const auto zero = fixtures::single_ar({0.0});
  TimeSeries zeros(std::vector<double>(11, 0.0));
  CHECK(log_likelihood(zero, zeros) == Approx(10 * std::log(1.0 / std::sqrt(2 * M_PI))));

  const auto a = fixtures::model_a();
  const TimeSeries y({0.3, -0.4, 1.1, 0.9, -2.0, 0.5, 0.05, 1.7, -0.8, 0.2});
  double sum = 0.0;
  for (std::size_t t = 1; t < y.size(); ++t) sum += std::log(conditional_pdf(a, y, t));
  CHECK(log_likelihood(a, y) == Approx(sum).epsilon(1e-12));
  CHECK(log_likelihood(a, y) == Approx(brute_force_log_likelihood(a, y)).epsilon(1e-12));

  CHECK_THROWS_AS(log_likelihood(a, TimeSeries({1.0})), std::invalid_argument);
}

TEST_CASE("complete-data likelihood marginalises to the mixture likelihood") {
  std::mt19937_64 rng(5);
  int instances = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t g = 2 + rep % 3;
    const auto spec = fixtures::random_spec(rng, g, 2);
    const std::size_t p = spec.max_order();
    // Keep g^(n-p) <= 4096.
    std::size_t m = 1;
    std::size_t total = g;
    while (total * g <= 4096 && m < 6) {
      total *= g;
      ++m;
    }
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> y(p + m);
    for (double& v : y) v = nd(rng);
    const TimeSeries series(y);

    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i) combos *= g;
    std::vector<double> logs;
    logs.reserve(combos);
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<int> labels(m);
      std::size_t c = code;
      for (std::size_t i = 0; i < m; ++i) {
        labels[i] = static_cast<int>(c % g);
        c /= g;
      }
      logs.push_back(complete_data_log_likelihood(spec, series, LatentAllocation(p, labels, g)));
    }
    const double marg = log_sum_exp(logs);
    CHECK(std::abs(marg - brute_force_log_likelihood(spec, series)) < 1e-10);
    ++instances;
  }
  CHECK(instances == 40);

  const auto single = fixtures::single_ar({0.4}, 0.1, 1.3);
  const TimeSeries y({0.2, 0.5, -0.3, 1.0});
  const LatentAllocation alloc(1, {0, 0, 0}, 1);
  CHECK(complete_data_log_likelihood(single, y, alloc) == Approx(log_likelihood(single, y)));

  // An all-k allocation carries (n - p) log pi_k from the weights.
  const auto a = fixtures::model_a();
  const auto a2 = MARSpec::make({0.2, 0.8}, {0, 0}, {{-0.5}, {1.0}}, {1.0, 2.0});
  const LatentAllocation all_first(1, {0, 0, 0}, 2);
  CHECK(complete_data_log_likelihood(a, y, all_first) -
            complete_data_log_likelihood(a2, y, all_first) ==
        Approx(3 * (std::log(0.5) - std::log(0.2))));
}

TEST_CASE("theoretical_acf") {
  const auto ar1 = fixtures::single_ar({0.5});
  const auto rho = theoretical_acf(ar1, 6);
  for (std::size_t h = 0; h <= 6; ++h) CHECK(rho[h] == Approx(std::pow(0.5, h)));

  const auto a = fixtures::model_a();
  const auto ra = theoretical_acf(a, 3);
  CHECK(ra[1] == Approx(0.25));
  CHECK(ra[2] == Approx(0.0625));

  const auto flat = MARSpec::make({0.4, 0.6}, {0, 1}, {{0.0, 0.0}, {0.0}}, {1, 2});
  const auto rf = theoretical_acf(flat, 5);
  CHECK(rf[0] == 1.0);
  for (std::size_t h = 1; h <= 5; ++h) CHECK(rf[h] == Approx(0.0));

  // AR(2) Yule-Walker: rho_1 = phi1 / (1 - phi2).
  const auto ar2 = fixtures::single_ar({0.3, 0.4});
  const auto r2 = theoretical_acf(ar2, 4);
  CHECK(r2[1] == Approx(0.3 / 0.6));
  CHECK(r2[2] == Approx(0.3 * r2[1] + 0.4));
  CHECK(r2[3] == Approx(0.3 * r2[2] + 0.4 * r2[1]));

  // Unit root in an AR(1): the lag system 1 - a_1 ... stays solvable, but a
  // degenerate AR(2) with phi2 = 1 makes it singular.
  const auto singular = fixtures::single_ar({0.0, 1.0});
  CHECK_THROWS_AS(theoretical_acf(singular, 3), std::domain_error);
}

TEST_CASE("simulate_path") {
  const auto a = fixtures::model_a();
  const auto s1 = simulate_path(a, 200, std::uint64_t{42});
  const auto s2 = simulate_path(a, 200, std::uint64_t{42});
  CHECK(s1.values == s2.values);
  CHECK(s1.size() == 200);

  const auto constant = MARSpec::make({0.5, 0.5}, {3.0, 3.0}, {{0.0}, {0.0}}, {1e-300, 1e-300});
  for (double y : simulate_path(constant, 50, std::uint64_t{1}).values) CHECK(y == Approx(3.0));

  const auto unstable = fixtures::single_ar({1.0});
  CHECK_THROWS_AS(simulate_path(unstable, 10, std::uint64_t{1}), std::invalid_argument);

  const auto long_a = simulate_path(a, 1000000, std::uint64_t{7});
  const auto& v = long_a.values;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double c0 = 0, c1 = 0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    c0 += (v[t] - mean) * (v[t] - mean);
    if (t > 0) c1 += (v[t] - mean) * (v[t - 1] - mean);
  }
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(c1 / c0 - theoretical_acf(a, 1)[1]) < 0.02);
}

TEST_CASE("AR(p) sample moments match theoretical_acf") {
  const auto ar2 = fixtures::single_ar({0.5, -0.3}, 0.0, 1.0);
  const auto y = simulate_path(ar2, 400000, std::uint64_t{19});
  const auto rho = theoretical_acf(ar2, 3);
  const auto& v = y.values;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double c0 = 0;
  for (double x : v) c0 += (x - mean) * (x - mean);
  for (std::size_t h = 1; h <= 3; ++h) {
    double ch = 0;
    for (std::size_t t = h; t < v.size(); ++t) ch += (v[t] - mean) * (v[t - h] - mean);
    CHECK(std::abs(ch / c0 - rho[h]) < 0.01);
  }
}
