#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "marbayes/sampler.hpp"
#include "marbayes/stability.hpp"

using namespace marbayes;
using doctest::Approx;

namespace {

// Kolmogorov-Smirnov statistic of a sample against a cdf.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

// Critical value at the 0.1% level.
double ks_critical(std::size_t n) { return 1.95 / std::sqrt(static_cast<double>(n)); }

// Erlang cdf, valid for integer shape.
double erlang_cdf(double x, int shape, double rate) {
  if (x <= 0) return 0.0;
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < shape; ++j) {
    term *= rate * x / j;
    sum += term;
  }
  return 1.0 - std::exp(-rate * x) * sum;
}

ChainState state_for(const MARSpec& spec, const std::vector<int>& labels, double lambda = 1.0) {
  ChainState s;
  s.spec = spec;
  s.means.resize(spec.components());
  for (std::size_t k = 0; k < spec.components(); ++k) s.means[k] = spec.mean(k).value_or(0.0);
  s.alloc = LatentAllocation(spec.max_order(), labels, spec.components());
  s.lambda = lambda;
  return s;
}

TimeSeries simulate_ar1(double phi, std::size_t n, std::uint64_t seed, double shift = 0.0) {
  return simulate_path(fixtures::single_ar({phi}, shift, 1.0), n, seed);
}

Hyperparams quick(const TimeSeries& y, std::size_t burn, std::size_t iters) {
  auto h = default_hyperparams(y);
  h.burn_in = burn;
  h.n_iter = iters;
  h.pilot_iters = 500;
  return h;
}

}  // namespace

TEST_CASE("default hyperparameters follow the data range") {
  const TimeSeries y({1.0, 5.0, 3.0});
  const auto h = default_hyperparams(y);
  CHECK(h.zeta == 3.0);
  CHECK(h.kappa == 0.25);
  CHECK(h.b == Approx(10.0 / 16.0));
  CHECK(h.a == 0.2);
  CHECK(h.c == 2.0);
  CHECK_THROWS_AS(default_hyperparams(TimeSeries({2.0, 2.0})), std::invalid_argument);

  Hyperparams bad = h;
  bad.burn_in = bad.n_iter;
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
  bad = h;
  bad.gamma = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);
  CHECK(h.gamma_for(3) == std::vector<double>(3, Hyperparams::kDefaultGamma));
}

TEST_CASE("allocation probabilities") {
  // Identical components apart from the weights.
  const auto spec = MARSpec::make({2.0 / 3.0, 1.0 / 3.0}, {0, 0}, {{0.5}, {0.5}}, {1, 1});
  const auto probs = allocation_probabilities(spec, TimeSeries({1.0, 0.3}), 1);
  CHECK(probs[0] == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(probs[1] == Approx(1.0 / 3.0).epsilon(1e-14));

  // Hand computation with unequal scales.
  const auto a = fixtures::model_a();
  const double d0 = 0.5 * fixtures::normal_density(0.7, -0.5 * 1.2, 1.0);
  const double d1 = 0.5 * fixtures::normal_density(0.7, 1.2, 2.0);
  const auto pa = allocation_probabilities(a, TimeSeries({1.2, 0.7}), 1);
  CHECK(pa[0] == Approx(d0 / (d0 + d1)).epsilon(1e-12));

  // Symmetric locations: y_t sits halfway, so the labels are fair coins.
  const auto sym = MARSpec::make({0.5, 0.5}, {1.0, -1.0}, {{0.0}, {0.0}}, {1, 1});
  const TimeSeries y(std::vector<double>(4001, 0.0));
  auto state = state_for(sym, std::vector<int>(4000, 0));
  Rng rng(1);
  const auto alloc = sample_allocations(state, y, rng);
  const double frac = static_cast<double>(alloc.counts[0]) / 4000.0;
  CHECK(std::abs(frac - 0.5) < 4.0 * std::sqrt(0.25 / 4000.0));

  const auto far = MARSpec::make({0.5, 0.5}, {0.0, 0.0}, {{0.0}, {0.0}}, {1e-3, 1e-3});
  // Far in the tails the log-space normalisation still resolves the labels.
  const auto tail = allocation_probabilities(far, TimeSeries({0.0, 1e3}), 1);
  CHECK(tail[0] == Approx(0.5));
  CHECK(tail[1] == Approx(0.5));
}

TEST_CASE("weight draws") {
  LatentAllocation alloc(1, {0, 0, 0, 1, 1, 1, 1, 1, 1, 1}, 2);
  Rng rng(2);
  double mean0 = 0.0;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    const auto w = sample_weights(alloc, rng);
    CHECK(std::abs(w[0] + w[1] - 1.0) < 1e-15);
    mean0 += w[0];
  }
  // Dirichlet(4, 8) has first-coordinate mean 1/3 and sd about 0.13.
  CHECK(std::abs(mean0 / reps - 1.0 / 3.0) < 4.0 * 0.131 / std::sqrt(reps));
}

TEST_CASE("mean full conditional") {
  const auto spec = MARSpec::make({0.5, 0.5}, {0.0, 0.0}, {{0.4}, {1.0}}, {0.5, 1.0});
  const TimeSeries y({0.2, 1.0, -0.5, 2.0, 0.7});
  Hyperparams h;
  h.zeta = 0.3;
  h.kappa = 0.2;
  const auto state = state_for(spec, {0, 1, 0, 0});

  // Component 0: tau = 4, b_k = 0.6, residuals y_t - 0.4 y_{t-1} at t = 1, 3, 4.
  double sum = (1.0 - 0.4 * 0.2) + (2.0 - 0.4 * -0.5) + (0.7 - 0.4 * 2.0);
  const double prec = 4.0 * 3.0 * 0.36 + 0.2;
  const auto post = mean_full_conditional(state, y, h, 0);
  CHECK(post.variance == Approx(1.0 / prec));
  CHECK(post.mean == Approx((4.0 * sum * 0.6 + 0.2 * 0.3) / prec));

  // Unit root component: the data carry no information about mu.
  const auto unit = mean_full_conditional(state, y, h, 1);
  CHECK(unit.mean == Approx(0.3));
  CHECK(unit.variance == Approx(5.0));

  // Empty component falls back to the prior.
  const auto empty_state = state_for(spec, {1, 1, 1, 1});
  CHECK(mean_full_conditional(empty_state, y, h, 0).mean == Approx(0.3));

  // Draws follow the stated normal.
  Rng rng(3);
  std::vector<double> draws(4000);
  for (double& d : draws) d = sample_means(state, y, h, rng)[0];
  const double sd = std::sqrt(post.variance);
  const double ks = ks_statistic(draws, [&](double x) {
    return 0.5 * std::erfc(-(x - post.mean) / (sd * std::sqrt(2.0)));
  });
  CHECK(ks < ks_critical(draws.size()));
}

TEST_CASE("lambda and precision full conditionals") {
  const auto spec = MARSpec::make({0.5, 0.5}, {0.1, 0.0}, {{0.4}, {-0.2}}, {0.5, 2.0});
  const TimeSeries y({0.2, 1.0, -0.5, 2.0, 0.7});
  Hyperparams h;
  h.a = 0.2;
  h.c = 2.0;
  h.b = 3.0;
  const auto state = state_for(spec, {0, 1, 0, 0}, 1.5);

  const auto lam = lambda_full_conditional(state, h);
  CHECK(lam.shape == Approx(0.2 + 2 * 2.0));
  CHECK(lam.rate == Approx(3.0 + 4.0 + 0.25));

  double sse = 0.0;
  for (std::size_t t : {1, 3, 4}) {
    const double e = y[t] - 0.1 - 0.4 * y[t - 1];
    sse += e * e;
  }
  const auto tau = precision_full_conditional(state, y, h, 0);
  CHECK(tau.shape == Approx(2.0 + 1.5));
  CHECK(tau.rate == Approx(1.5 + sse / 2.0));

  // Shape c + n_k/2 = 4 with n_k = 4, so the Erlang cdf is exact.
  const auto even = state_for(spec, {0, 0, 0, 0}, 1.5);
  const auto post = precision_full_conditional(even, y, h, 0);
  REQUIRE(post.shape == 4.0);
  Rng rng(4);
  std::vector<double> taus(4000);
  for (double& t : taus) {
    const double s = sample_precisions(even, y, h, rng)[0];
    t = 1.0 / (s * s);
  }
  CHECK(ks_statistic(taus, [&](double x) { return erlang_cdf(x, 4, post.rate); }) <
        ks_critical(taus.size()));

  std::vector<double> lams(4000);
  Hyperparams hi = h;
  hi.a = 2.0;  // a + g c = 6
  const auto lp = lambda_full_conditional(state, hi);
  for (double& l : lams) l = sample_lambda(state, hi, rng);
  CHECK(ks_statistic(lams, [&](double x) { return erlang_cdf(x, 6, lp.rate); }) <
        ks_critical(lams.size()));
}

TEST_CASE("random-walk AR move") {
  // One allocated point, exact fit now and a unit residual after the move.
  const auto spec = fixtures::single_ar({0.5});
  const TimeSeries y({2.0, 1.0});
  const auto state = state_for(spec, {0});
  const std::vector<double> proposed = {1.0};
  const double lr = component_log_likelihood_ratio(spec, y, state.alloc, 0, proposed, 0.0);
  CHECK(std::exp(lr) == Approx(std::exp(-0.5)).epsilon(1e-14));

  // A proposal that is almost zero in size is accepted with probability near 1.
  Hyperparams h;
  h.fixed_shift = true;
  h.gamma = {1e16};
  Rng rng(5);
  const auto tiny = rwm_update_ar(state, y, h, 0, rng);
  CHECK(tiny.acceptance_probability == Approx(1.0).epsilon(1e-6));

  // Empty component: always accepted.
  const auto two = MARSpec::make({0.5, 0.5}, {0, 0}, {{0.5}, {0.1}}, {1, 1});
  const auto s2 = state_for(two, {0});
  h.gamma = {1.0};
  for (int i = 0; i < 50; ++i) {
    const auto move = rwm_update_ar(s2, y, h, 1, rng);
    CHECK(move.acceptance_probability == 1.0);
    CHECK(move.accepted);
  }
}

TEST_CASE("stability gate restores the whole previous state") {
  const auto y = simulate_ar1(0.5, 200, 6);
  auto h = default_hyperparams(y);
  const auto start = initial_state(y, 2, {1, 1}, h);
  REQUIRE(is_stable(start.spec).stable);

  Rng rng(7);
  auto cand = candidate_sweep(start, y, h, rng);
  cand.state.spec.ar[0] = {3.0};
  const auto gated = stability_gate(start, cand);
  CHECK(gated.stability_rejected);
  CHECK(gated.state.spec.ar == start.spec.ar);
  CHECK(gated.state.spec.weights == start.spec.weights);
  CHECK(gated.state.spec.scales == start.spec.scales);
  CHECK(gated.state.means == start.means);
  CHECK(gated.state.lambda == start.lambda);
  CHECK(gated.state.alloc.labels == start.alloc.labels);

  auto ok = candidate_sweep(start, y, h, rng);
  const auto kept = stability_gate(start, ok);
  CHECK_FALSE(kept.stability_rejected);
  CHECK(kept.state.spec.ar == ok.state.spec.ar);
}

TEST_CASE("every retained draw is stable and consistent") {
  const auto y = simulate_path(fixtures::model_a(), 300, 8);
  auto h = quick(y, 200, 600);
  h.keep_allocations = true;
  const auto out = run_chain(y, 2, {1, 1}, h, 9);
  CHECK(out.draws.size() == 400);
  for (const auto& d : out.draws) {
    CHECK(is_stable(d.spec).stable);
    const double wsum = std::accumulate(d.spec.weights.begin(), d.spec.weights.end(), 0.0);
    CHECK(std::abs(wsum - 1.0) < 1e-12);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(d.spec.shifts[k] == Approx(d.means[k] * (1.0 - d.spec.ar_sum(k))).epsilon(1e-12));
    }
    CHECK(d.alloc.labels.size() == y.size() - 1);
  }
}

TEST_CASE("fixed shift keeps every shift at zero") {
  const auto y = simulate_ar1(0.6, 300, 10);
  auto h = quick(y, 100, 400);
  h.fixed_shift = true;
  const auto out = run_chain(y, 2, {1, 2}, h, 11);
  for (const auto& d : out.draws) {
    CHECK(d.spec.shifts[0] == 0.0);
    CHECK(d.spec.shifts[1] == 0.0);
  }
}

TEST_CASE("chains are reproducible from the seed") {
  const auto y = simulate_ar1(0.3, 200, 12);
  const auto h = quick(y, 100, 300);
  const auto a = run_chain(y, 2, {1, 1}, h, 99);
  const auto b = run_chain(y, 2, {1, 1}, h, 99);
  const auto c = run_chain(y, 2, {1, 1}, h, 100);
  REQUIRE(a.draws.size() == b.draws.size());
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    all_same = all_same && a.draws[i].spec.ar == b.draws[i].spec.ar &&
               a.draws[i].spec.scales == b.draws[i].spec.scales;
    any_diff = any_diff || a.draws[i].spec.ar != c.draws[i].spec.ar;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("single-component AR(1) posterior mean is close to least squares") {
  const auto y = simulate_ar1(0.7, 2000, 13, 1.0);
  const auto h = quick(y, 1000, 4000);
  const auto out = run_chain(y, 1, {1}, h, 14);
  double phi = 0.0;
  for (const auto& d : out.draws) phi += d.spec.ar[0][0];
  phi /= static_cast<double>(out.draws.size());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) {
    sx += y[t - 1];
    sy += y[t];
    sxx += y[t - 1] * y[t - 1];
    sxy += y[t - 1] * y[t];
  }
  const double ls = (sxy - sx * sy / m) / (sxx - sx * sx / m);
  CHECK(std::abs(phi - ls) < 0.02);
}

TEST_CASE("tuned acceptance lands near the target") {
  const auto y = simulate_path(fixtures::model_a(), 500, 15);
  auto h = quick(y, 500, 2500);
  h.pilot_iters = 2000;
  const auto out = run_chain(y, 2, {1, 1}, h, 16);
  for (double acc : out.acceptance) {
    CHECK(acc >= 0.15);
    CHECK(acc <= 0.30);
  }
  CHECK(out.warnings.empty());
}

TEST_CASE("sampler targets the exact AR(1) posterior") {
  // g = 1, zero shift: the posterior of phi has a one-dimensional quadrature
  // once tau and lambda are integrated out.
  const auto y = simulate_ar1(0.5, 60, 17);
  auto h = quick(y, 2000, 42000);
  h.fixed_shift = true;
  h.gamma = {30.0};
  h.tune = false;
  const auto out = run_chain(y, 1, {1}, h, 18);

  const double n = static_cast<double>(y.size() - 1);
  auto log_post = [&](double phi) {
    double s = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
      const double e = y[t] - phi * y[t - 1];
      s += e * e;
    }
    // Integrate lambda on a log grid.
    std::vector<double> terms;
    const double du = 0.01;
    for (double u = -25.0; u <= 10.0; u += du) {
      const double lam = std::exp(u);
      terms.push_back(h.c * std::log(lam) - (h.c + n / 2) * std::log(lam + s / 2) +
                      (h.a - 1) * std::log(lam) - h.b * lam + u + std::log(du));
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
  };
  std::vector<double> grid, lp;
  for (double phi = -0.999; phi < 0.999; phi += 0.002) {
    grid.push_back(phi);
    lp.push_back(log_post(phi));
  }
  const double mx = *std::max_element(lp.begin(), lp.end());
  double z = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = std::exp(lp[i] - mx);
    z += w;
    m1 += w * grid[i];
    m2 += w * grid[i] * grid[i];
  }
  const double exact_mean = m1 / z;
  const double exact_sd = std::sqrt(m2 / z - exact_mean * exact_mean);

  double cm = 0, cs = 0;
  for (const auto& d : out.draws) {
    cm += d.spec.ar[0][0];
    cs += d.spec.ar[0][0] * d.spec.ar[0][0];
  }
  const double cnt = static_cast<double>(out.draws.size());
  cm /= cnt;
  const double csd = std::sqrt(cs / cnt - cm * cm);
  CHECK(std::abs(cm - exact_mean) < 0.1 * exact_sd);
  CHECK(csd == Approx(exact_sd).epsilon(0.05));
}
