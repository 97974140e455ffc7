#include <cmath>
#include <numeric>

#include "doctest.h"
#include "evidence_oracle.hpp"
#include "fixtures.hpp"
#include "marbayes/evidence.hpp"

using namespace marbayes;
using doctest::Approx;

namespace {

oracle::ToyPrior toy_prior(const Hyperparams& h) { return {h.a, h.b, h.c, h.zeta, h.kappa}; }

EvidenceConfig small_config() {
  EvidenceConfig c;
  c.n_j = 4000;
  c.n_i = 4000;
  c.reduced_burn = 200;
  c.orders.p_max = 1;
  return c;
}

Hyperparams short_chain(const TimeSeries& y) {
  auto h = default_hyperparams(y);
  h.burn_in = 1000;
  h.n_iter = 5000;
  h.pilot_iters = 1000;
  return h;
}

}  // namespace

TEST_CASE("joint precision prior") {
  Hyperparams h;
  h.a = 0.2;
  h.c = 2.0;
  h.b = 0.7;
  // g = 1: integrates to one (substitute tau = e^u). Tail decays like tau^-a.
  double total = 0.0;
  const double du = 0.001;
  for (double u = -40; u < 100; u += du) {
    const std::vector<double> tau = {std::exp(u)};
    total += std::exp(log_precision_prior(tau, h) + u) * du;
  }
  CHECK(total == Approx(1.0).epsilon(1e-4));

  // g = 2: matches integrating lambda out numerically.
  const std::vector<double> tau = {0.8, 2.5};
  double mix = 0.0;
  for (double u = -30; u < 10; u += du) {
    const double lam = std::exp(u);
    double dens = std::exp(h.a * std::log(h.b) - std::lgamma(h.a) + (h.a - 1) * u - h.b * lam);
    for (double t : tau) dens *= std::exp(h.c * u - std::lgamma(h.c) + (h.c - 1) * std::log(t) - lam * t);
    mix += dens * lam * du;
  }
  CHECK(std::exp(log_precision_prior(tau, h)) == Approx(mix).epsilon(1e-4));
}

TEST_CASE("log prior density") {
  Hyperparams h;
  h.zeta = 1.0;
  h.kappa = 0.5;
  h.b = 2.0;
  ChainState s;
  s.spec = MARSpec::make({0.3, 0.7}, {0.0, 0.0}, {{0.1}, {0.2}}, {1.0, 0.5});
  s.means = {0.4, 1.5};
  const std::vector<double> tau = {1.0, 4.0};
  const double expected = std::log(1.0) /* Dirichlet(1,1) density is 1 */ +
                          std::log(fixtures::normal_density(0.4, 1.0, std::sqrt(2.0))) +
                          std::log(fixtures::normal_density(1.5, 1.0, std::sqrt(2.0))) +
                          log_precision_prior(tau, h);
  CHECK(log_prior_density(s, h) == Approx(expected).epsilon(1e-12));
  h.fixed_shift = true;
  CHECK(log_prior_density(s, h) == Approx(log_precision_prior(tau, h)).epsilon(1e-12));
}

TEST_CASE("theta star is the best retained draw") {
  const auto y = simulate_path(fixtures::model_a(), 300, 1);
  const auto h = default_hyperparams(y);
  auto make = [](const MARSpec& spec) {
    ChainState s;
    s.spec = spec;
    s.means = {0.0, 0.0};
    return s;
  };
  ChainOutput out;
  out.draws.push_back(make(MARSpec::make({0.5, 0.5}, {0, 0}, {{0.5}, {0.2}}, {3.0, 0.3})));
  CHECK(select_theta_star(out, y, h).spec.ar == out.draws[0].spec.ar);
  out.draws.push_back(make(fixtures::model_a()));
  out.draws.push_back(make(MARSpec::make({0.9, 0.1}, {0, 0}, {{0.9}, {-0.9}}, {0.2, 5.0})));
  CHECK(select_theta_star(out, y, h).spec.ar == fixtures::model_a().ar);
  // Appending a worse draw changes nothing.
  out.draws.push_back(make(MARSpec::make({0.5, 0.5}, {0, 0}, {{0.0}, {0.0}}, {10.0, 10.0})));
  CHECK(select_theta_star(out, y, h).spec.ar == fixtures::model_a().ar);
  CHECK_THROWS_AS(select_theta_star(ChainOutput{}, y, h), std::invalid_argument);
}

TEST_CASE("estimate agrees with quadrature: AR(1), zero shift") {
  const auto y = simulate_path(fixtures::single_ar({0.5}), 120, 21);
  auto h = short_chain(y);
  h.fixed_shift = true;
  const double exact = oracle::log_evidence_ar1(y.values, toy_prior(h), false);
  const auto est = marginal_log_likelihood(y, 1, h, small_config(), 3);
  CHECK(est.orders == std::vector<std::size_t>{1});
  CHECK(est.parts.log_order_prior == 0.0);
  CHECK(est.parts.log_order_posterior == 0.0);
  CHECK(est.parts.log_mu_ordinate == 0.0);
  CHECK(est.parts.log_pi_ordinate == 0.0);
  CHECK(std::abs(est.log_marginal - exact) < 0.1);
}

TEST_CASE("estimate agrees with quadrature: AR(1) with a mean") {
  const auto y = simulate_path(fixtures::single_ar({0.5}, 1.0), 120, 22);
  const auto h = short_chain(y);
  const double exact = oracle::log_evidence_ar1(y.values, toy_prior(h), true);
  const auto est = marginal_log_likelihood(y, 1, h, small_config(), 4);
  CHECK(std::abs(est.log_marginal - exact) < 0.1);
  for (double se : est.ordinate_std_errors) CHECK(se < 0.05);
}

TEST_CASE("two-component evidence bookkeeping") {
  const auto y = simulate_path(fixtures::model_a(), 300, 1);
  auto h = short_chain(y);
  auto c = small_config();
  c.n_j = 1500;
  c.n_i = 1500;
  c.orders.p_max = 3;
  const auto r = marginal_log_likelihood(y, 2, h, c, 5);
  CHECK(std::abs(r.recompose() - r.log_marginal) < 1e-10);
  CHECK(std::isfinite(r.log_marginal));
  CHECK(r.parts.log_order_prior == Approx(-2.0 * std::log(3.0)));
  CHECK(r.parts.log_order_posterior <= 0.0);
  CHECK(r.preference > 0.0);
  CHECK(r.preference <= 1.0);
  CHECK(std::isfinite(r.parts.log_pi_ordinate));
  CHECK(r.parts.log_pi_ordinate != 0.0);
  CHECK(r.theta_star.spec.components() == 2);

  const auto again = marginal_log_likelihood(y, 2, h, c, 5);
  CHECK(again.log_marginal == r.log_marginal);
}

TEST_CASE("select_g over a single candidate") {
  const auto y = simulate_path(fixtures::model_a(), 200, 2);
  auto h = short_chain(y);
  h.n_iter = 2500;
  auto c = small_config();
  c.n_j = 500;
  c.n_i = 500;
  c.orders.p_max = 2;
  const auto s = select_g(y, {2}, h, c, 7, 2);
  CHECK(s.best_g == 2);
  CHECK(s.table.size() == 1);
  CHECK(s.table[0].parts.log_g_prior == 0.0);
  CHECK_THROWS_AS(select_g(y, {}, h, c, 7), std::invalid_argument);
}
