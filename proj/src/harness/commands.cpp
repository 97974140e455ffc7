#include <Eigen/Core>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "marbayes/harness.hpp"
#include "marbayes/parallel.hpp"
#include "marbayes/relabel.hpp"
#include "marbayes/stability.hpp"
#include "marbayes/summary.hpp"

namespace marbayes::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = MARBAYES_VERSION;

std::uint64_t fnv1a(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << x;
  return o.str();
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

std::size_t workers_for(const RunConfig& c) { return c.workers ? c.workers : worker_count(); }

json versions() {
  return {{"marbayes", kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path.string());
  o << std::setprecision(17) << j.dump(2) << '\n';
}

void write_config_echo(const fs::path& path, const RunConfig& c) {
  std::ofstream o(path);
  for (const auto& [k, v] : config_echo(c)) o << k << '=' << v << '\n';
}

struct Outputs {
  fs::path dir;
  json files = json::array();
  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

json summary_json(const ParameterSummary& s) {
  return {{"name", s.name},
          {"posterior_mean", s.posterior_mean},
          {"standard_error", s.standard_error},
          {"hpdr_90", {s.hpdr_90.first, s.hpdr_90.second}},
          {"hd_value", s.hd_value}};
}

json chain_stats(const ChainOutput& out) {
  return {{"acceptance", out.acceptance},
          {"pilot_acceptance", out.pilot_acceptance},
          {"gamma", out.gamma},
          {"stability_rejections", out.stability_rejections},
          {"chain_seed", out.seed},
          {"retained_draws", out.draws.size()}};
}

TimeSeries load_series(const RunConfig& c, json& warnings) {
  if (c.expected_length) {
    const auto raw = read_series_csv(c.input);
    if (raw.size() != c.expected_length)
      warnings.push_back("input has " + std::to_string(raw.size()) + " observations; the " + c.recipe +
                         " recipe expects " + std::to_string(c.expected_length));
  }
  return read_series_csv(c.input, c.log_transform, c.difference);
}

ChainOutput fit_chain(const TimeSeries& y, std::size_t g, const std::vector<std::size_t>& orders,
                      const Hyperparams& h, const RelabelConfig& rc, std::uint64_t seed) {
  auto out = run_chain(y, g, orders, h, seed);
  if (g > 1) {
    if (out.draws.size() >= rc.m) {
      out = relabel_chain(out, rc);
    } else {
      out.warnings.push_back("chain shorter than the relabelling warm start; draws left as sampled");
    }
  }
  return out;
}

json cmd_simulate(const RunConfig& c, Outputs& files) {
  const auto spec = model_spec(c);
  const auto st = is_stable(spec);
  if (!st.stable) {
    std::ostringstream msg;
    msg << "refusing to simulate: the model is not stable (spectral radius " << std::setprecision(17)
        << st.spectral_radius << ")";
    throw std::invalid_argument(msg.str());
  }
  const std::size_t n = c.n ? c.n : (c.model == "B" ? 600 : 300);
  const auto y = simulate_path(spec, n, c.seed, c.sim_burn);
  const auto path = files.add("series.csv");
  write_series_csv(path, y);
  return {{"rows", n}, {"spectral_radius", st.spectral_radius}, {"checksum", hex(fnv1a(path))}};
}

json cmd_fit(const RunConfig& c, Outputs& files, json& warnings) {
  const auto y = load_series(c, warnings);
  const auto h = hyperparams_for(c, y);
  const auto orders = orders_for(c);
  const auto out = fit_chain(y, c.g, orders, h, relabel_config_for(c), c.seed);
  for (const auto& w : out.warnings) warnings.push_back(w);
  write_draws_csv(files.add("draws.csv"), out, c.fixed_shift);
  json sums = json::array();
  for (const auto& t : parameter_traces(out, c.fixed_shift)) sums.push_back(summary_json(summarize(t.values, t.name)));
  write_json(files.add("summaries.json"), sums);
  json r = chain_stats(out);
  r["observations"] = y.size();
  r["orders"] = orders;
  r["hyperparams"] = {{"a", h.a}, {"b", h.b}, {"c", h.c}, {"zeta", h.zeta}, {"kappa", h.kappa}};
  return r;
}

json evidence_row(const EvidenceResult& e) {
  const auto& p = e.parts;
  return {{"g", e.g},
          {"orders", e.orders},
          {"preference", e.preference},
          {"log_marginal", e.log_marginal},
          {"log_g_prior", p.log_g_prior},
          {"parts",
           {{"log_likelihood", p.log_likelihood},
            {"log_prior", p.log_prior},
            {"log_phi_ordinate", p.log_phi_ordinate},
            {"log_mu_ordinate", p.log_mu_ordinate},
            {"log_tau_ordinate", p.log_tau_ordinate},
            {"log_pi_ordinate", p.log_pi_ordinate},
            {"log_order_prior", p.log_order_prior},
            {"log_order_posterior", p.log_order_posterior}}},
          {"ordinate_std_errors", e.ordinate_std_errors},
          {"warnings", e.warnings}};
}

json cmd_select(const RunConfig& c, Outputs& files, json& warnings) {
  const auto y = load_series(c, warnings);
  auto h = hyperparams_for(c, y);
  const auto sel = select_g(y, c.g_range, h, evidence_config_for(c), c.seed, workers_for(c));
  auto rows = sel.table;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.log_marginal > b.log_marginal; });
  json report = json::array();
  std::ofstream csv(files.add("report.csv"));
  csv << "g,orders,preference,log_marginal\n" << std::setprecision(17);
  for (const auto& e : rows) {
    report.push_back(evidence_row(e));
    std::string ord;
    for (std::size_t i = 0; i < e.orders.size(); ++i) ord += (i ? " " : "") + std::to_string(e.orders[i]);
    csv << e.g << ',' << ord << ',' << e.preference << ',' << e.log_marginal << '\n';
  }
  write_json(files.add("report.json"), report);
  return {{"best_g", sel.best_g}, {"rows", report.size()}};
}

json cmd_forecast(const RunConfig& c, Outputs& files, json& warnings) {
  const auto y = load_series(c, warnings);
  const auto draws = read_draws_csv(c.draws);
  ForecastRequest req;
  req.horizon = c.horizon;
  req.origin = c.origin.value_or(y.size() - 1);
  req.mode = c.mode == "exact" ? ForecastMode::exact : ForecastMode::monte_carlo;
  req.mc_paths = c.mc_paths;
  req.thin = c.thin;
  req.seed = c.seed;
  req.workers = workers_for(c);
  const auto r = posterior_averaged_forecast(draws, y, req);
  std::ofstream csv(files.add("forecast.csv"));
  csv << "x,mean,lo90,hi90\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.mean_density.abscissae.size(); ++i)
    csv << r.mean_density.abscissae[i] << ',' << r.mean_density.ordinates[i] << ',' << r.lower_90.ordinates[i]
        << ',' << r.upper_90.ordinates[i] << '\n';
  const double integral = r.mean_density.integral();
  if (std::abs(integral - 1.0) > 1e-3)
    warnings.push_back("forecast density integrates to " + std::to_string(integral) + " on the grid");
  return {{"draws_used", r.draws_used},
          {"origin", req.origin},
          {"horizon", req.horizon},
          {"integral", integral},
          {"integral_ok", std::abs(integral - 1.0) <= 1e-3}};
}

json cmd_replicate(const RunConfig& c, Outputs& files, json& warnings) {
  auto truth_spec = model_spec(c);
  const std::size_t g = truth_spec.components();
  const auto orders = truth_spec.orders();
  const std::size_t n = c.n ? c.n : (c.model == "B" ? 600 : 300);
  const std::size_t R = c.replicas;
  const auto rc = relabel_config_for(c);

  // Truth in the same scale-ordered labelling as the fitted replicas.
  ChainOutput truth_chain;
  ChainState ts;
  ts.spec = truth_spec;
  for (std::size_t k = 0; k < g; ++k) ts.means.push_back(truth_spec.mean(k).value_or(std::numeric_limits<double>::quiet_NaN()));
  truth_chain.draws.push_back(ts);
  truth_chain = order_components(truth_chain, RelabelParam::scales);
  const auto truth = parameter_traces(truth_chain, c.fixed_shift);

  std::vector<std::vector<ParameterTrace>> reps(R);
  std::vector<std::vector<std::string>> rep_warnings(R);
  parallel_for(R, workers_for(c), [&](std::size_t r) {
    const auto y = simulate_path(truth_spec, n, derive_seed(c.seed, r), c.sim_burn);
    const auto h = hyperparams_for(c, y);
    auto out = fit_chain(y, g, orders, h, rc, derive_seed(c.seed, 1000000 + r));
    out = order_components(out, RelabelParam::scales);
    reps[r] = parameter_traces(out, c.fixed_shift);
    rep_warnings[r] = out.warnings;
  });
  for (std::size_t r = 0; r < R; ++r)
    for (const auto& w : rep_warnings[r]) warnings.push_back("replica " + std::to_string(r) + ": " + w);

  json params = json::object();
  std::ofstream csv(files.add("replicate_density.csv"));
  csv << "parameter,x,density\n" << std::setprecision(17);
  for (std::size_t p = 0; p < truth.size(); ++p) {
    const auto& name = truth[p].name;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    json means = json::array();
    for (const auto& rep : reps) {
      for (double v : rep[p].values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double s = 0.0;
      for (double v : rep[p].values) s += v;
      means.push_back(s / static_cast<double>(rep[p].values.size()));
    }
    json entry = {{"l", lo}, {"u", hi}, {"replica_means", means}};
    const double tv = truth[p].values.front();
    entry["true_value"] = std::isfinite(tv) ? json(tv) : json(nullptr);
    if (!(hi > lo)) {
      entry["mode"] = lo;
      params[name] = entry;
      continue;
    }
    std::vector<DensityGrid> grids;
    for (const auto& rep : reps) grids.push_back(density_grid(rep[p].values, lo, hi));
    const auto avg = average_density(grids);
    const auto peak = std::max_element(avg.ordinates.begin(), avg.ordinates.end()) - avg.ordinates.begin();
    entry["mode"] = avg.abscissae[static_cast<std::size_t>(peak)];
    entry["integral"] = avg.integral();
    params[name] = entry;
    for (std::size_t i = 0; i < avg.abscissae.size(); ++i)
      csv << name << ',' << avg.abscissae[i] << ',' << avg.ordinates[i] << '\n';
  }
  write_json(files.add("replicate.json"), params);
  return {{"replicas", R}, {"observations", n}, {"parameters", params.size()}};
}

}  // namespace

nlohmann::json run_command(Command command, const RunConfig& config) {
  validate(config, command);
  const auto t0 = std::chrono::steady_clock::now();
  Outputs files{config.output};
  fs::create_directories(files.dir);
  json warnings = json::array();
  json manifest = {{"command", to_string(command)},
                   {"started_at", utc_now()},
                   {"seed", config.seed},
                   {"versions", versions()},
                   {"config", config_echo(config)},
                   {"seed_rule", "stream s of master seed m uses splitmix64(m + (s + 1) * 0x9E3779B97F4A7C15)"}};
  write_config_echo(files.add("config.txt"), config);

  json result;
  switch (command) {
    case Command::simulate: result = cmd_simulate(config, files); break;
    case Command::fit: result = cmd_fit(config, files, warnings); break;
    case Command::select: result = cmd_select(config, files, warnings); break;
    case Command::forecast: result = cmd_forecast(config, files, warnings); break;
    case Command::replicate: result = cmd_replicate(config, files, warnings); break;
  }
  manifest["result"] = result;
  manifest["warnings"] = warnings;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  files.files.push_back("manifest.json");
  manifest["outputs"] = files.files;
  write_json(files.dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace marbayes::harness
