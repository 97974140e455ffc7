#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "marbayes/harness.hpp"

namespace marbayes::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& what) {
  throw std::invalid_argument("config: " + key + "=" + value + ": " + what);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
    bad(key, v, "expected a finite number");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty())
    bad(key, v, "expected a nonnegative integer");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  bad(key, v, "expected true or false");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(to_double(key, s));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& s : split(v, ',')) out.push_back(to_u64(key, s));
  return out;
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += f(v[i]);
  }
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  return join<double>(v, [](const double& x) { return fmt(x); });
}
std::string join_sizes(const std::vector<std::size_t>& v) {
  return join<std::size_t>(v, [](const std::size_t& x) { return std::to_string(x); });
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size = [](std::size_t RunConfig::*f) {
      return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_u64(k, v); };
    };
    auto real = [](double RunConfig::*f) {
      return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_double(k, v); };
    };
    auto flag = [](bool RunConfig::*f) {
      return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_bool(k, v); };
    };
    auto text = [](std::string RunConfig::*f) {
      return [f](RunConfig& c, const std::string&, const std::string& v) { c.*f = v; };
    };
    auto maybe = [](std::optional<double> RunConfig::*f) {
      return [f](RunConfig& c, const std::string& k, const std::string& v) {
        if (v == "auto") c.*f = std::nullopt;
        else c.*f = to_double(k, v);
      };
    };
    auto reals = [](std::vector<double> RunConfig::*f) {
      return [f](RunConfig& c, const std::string& k, const std::string& v) { c.*f = to_doubles(k, v); };
    };

    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
    t["input"] = text(&RunConfig::input);
    t["output"] = text(&RunConfig::output);
    t["draws"] = text(&RunConfig::draws);
    t["recipe"] = text(&RunConfig::recipe);
    t["difference"] = flag(&RunConfig::difference);
    t["log_transform"] = flag(&RunConfig::log_transform);
    t["expected_length"] = size(&RunConfig::expected_length);
    t["model"] = text(&RunConfig::model);
    t["n"] = size(&RunConfig::n);
    t["sim_burn"] = size(&RunConfig::sim_burn);
    t["weights"] = reals(&RunConfig::weights);
    t["shifts"] = reals(&RunConfig::shifts);
    t["scales"] = reals(&RunConfig::scales);
    t["ar"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.ar.clear();
      for (const auto& group : split(v, ';')) c.ar.push_back(to_doubles(k, group));
    };
    t["g"] = size(&RunConfig::g);
    t["orders"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.orders = to_sizes(k, v); };
    t["g_range"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.g_range = to_sizes(k, v); };
    t["burn_in"] = size(&RunConfig::burn_in);
    t["n_iter"] = size(&RunConfig::n_iter);
    t["a"] = real(&RunConfig::a);
    t["c"] = real(&RunConfig::c);
    t["zeta"] = maybe(&RunConfig::zeta);
    t["kappa"] = maybe(&RunConfig::kappa);
    t["b"] = maybe(&RunConfig::b);
    t["gamma"] = reals(&RunConfig::gamma);
    t["fixed_shift"] = flag(&RunConfig::fixed_shift);
    t["tune"] = flag(&RunConfig::tune);
    t["pilot_iters"] = size(&RunConfig::pilot_iters);
    t["p_max"] = size(&RunConfig::p_max);
    t["birth_prob"] = real(&RunConfig::birth_prob);
    t["half_width"] = real(&RunConfig::half_width);
    t["literal_death"] = flag(&RunConfig::literal_death);
    t["relabel_m"] = size(&RunConfig::relabel_m);
    t["relabel_params"] = [](RunConfig& c, const std::string&, const std::string& v) { c.relabel_params = split(v, ','); };
    t["n_j"] = size(&RunConfig::n_j);
    t["n_i"] = size(&RunConfig::n_i);
    t["reduced_burn"] = size(&RunConfig::reduced_burn);
    t["horizon"] = size(&RunConfig::horizon);
    t["origin"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "auto") c.origin = std::nullopt;
      else c.origin = to_u64(k, v);
    };
    t["mode"] = text(&RunConfig::mode);
    t["mc_paths"] = size(&RunConfig::mc_paths);
    t["thin"] = size(&RunConfig::thin);
    t["replicas"] = size(&RunConfig::replicas);
    t["workers"] = size(&RunConfig::workers);
    return t;
  }();
  return table;
}

void apply_recipe(RunConfig& c, const std::string& recipe) {
  if (recipe == "none") return;
  if (recipe == "ibm") {
    c.difference = true;
    c.fixed_shift = true;
    c.g = 3;
    c.orders = {4, 1, 1};
    c.expected_length = 369;
  } else if (recipe == "lynx") {
    c.log_transform = true;
    c.g = 2;
    c.orders = {1, 2};
    c.expected_length = 111;
  } else {
    bad("recipe", recipe, "expected none, ibm or lynx");
  }
  c.recipe = recipe;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::simulate;
  if (name == "fit") return Command::fit;
  if (name == "select") return Command::select;
  if (name == "forecast") return Command::forecast;
  if (name == "replicate") return Command::replicate;
  throw std::invalid_argument("unknown command: " + name);
}

std::string to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::fit: return "fit";
    case Command::select: return "select";
    case Command::forecast: return "forecast";
    case Command::replicate: return "replicate";
  }
  return "";
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("config: expected key=value, got '" + text + "'");
  auto key = trim(text.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("config: empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  KeyValues out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(split_assignment(t));
  }
  return out;
}

RunConfig parse_config(const KeyValues& pairs) {
  RunConfig c;
  for (const auto& [k, v] : pairs)
    if (k == "recipe") c.recipe = v;
  apply_recipe(c, c.recipe);
  const auto& table = setters();
  for (const auto& [k, v] : pairs) {
    const auto it = table.find(k);
    if (it == table.end()) throw std::invalid_argument("config: unknown key '" + k + "'");
    it->second(c, k, v);
  }
  return c;
}

std::map<std::string, std::string> config_echo(const RunConfig& c) {
  auto opt = [](const std::optional<double>& x) { return x ? fmt(*x) : std::string("auto"); };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(c.seed);
  m["input"] = c.input;
  m["output"] = c.output;
  m["draws"] = c.draws;
  m["recipe"] = c.recipe;
  m["difference"] = b(c.difference);
  m["log_transform"] = b(c.log_transform);
  m["expected_length"] = std::to_string(c.expected_length);
  m["model"] = c.model;
  m["n"] = std::to_string(c.n);
  m["sim_burn"] = std::to_string(c.sim_burn);
  m["weights"] = join_doubles(c.weights);
  m["shifts"] = join_doubles(c.shifts);
  m["scales"] = join_doubles(c.scales);
  m["ar"] = join<std::vector<double>>(c.ar, [](const std::vector<double>& v) { return join_doubles(v); }, ';');
  m["g"] = std::to_string(c.g);
  m["orders"] = join_sizes(c.orders);
  m["g_range"] = join_sizes(c.g_range);
  m["burn_in"] = std::to_string(c.burn_in);
  m["n_iter"] = std::to_string(c.n_iter);
  m["a"] = fmt(c.a);
  m["c"] = fmt(c.c);
  m["zeta"] = opt(c.zeta);
  m["kappa"] = opt(c.kappa);
  m["b"] = opt(c.b);
  m["gamma"] = join_doubles(c.gamma);
  m["fixed_shift"] = b(c.fixed_shift);
  m["tune"] = b(c.tune);
  m["pilot_iters"] = std::to_string(c.pilot_iters);
  m["p_max"] = std::to_string(c.p_max);
  m["birth_prob"] = fmt(c.birth_prob);
  m["half_width"] = fmt(c.half_width);
  m["literal_death"] = b(c.literal_death);
  m["relabel_m"] = std::to_string(c.relabel_m);
  m["relabel_params"] = join<std::string>(c.relabel_params, [](const std::string& s) { return s; });
  m["n_j"] = std::to_string(c.n_j);
  m["n_i"] = std::to_string(c.n_i);
  m["reduced_burn"] = std::to_string(c.reduced_burn);
  m["horizon"] = std::to_string(c.horizon);
  m["origin"] = c.origin ? std::to_string(*c.origin) : "auto";
  m["mode"] = c.mode;
  m["mc_paths"] = std::to_string(c.mc_paths);
  m["thin"] = std::to_string(c.thin);
  m["replicas"] = std::to_string(c.replicas);
  m["workers"] = std::to_string(c.workers);
  return m;
}

void validate(const RunConfig& c, Command command) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (c.g < 1) fail("g must be >= 1");
  if (c.p_max < 1) fail("p_max must be >= 1");
  if (c.burn_in >= c.n_iter) fail("burn_in must be smaller than n_iter");
  for (double x : c.gamma)
    if (!(x > 0.0)) fail("gamma entries must be positive");
  if (!(c.a > 0.0) || !(c.c > 0.0)) fail("a and c must be positive");
  if (c.kappa && !(*c.kappa > 0.0)) fail("kappa must be positive");
  if (c.b && !(*c.b > 0.0)) fail("b must be positive");
  if (c.recipe != "none" && c.recipe != "ibm" && c.recipe != "lynx") fail("recipe must be none, ibm or lynx");
  if (c.mode != "exact" && c.mode != "monte_carlo") fail("mode must be exact or monte_carlo");
  if (c.model != "A" && c.model != "B" && c.model != "custom") fail("model must be A, B or custom");
  order_config_for(c).validate();
  relabel_config_for(c).validate();

  const bool needs_input = command == Command::fit || command == Command::select || command == Command::forecast;
  if (needs_input && c.input.empty()) fail("input is required for " + to_string(command));
  if (command == Command::forecast && c.draws.empty()) fail("draws is required for forecast");

  if (command == Command::fit) {
    if (!c.orders.empty() && c.orders.size() != c.g) fail("orders must have g entries");
    for (auto p : c.orders)
      if (p < 1) fail("orders must be >= 1");
    if (!c.gamma.empty() && c.gamma.size() != c.g) fail("gamma must have g entries");
    if (c.n_iter - c.burn_in < 100) fail("fit needs at least 100 retained draws");
  }
  if (command == Command::select) {
    if (c.g_range.empty()) fail("g_range must not be empty");
    for (auto g : c.g_range)
      if (g < 1) fail("g_range entries must be >= 1");
    if (!c.gamma.empty()) fail("gamma is tuned per g in select; leave it empty");
    if (c.n_i == 0 || c.n_j == 0) fail("n_i and n_j must be positive");
  }
  if (command == Command::forecast) {
    if (c.horizon < 1) fail("horizon must be >= 1");
    if (c.thin < 1) fail("thin must be >= 1");
    if (c.mc_paths < 1) fail("mc_paths must be >= 1");
  }
  if (command == Command::simulate || command == Command::replicate) {
    if (c.model == "custom") {
      const auto g = c.weights.size();
      if (g == 0 || c.shifts.size() != g || c.scales.size() != g || c.ar.size() != g)
        fail("custom model needs weights, shifts, scales and ar with one entry per component");
    }
    (void)model_spec(c);
  }
  if (command == Command::replicate) {
    if (c.replicas < 1) fail("replicas must be >= 1");
    if (c.n_iter - c.burn_in < 100) fail("replicate needs at least 100 retained draws per replica");
  }
}

Hyperparams hyperparams_for(const RunConfig& c, const TimeSeries& series) {
  Hyperparams h = default_hyperparams(series);
  h.a = c.a;
  h.c = c.c;
  if (c.zeta) h.zeta = *c.zeta;
  if (c.kappa) h.kappa = *c.kappa;
  if (c.b) h.b = *c.b;
  h.gamma = c.gamma;
  h.fixed_shift = c.fixed_shift;
  h.p_max = c.p_max;
  h.burn_in = c.burn_in;
  h.n_iter = c.n_iter;
  h.tune = c.tune;
  h.pilot_iters = c.pilot_iters;
  return h;
}

OrderMoveConfig order_config_for(const RunConfig& c) {
  OrderMoveConfig o;
  o.p_max = c.p_max;
  o.birth_prob = c.birth_prob;
  o.half_width = c.half_width;
  o.literal_death_factor = c.literal_death;
  return o;
}

RelabelConfig relabel_config_for(const RunConfig& c) {
  RelabelConfig r;
  r.m = c.relabel_m;
  r.subset.clear();
  for (const auto& s : c.relabel_params) r.subset.push_back(parse_relabel_param(s));
  return r;
}

EvidenceConfig evidence_config_for(const RunConfig& c) {
  EvidenceConfig e;
  e.n_j = c.n_j;
  e.n_i = c.n_i;
  e.reduced_burn = c.reduced_burn;
  e.relabel = relabel_config_for(c);
  e.orders = order_config_for(c);
  e.g_candidates = c.g_range.size();
  return e;
}

MARSpec model_spec(const RunConfig& c) {
  if (c.model == "A") return MARSpec::make({0.5, 0.5}, {0.0, 0.0}, {{-0.5}, {1.0}}, {1.0, 2.0});
  if (c.model == "B")
    return MARSpec::make({0.5, 0.3, 0.2}, {0.0, 0.0, 0.0}, {{-0.5, 0.5}, {-0.4}, {1.0}}, {1.0, 2.0, 4.0});
  return MARSpec::make(c.weights, c.shifts, c.ar, c.scales);
}

std::vector<std::size_t> orders_for(const RunConfig& c) {
  return c.orders.empty() ? std::vector<std::size_t>(c.g, 1) : c.orders;
}

}  // namespace marbayes::harness
