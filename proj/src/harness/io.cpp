#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "marbayes/harness.hpp"
#include "marbayes/summary.hpp"

namespace marbayes::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& x) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

void write_number(std::ostream& o, double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  o.write(buf, r.ptr - buf);
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path, bool log_transform, bool difference) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open series file " + path.string());
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.find(',') != std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected one column");
    double x = 0.0;
    if (!parse_number(t, x)) {
      if (v.empty() && !header_seen) {
        header_seen = true;
        continue;
      }
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": not a number: " + t);
    }
    if (!std::isfinite(x))
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
    v.push_back(x);
  }
  if (log_transform) {
    for (double& x : v) {
      if (!(x > 0.0)) throw std::invalid_argument("log transform needs positive values");
      x = std::log(x);
    }
  }
  if (difference) {
    if (v.size() < 2) throw std::invalid_argument("differencing needs at least two values");
    for (std::size_t i = 0; i + 1 < v.size(); ++i) v[i] = v[i + 1] - v[i];
    v.pop_back();
  }
  return TimeSeries(std::move(v));
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path.string());
  o << "y\n";
  for (double x : series.values) {
    write_number(o, x);
    o << '\n';
  }
}

void write_draws_csv(const std::filesystem::path& path, const ChainOutput& output, bool fixed_shift) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path.string());
  const auto traces = parameter_traces(output, fixed_shift);
  o << "iteration";
  for (const auto& t : traces) o << ',' << t.name;
  o << '\n';
  for (std::size_t i = 0; i < output.draws.size(); ++i) {
    o << output.draws[i].iteration;
    for (const auto& t : traces) {
      o << ',';
      write_number(o, t.values[i]);
    }
    o << '\n';
  }
}

ChainOutput read_draws_csv(const std::filesystem::path& path, bool* fixed_shift) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open draws file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty draws file " + path.string());
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  std::size_t g = 0;
  while (col.count("pi_" + std::to_string(g + 1))) ++g;
  if (g == 0) throw std::invalid_argument(path.string() + ": no pi_1 column");
  const bool has_mu = col.count("mu_1") > 0;
  if (fixed_shift) *fixed_shift = !has_mu;
  std::vector<std::size_t> orders(g, 0);
  for (std::size_t k = 0; k < g; ++k)
    while (col.count("phi_" + std::to_string(k + 1) + "_" + std::to_string(orders[k] + 1))) ++orders[k];

  auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw std::invalid_argument(path.string() + ": missing column " + name);
    return it->second;
  };

  ChainOutput out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
    auto num = [&](const std::string& name) {
      double x = 0.0;
      const auto& s = cells[need(name)];
      if (!parse_number(s, x))
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": bad value " + s);
      return x;
    };
    std::vector<double> w(g), shifts(g, 0.0), scales(g), means(g, 0.0);
    std::vector<std::vector<double>> ar(g);
    for (std::size_t k = 0; k < g; ++k) {
      const auto K = std::to_string(k + 1);
      w[k] = num("pi_" + K);
      scales[k] = num("sigma_" + K);
      for (std::size_t j = 0; j < orders[k]; ++j) ar[k].push_back(num("phi_" + K + "_" + std::to_string(j + 1)));
      if (has_mu) {
        means[k] = num("mu_" + K);
        shifts[k] = num("shift_" + K);
      }
    }
    ChainState s;
    s.spec = MARSpec::make(w, shifts, ar, scales);
    s.means = means;
    s.iteration = static_cast<std::size_t>(num("iteration"));
    out.draws.push_back(std::move(s));
  }
  return out;
}

}  // namespace marbayes::harness
