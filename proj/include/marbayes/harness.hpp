#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "marbayes/evidence.hpp"
#include "marbayes/forecast.hpp"

namespace marbayes::harness {

enum class Command { simulate, fit, select, forecast, replicate };
Command parse_command(const std::string& name);
std::string to_string(Command c);

// Every key a config file may set. Optional prior constants fall back to the
// data-driven defaults of default_hyperparams.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string input;
  std::string output = ".";
  std::string draws;
  std::string recipe = "none";  // none | ibm | lynx
  bool difference = false;
  bool log_transform = false;
  std::size_t expected_length = 0;

  std::string model = "A";  // A | B | custom
  std::size_t n = 0;        // 0: 300 for A, 600 for B
  std::size_t sim_burn = 500;
  std::vector<double> weights, shifts, scales;
  std::vector<std::vector<double>> ar;

  std::size_t g = 2;
  std::vector<std::size_t> orders;  // empty: all ones
  std::vector<std::size_t> g_range = {1, 2, 3};

  std::size_t burn_in = 10000;
  std::size_t n_iter = 20000;
  double a = 0.2;
  double c = 2.0;
  std::optional<double> zeta, kappa, b;
  std::vector<double> gamma;
  bool fixed_shift = false;
  bool tune = true;
  std::size_t pilot_iters = 2000;

  std::size_t p_max = 5;
  double birth_prob = 0.5;
  double half_width = 1.5;
  bool literal_death = false;

  std::size_t relabel_m = 200;
  std::vector<std::string> relabel_params = {"weights", "scales"};

  std::size_t n_j = 10000;
  std::size_t n_i = 10000;
  std::size_t reduced_burn = 500;

  std::size_t horizon = 1;
  std::optional<std::size_t> origin;  // default: last observation
  std::string mode = "exact";         // exact | monte_carlo
  std::size_t mc_paths = 10000;
  std::size_t thin = 10;

  std::size_t replicas = 20;
  std::size_t workers = 0;  // 0: MARBAYES_WORKERS or hardware concurrency
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// "key=value" with surrounding blanks trimmed. Throws on a missing '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);
// One assignment per line; blank lines and lines starting with '#' skipped.
KeyValues read_config_file(const std::filesystem::path& path);
// Applies recipe defaults first, then the pairs in order. Unknown keys and
// malformed values throw std::invalid_argument naming the key.
RunConfig parse_config(const KeyValues& pairs);
// Every key with its effective value, in a form parse_config accepts.
std::map<std::string, std::string> config_echo(const RunConfig& config);
// Checks the fields the command needs; throws std::invalid_argument.
void validate(const RunConfig& config, Command command);

Hyperparams hyperparams_for(const RunConfig& config, const TimeSeries& series);
OrderMoveConfig order_config_for(const RunConfig& config);
RelabelConfig relabel_config_for(const RunConfig& config);
EvidenceConfig evidence_config_for(const RunConfig& config);
MARSpec model_spec(const RunConfig& config);
std::vector<std::size_t> orders_for(const RunConfig& config);

// Headerless or single-header one-column CSV. Optional log (before) and first
// difference (after) transforms. Throws on non-numeric or non-finite values.
TimeSeries read_series_csv(const std::filesystem::path& path, bool log_transform = false,
                           bool difference = false);
void write_series_csv(const std::filesystem::path& path, const TimeSeries& series);

// Column "iteration" then the parameter_traces columns; 17 significant digits.
void write_draws_csv(const std::filesystem::path& path, const ChainOutput& output, bool fixed_shift);
// Rebuilds draws from a file written by write_draws_csv. fixed_shift is
// inferred from the absence of mu columns.
ChainOutput read_draws_csv(const std::filesystem::path& path, bool* fixed_shift = nullptr);

// Runs a command and writes its files under config.output. Returns the
// manifest, which is also written to manifest.json.
nlohmann::json run_command(Command command, const RunConfig& config);

}  // namespace marbayes::harness
