#include <iostream>

#include "CLI11.hpp"
#include "marbayes/harness.hpp"

using namespace marbayes::harness;

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixture autoregressive models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("marbayes ") + MARBAYES_VERSION);

  struct Args {
    std::string config;
    std::vector<std::string> sets;
  };
  std::map<std::string, Args> args;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate a path from model A, B or a custom spec"},
      {"fit", "run the Gibbs sampler at fixed orders and summarise"},
      {"select", "choose g by reversible jump and marginal likelihood"},
      {"forecast", "posterior-averaged predictive density from a draws file"},
      {"replicate", "repeat simulate and fit, then average posterior densities"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    auto& a = args[name];
    sub->add_option("-c,--config", a.config, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("settings", a.sets, "key=value overrides, applied after the config file");
    sub->add_option("--set", a.sets, "key=value override");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (auto* sub : app.get_subcommands()) {
      const auto& a = args[sub->get_name()];
      KeyValues kv;
      if (!a.config.empty()) kv = read_config_file(a.config);
      for (const auto& s : a.sets) kv.push_back(split_assignment(s));
      const auto config = parse_config(kv);
      const auto manifest = run_command(parse_command(sub->get_name()), config);
      std::cout << sub->get_name() << ": wrote";
      for (const auto& f : manifest["outputs"]) std::cout << ' ' << f.get<std::string>();
      std::cout << " in " << config.output << '\n';
      for (const auto& w : manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
      std::cout << manifest["result"].dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
