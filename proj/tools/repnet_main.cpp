#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"
#include "repnet/parallel.hpp"

namespace {

using Command = int (*)(const repnet::cli::RunConfig&);

struct Sub {
  const char* name;
  const char* help;
  Command cmd;
};

constexpr Sub kSubs[] = {
    {"net", "generate a Delone set (or a greedy net of --in) with its certificate", repnet::cli::cmd_net},
    {"perturb", "corona-gap perturbation of --in with histogram data", repnet::cli::cmd_perturb},
    {"graphify", "extract the sigma-graph of --in and check the metric sandwich", repnet::cli::cmd_graphify},
    {"schedule", "parameter schedule with its condition checks", repnet::cli::cmd_schedule},
    {"hierarchy", "build and verify the net hierarchy (cycle host unless --in graph)", repnet::cli::cmd_hierarchy},
    {"analyze", "repetitivity and persistence statistics of --in graph", repnet::cli::cmd_analyze},
    {"gdist", "2^-R distance between (--in, --x1) and (--in2, --x2)", repnet::cli::cmd_gdist},
    {"verify", "re-verify --in points against --certificate", repnet::cli::cmd_verify},
    {"pipeline", "net, perturb, graphify, schedule, hierarchy and analyze in one run", repnet::cli::cmd_pipeline},
};

std::string flag_of(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repnet: Delone sets, corona gaps and net hierarchies in repetitive graphs"};
  app.require_subcommand(1);
  std::string config_path;
  std::size_t workers = 0;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "worker threads for the parallel scans (REPNET_WORKERS)");

  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : kSubs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->fallthrough();
    for (const auto& key : repnet::cli::config_keys()) {
      sub->add_option_function<std::string>(
          flag_of(key), [&overrides, key](const std::string& v) { overrides[key] = v; }, "config override");
    }
    subs[s.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : repnet::cli::kExitConfig;
  }
  if (workers > 0) repnet::set_worker_count(workers);

  for (const auto& s : kSubs) {
    if (!subs[s.name]->parsed()) continue;
    auto load = [&]() -> repnet::cli::RunConfig {
      repnet::cli::RunConfig cfg;
      if (!config_path.empty()) repnet::cli::apply_settings(cfg, repnet::cli::read_config_file(config_path));
      repnet::cli::apply_settings(cfg, overrides);
      return cfg;
    };
    repnet::cli::RunConfig cfg;
    try {
      cfg = load();
    } catch (const std::exception& e) {
      std::cerr << "repnet " << s.name << ": config error: " << e.what() << "\n";
      return repnet::cli::kExitConfig;
    }
    return repnet::cli::run_guarded(s.name, s.cmd, cfg);
  }
  return repnet::cli::kExitConfig;
}
