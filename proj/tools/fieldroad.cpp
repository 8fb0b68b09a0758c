// Command-line front end: fieldroad <subcommand> [--config FILE] [--set key=value ...]

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fieldroad/cli.hpp"
#include "fieldroad/config.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string output_dir;
  int threads = 0;
  long seed = -1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "key = value configuration file");
  sub->add_option("-s,--set", c.sets, "override a key, e.g. --set model.D=2 (repeatable)");
  sub->add_option("-o,--output-dir", c.output_dir, "directory for CSV output and manifest.cfg");
  sub->add_option("-j,--threads", c.threads, "worker threads for sweeps");
  sub->add_option("--seed", c.seed, "seed for randomized property sampling");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fieldroad;
  CLI::App app{"Numerical lab for the field-road KPP system on a periodic strip"};
  app.require_subcommand(1);

  Common common;
  std::vector<double> alphas;
  bool halfplane = false;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "time-integrate from the configured initial data"},
      {"steady", "compute the nontrivial steady state on one period"},
      {"eigen", "principal eigenvalue lambda_R(alpha), or lambda(alpha) with --halfplane"},
      {"speed", "spreading speeds c*_R, or c* with --halfplane"},
      {"sweep", "cross-product parameter sweep over sweep.<key> lists"},
      {"front", "front tracking and speed estimate from a spreading run"},
      {"verify", "run every property check; exit 4 on failure"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    if (std::string(name) == "eigen") sub->add_option("--alpha", alphas, "twist values (repeatable)");
    if (std::string(name) == "eigen" || std::string(name) == "speed")
      sub->add_flag("--halfplane", halfplane, "take the R -> infinity limit along the R schedule");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig cfg;
  try {
    Settings s;
    if (!common.config.empty()) parse_config_file(s, common.config);
    s.set("command", app.get_subcommands().front()->get_name());
    for (const auto& a : common.sets) apply_override(s, a);
    if (!common.output_dir.empty()) s.set("output_dir", common.output_dir);
    if (common.threads > 0) s.set("threads", std::to_string(common.threads));
    if (common.seed >= 0) s.set("seed", std::to_string(common.seed));
    if (!alphas.empty()) {
      std::ostringstream os;
      for (std::size_t k = 0; k < alphas.size(); ++k) os << (k ? ", " : "") << fmt17(alphas[k]);
      s.set("spectral.alphas", os.str());
    }
    if (halfplane) s.set("spectral.halfplane", "true");
    cfg = resolve(s);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return run(cfg, std::cout, std::cerr);
}
