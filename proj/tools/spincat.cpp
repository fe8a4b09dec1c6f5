// spincat: experiments front end.
//
//   spincat <ground|coeffs|qfunc|lossmap|jumps|figure ID> [--config FILE]
//           [--set key=value]... [--jobs N] [--out DIR] [--seed S]

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"

namespace {

using namespace spincat;

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  int jobs = 0;
  std::string out_dir;
  std::string seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "key = value config file");
  app->add_option("--set", c.overrides, "override a config key (key=value)")->take_all();
  app->add_option("--jobs", c.jobs, "worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--out", c.out_dir, "output directory (default: $SPINCAT_OUT or .)");
  app->add_option("--seed", c.seed, "64-bit RNG seed");
}

cli::ExperimentConfig load(const Common& c) {
  cli::ExperimentConfig cfg;
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  for (const auto& o : c.overrides) cfg.apply_override(o);
  if (!c.seed.empty()) cfg.set("seed", c.seed);
  (void)cfg.seed();
  return cfg;
}

std::filesystem::path output_dir(const Common& c, const cli::ExperimentConfig& cfg,
                                 const std::string& leaf) {
  std::filesystem::path root = ".";
  if (const char* env = std::getenv("SPINCAT_OUT"); env && *env) root = env;
  if (cfg.has("output.dir")) root = cfg.str("output.dir");
  if (!c.out_dir.empty()) return c.out_dir;
  return root / leaf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin cat states in two-component condensates"};
  app.require_subcommand(1);
  Common common;
  std::string figure_id;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ground", "relax one two-component ground state"},
      {"coeffs", "fit the eta_k expansion (optionally over a sweep)"},
      {"qfunc", "Husimi Q fields at requested times"},
      {"lossmap", "cat-size phase diagram against atom loss"},
      {"jumps", "quantum-jump ensemble under one-body loss"},
      {"figure", "dataset bundle for a named figure"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    subs[name] = sub;
  }
  subs["figure"]->add_option("id", figure_id, "figure id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  try {
    const auto cfg = load(common);
    if (common.jobs > 0) kernels::set_threads(common.jobs);
    if (command == "figure") cli::check_figure_id(figure_id);
    const auto leaf = command == "figure" ? figure_id : command;
    cli::RunManifest out(output_dir(common, cfg, leaf),
                         command == "figure" ? "figure " + figure_id : command, cfg);
    int rc = 0;
    try {
      if (command == "ground") rc = cli::cmd_ground(cfg, out);
      if (command == "coeffs") rc = cli::cmd_coeffs(cfg, out);
      if (command == "qfunc") rc = cli::cmd_qfunc(cfg, out);
      if (command == "lossmap") rc = cli::cmd_lossmap(cfg, out);
      if (command == "jumps") rc = cli::cmd_jumps(cfg, out);
      if (command == "figure") rc = cli::cmd_figure(figure_id, cfg, out);
    } catch (const std::exception& e) {
      rc = exit_code(e);
      out.point(command, "failed", e.what());
      out.finish(rc);
      throw;
    }
    out.finish(rc);
    if (rc != 0) std::cerr << "spincat: some points failed; see manifest.json\n";
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "spincat: " << e.what() << '\n';
    return exit_code(e);
  }
}
