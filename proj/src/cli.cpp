#include "barl/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "barl/config.hpp"
#include "barl/log_io.hpp"
#include "barl/svg_plot.hpp"

namespace fs = std::filesystem;

namespace barl {

namespace {

int do_run(const std::string& config_path, long long seed_override,
           const std::string& out_override) {
  ExperimentConfig cfg;
  try {
    cfg = parse_experiment_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
  if (!out_override.empty()) cfg.out_dir = out_override;

  try {
    fs::create_directories(cfg.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "cannot create output directory '" << cfg.out_dir << "': " << e.what()
              << "\n";
    return 2;
  }

  for (AcquisitionKind strategy : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      RunConfig rc = cfg.base;
      rc.acquisition = strategy;
      rc.seed = seed;
      std::string dir =
          cfg.out_dir + "/" + to_string(strategy) + "/seed_" + std::to_string(seed);
      std::cout << "running " << rc.env_name << " " << to_string(strategy) << " seed "
                << seed << " -> " << dir << std::endl;
      try {
        RunLog log = run_barl(rc);
        write_logs(log, dir);
        std::cout << "  queries = " << log.queries.size()
                  << ", solved_at = " << log.solved_at << std::endl;
      } catch (const std::exception& e) {
        std::cerr << "run failed (" << rc.env_name << ", " << to_string(strategy)
                  << ", seed " << seed << "): " << e.what() << "\n";
        return 3;
      }
    }
  }
  return 0;
}

int do_table(const std::string& out_dir) {
  try {
    auto runs = scan_runs(out_dir);
    if (runs.empty()) {
      std::cerr << "no completed runs under '" << out_dir << "'\n";
      return 2;
    }
    write_sample_complexity(out_dir, runs);
    std::cout << out_dir + "/sample_complexity.csv" << std::endl;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}

int do_plot(const std::string& out_dir) {
  try {
    auto runs = scan_runs(out_dir);
    if (runs.empty()) {
      std::cerr << "no completed runs under '" << out_dir << "'\n";
      return 2;
    }
    // env -> strategy -> per-seed curves
    std::map<std::string, std::map<std::string, std::vector<std::vector<CurvePoint>>>> by_env;
    std::map<std::string, double> gt_by_env;
    for (const auto& r : runs) {
      by_env[r.env][r.strategy].push_back(r.curve);
      gt_by_env[r.env] = r.gt_return;
    }
    for (const auto& [env, strategies] : by_env) {
      std::vector<AggregatedCurve> curves;
      for (const auto& [strategy, seed_curves] : strategies)
        curves.push_back(aggregate_curves(strategy, seed_curves));
      std::string name = by_env.size() == 1 ? "learning_curve.svg"
                                            : "learning_curve_" + env + ".svg";
      write_learning_curve_svg(out_dir + "/" + name, env, curves, gt_by_env[env]);
      std::cout << out_dir + "/" + name << std::endl;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Bayesian active reinforcement learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed_override = -1;

  CLI::App* run = app.add_subcommand("run", "execute seeded runs from a config file");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed_override, "run a single seed instead of the config list");
  run->add_option("--out", out_dir, "output directory override");

  CLI::App* table = app.add_subcommand("table", "aggregate queries-to-solved medians");
  table->add_option("--out", out_dir, "directory holding completed runs")->required();

  CLI::App* plot = app.add_subcommand("plot", "render learning-curve SVGs");
  plot->add_option("--out", out_dir, "directory holding completed runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return do_run(config_path, seed_override, out_dir);
  if (table->parsed()) return do_table(out_dir);
  if (plot->parsed()) return do_plot(out_dir);
  return 2;
}

}  // namespace barl
