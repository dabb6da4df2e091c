// tdrcap: capacity experiments for time-delay reservoirs.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tdr/config.hpp"
#include "tdr/error.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kInfeasible = 3, kNumericBudget = 4, kRuntime = 1 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::optional<bool> mc;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key = value experiment file")->required();
  sub->add_option("--seed", o.seed, "master seed (overrides the config)");
  sub->add_option("--out", o.out, "output CSV path (default: stdout)");
  sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag_function(
      "--mc,!--no-mc", [&o](std::int64_t count) { o.mc = count > 0; },
      "enable or disable Monte Carlo columns");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-delay reservoir capacity experiments"};
  app.require_subcommand(1);
  Options o;
  const char* names[] = {"surface", "robust-params", "robust-task", "optimize", "capacity"};
  const char* help[] = {"model vs Monte Carlo NMSE over a (d, eta) grid",
                        "NMSE under random reservoir parameters and masks",
                        "NMSE under random diagonal quadratic tasks",
                        "grid search maximizing model capacity",
                        "single-point evaluation"};
  for (int i = 0; i < 5; ++i) add_common(app.add_subcommand(names[i], help[i]), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  tdr::ExperimentConfig cfg;
  try {
    cfg = tdr::load_experiment_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.mc) cfg.mc = *o.mc;
  } catch (const tdr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }

  tdr::Table table;
  try {
    if (cmd == "surface")
      table = tdr::cmd_surface(cfg);
    else if (cmd == "robust-params")
      table = tdr::cmd_robust_params(cfg);
    else if (cmd == "robust-task")
      table = tdr::cmd_robust_task(cfg);
    else if (cmd == "optimize")
      table = tdr::cmd_optimize(cfg);
    else
      table = tdr::cmd_capacity(cfg);
  } catch (const tdr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == tdr::ErrorCode::kInvalidArgument ? kConfig : kRuntime;
  }

  if (o.out.empty()) {
    tdr::write_csv(std::cout, table);
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) {
      std::cerr << "cannot write " << o.out << '\n';
      return kRuntime;
    }
    tdr::write_csv(f, table);
  }

  if (cmd == "optimize") {
    for (const auto& row : table.rows)
      if (row.back() != tdr::flag::kOk) {
        std::cerr << "infeasible: no stable grid point for pool " << row[0] << " with "
                  << row[1] << " neurons\n";
        return kInfeasible;
      }
  }
  if (table.points > 0 && table.failed * 10 > table.points) {
    std::cerr << "numerical failures at " << table.failed << " of " << table.points
              << " points\n";
    return kNumericBudget;
  }
  return kOk;
}
