// corl: run, sweep and validate multi-robot navigation experiments.
//
//   corl run      --config cfg.json [--algo NAME] [--seed INT] --out metrics.json [--traj traj.csv]
//   corl sweep    --config cfg.json [--seed INT] --out metrics.json [--table runs.csv] [--jobs N]
//   corl validate --config cfg.json
//   corl check    --metrics metrics.json
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "corl/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Options {
  std::string config;
  std::string algo;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string traj;
  std::string table;
  std::string metrics;
  int jobs{1};
};

corl::ExperimentConfig load(const Options& o) {
  corl::ExperimentConfig c = o.config.empty() ? corl::parse_config(nlohmann::json::object()) : corl::load_config(o.config);
  if (!o.algo.empty()) {
    try {
      c.algorithms = {corl::algorithm_from_string(o.algo)};
    } catch (const std::exception& e) {
      throw corl::ConfigError(std::string("--algo: ") + e.what());
    }
  }
  if (o.seed) c.seed_base = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (!o.traj.empty()) c.traj = o.traj;
  const auto errors = corl::validate_config(c);
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw corl::ConfigError(msg);
  }
  if (o.jobs < 1) throw corl::ConfigError("--jobs must be >= 1");
  return c;
}

void emit(const corl::ExperimentConfig& c, const corl::ExperimentResult& res, const Options& o) {
  const std::string doc = corl::dump_metrics(res.metrics);
  // render everything first so a failure cannot leave a subset of files
  std::string traj;
  if (c.traj) traj = corl::render_trajectories(res.trajectories);
  std::string table;
  if (!o.table.empty()) table = corl::render_runs_csv(res.metrics);

  if (c.out) corl::write_file_atomic(*c.out, doc);
  else std::cout << doc;
  if (c.traj) corl::write_file_atomic(*c.traj, traj);
  if (!o.table.empty()) corl::write_file_atomic(o.table, table);
}

int cmd_run(const Options& o) {
  const auto c = load(o);
  const auto cells = corl::expand_cells(c);
  if (cells.size() != 1)
    throw corl::ConfigError("run expects exactly one scenario size and one algorithm (got " +
                            std::to_string(cells.size()) + " cells); use sweep for grids");
  emit(c, corl::execute(c, cells, o.jobs, c.traj.has_value()), o);
  return kOk;
}

int cmd_sweep(const Options& o) {
  const auto c = load(o);
  const auto cells = corl::expand_cells(c);
  emit(c, corl::execute(c, cells, o.jobs, c.traj.has_value()), o);
  return kOk;
}

int cmd_validate(const Options& o) {
  (void)load(o);
  std::cout << "ok\n";
  return kOk;
}

int cmd_check(const Options& o) {
  std::ifstream in(o.metrics);
  if (!in) throw corl::ConfigError("cannot open metrics '" + o.metrics + "'");
  corl::ojson doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw corl::ConfigError(std::string("metrics file is not valid JSON: ") + e.what());
  }
  const auto problems = corl::verify_metrics(doc);
  for (const auto& p : problems) std::cerr << p << "\n";
  if (!problems.empty()) return kRuntimeError;
  std::cout << "ok\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided, chance-constrained MPPI for multi-robot navigation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment configuration (JSON)");
  };
  auto* run = app.add_subcommand("run", "run one scenario cell");
  add_common(run);
  run->add_option("--algo", o.algo, "corl-mppi | mppi-orca | mppi | orca-dd");
  run->add_option("--seed", o.seed, "seed base");
  run->add_option("--out", o.out, "metrics document path (stdout if omitted)");
  run->add_option("--traj", o.traj, "per-step trajectory CSV");
  run->add_option("--table", o.table, "per-run CSV table");
  run->add_option("--jobs", o.jobs, "worker threads");

  auto* sweep = app.add_subcommand("sweep", "run every scenario size x algorithm cell");
  add_common(sweep);
  sweep->add_option("--algo", o.algo, "restrict to one algorithm");
  sweep->add_option("--seed", o.seed, "seed base");
  sweep->add_option("--out", o.out, "metrics document path (stdout if omitted)");
  sweep->add_option("--traj", o.traj, "per-step trajectory CSV");
  sweep->add_option("--table", o.table, "per-run CSV table");
  sweep->add_option("--jobs", o.jobs, "worker threads");

  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  add_common(validate);
  validate->add_option("--algo", o.algo, "algorithm override");

  auto* check = app.add_subcommand("check", "recompute aggregates of a metrics document");
  check->add_option("--metrics", o.metrics, "metrics document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*validate) return cmd_validate(o);
    if (*check) return cmd_check(o);
  } catch (const corl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
