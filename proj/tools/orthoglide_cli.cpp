// Command-line laboratory for the Orthoglide simulator: closed-loop runs,
// controller-comparison grids, vision-sensor characterization, and the
// self-verification suites.
//
// Exit codes: 0 success, 1 runtime failure (diverged simulation, failed
// verification suite, ...), 2 configuration error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "orthoglide/config.hpp"
#include "orthoglide/experiment.hpp"
#include "orthoglide/simulator.hpp"
#include "orthoglide/verify.hpp"

namespace {

using namespace orthoglide;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::int64_t seed = -1;  // < 0 keeps the config value
};

Config load_config(const CommonOpts& opts) {
  Config c = opts.config_path.empty() ? Config::defaults()
                                      : Config::from_file(opts.config_path);
  if (opts.seed >= 0) c.set("sim.seed", std::to_string(opts.seed));
  return c;
}

// Stream to --out, or stdout when no path is given.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_simulate(const CommonOpts& opts) {
  const Config c = load_config(opts);
  const SimConfig sim = build_sim_config(c);
  const Path path = Path::make(build_path_spec(c), sim.true_params.geom);
  const SimLog log = run_simulation(sim, path);
  const Metrics m = compute_metrics(log, c.get_double("sim.settle_skip"));
  OutputTarget out(opts.out_path);
  write_log_csv(log, out.stream());
  std::cerr << "controller=" << c.get("controller.kind")
            << " duration=" << path.duration() << " s"
            << " samples=" << log.records.size()
            << " static=" << round_um(m.static_accuracy) << " um"
            << " dynamic=" << round_um(m.dynamic_accuracy) << " um"
            << " max=" << round_um(m.max_error) << " um\n";
  return 0;
}

int cmd_grid(const CommonOpts& opts, int jobs) {
  Config c = load_config(opts);
  if (opts.seed >= 0) c.set("grid.base_seed", std::to_string(opts.seed));
  const GridResult grid = run_grid(c, jobs);
  OutputTarget out(opts.out_path);
  write_grid_csv(grid, out.stream());
  bool any_failed = false;
  for (const GridRow& r : grid.rows) {
    if (r.status != "ok") {
      any_failed = true;
      std::cerr << "cell failed: " << r.controller << '/' << r.path << '/'
                << r.sensor_level << '/' << r.identification << ": "
                << r.status << '\n';
    }
  }
  return any_failed ? 1 : 0;
}

int cmd_characterize(const CommonOpts& opts) {
  const Config c = load_config(opts);
  const CharacterizeResult r = run_characterization(c);
  OutputTarget out(opts.out_path);
  write_characterize_csv(r, out.stream());
  std::cerr << "calibrated blur_gain=" << r.blur_gain << " m per (m/s^2)\n";
  return 0;
}

int cmd_verify(const CommonOpts& opts, const std::string& suite) {
  const Config c = load_config(opts);
  const MachineParams p = build_true_params(c);
  const auto results = run_verification(p, suite, c.get_seed("sim.seed") + 1);
  if (results.empty()) throw ConfigError("unknown verification suite: " + suite);
  bool all_pass = true;
  for (const SuiteResult& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  worst=" << r.worst
              << " threshold=" << r.threshold;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ')';
    std::cout << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int cmd_config_dump(const CommonOpts& opts) {
  const Config c = load_config(opts);
  OutputTarget out(opts.out_path);
  c.dump(out.stream());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthoglide parallel-machine simulation laboratory"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string suite = "all";
  int jobs = 1;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "configuration file");
    sub->add_option("--seed", opts.seed, "override the run seed");
    sub->add_option("--out", opts.out_path, "output file (default stdout)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one closed-loop simulation");
  add_common(simulate);
  CLI::App* grid = app.add_subcommand("grid", "run the controller-comparison grid");
  add_common(grid);
  grid->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI::App* charac = app.add_subcommand("sensor-characterize",
                                        "calibrate and sweep the vision sensor");
  add_common(charac);
  CLI::App* verify = app.add_subcommand("verify", "run the self-verification suites");
  add_common(verify);
  verify->add_option("--suite", suite,
                     "all | kinematics | jacobians | dynamics | energy");
  CLI::App* config = app.add_subcommand("config", "configuration utilities");
  CLI::App* dump = config->add_subcommand("dump", "print the effective configuration");
  add_common(dump);
  config->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (grid->parsed()) return cmd_grid(opts, jobs);
    if (charac->parsed()) return cmd_characterize(opts);
    if (verify->parsed()) return cmd_verify(opts, suite);
    if (config->parsed() && dump->parsed()) return cmd_config_dump(opts);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
