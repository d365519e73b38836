#pragma once

#include <atomic>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "orthoglide/config.hpp"
#include "orthoglide/simulator.hpp"

// Experiment drivers: the controller-comparison grid (controllers x sensor
// levels x identification quality x paths x replicates) and the vision-sensor
// characterization / blur-calibration protocol.

namespace orthoglide {

// 1e6 * meters, rounded half-to-even to three decimals (micrometers).
inline double round_um(double meters) {
  // std::nearbyint rounds half to even under the default FE_TONEAREST mode
  return std::nearbyint(meters * 1e9) / 1e3;
}

// ---------------------------------------------------------------------------
// Controller-comparison grid
// ---------------------------------------------------------------------------

struct GridRow {
  std::string controller;
  std::string path;
  std::string sensor_level;
  std::string identification;
  int replicates = 0;
  int replicates_ok = 0;
  // means and standard deviations across replicates, in meters
  double static_mean = 0.0, static_std = 0.0;
  double dynamic_mean = 0.0, dynamic_std = 0.0;
  double max_mean = 0.0;
  // percent reduction relative to the single-axis row of the same cell
  double improve_static_pct = 0.0, improve_dynamic_pct = 0.0;
  std::string status = "ok";
};

struct GridResult {
  std::vector<GridRow> rows;

  const GridRow* find(const std::string& controller, const std::string& path,
                      const std::string& level, const std::string& ident) const {
    for (const GridRow& r : rows) {
      if (r.controller == controller && r.path == path &&
          r.sensor_level == level && r.identification == ident) {
        return &r;
      }
    }
    return nullptr;
  }
};

namespace detail {

inline void apply_sensor_level(Config& c, const std::string& level) {
  if (level == "coarse") {
    c.set("encoder.resolution", c.get("grid.joint_res_coarse"));
    c.set("vision.accuracy", c.get("grid.vision_acc_coarse"));
  } else if (level == "fine") {
    c.set("encoder.resolution", c.get("grid.joint_res_fine"));
    c.set("vision.accuracy", c.get("grid.vision_acc_fine"));
  } else {
    throw ConfigError("unknown sensor level: " + level);
  }
}

inline void apply_identification(Config& c, const std::string& ident) {
  if (ident == "perfect") {
    c.set("identification.geom_tolerance", "0");
    c.set("identification.dyn_tolerance", "0");
  } else if (ident == "classical") {
    c.set("identification.geom_tolerance", "100e-6");
    c.set("identification.dyn_tolerance", "0.10");
  } else if (ident == "accurate") {
    c.set("identification.geom_tolerance", "10e-6");
    c.set("identification.dyn_tolerance", "0.01");
  } else {
    throw ConfigError("unknown identification level: " + ident);
  }
}

inline void apply_path(Config& c, const std::string& name) {
  if (name == "square50") {
    c.set("path.kind", "square");
    c.set("path.side", "0.05");
  } else if (name == "circle50") {
    c.set("path.kind", "circle");
    c.set("path.radius", "0.025");
  } else if (name == "circle60") {
    c.set("path.kind", "circle");
    c.set("path.radius", "0.03");
    c.set("path.speed_limit", "0.2");
  } else {
    throw ConfigError("unknown grid path: " + name);
  }
}

struct RepOutcome {
  bool ok = false;
  Metrics metrics;
  std::string error;
};

// Configure and run one grid replicate. The run seed depends only on the
// replicate index, not on the controller or sensor level, so comparisons
// between controllers are paired (common random numbers).
inline RepOutcome run_grid_replicate(const Config& base, const GridRow& cell,
                                     std::uint64_t run_seed) {
  RepOutcome out;
  try {
    Config c = base;
    c.set("controller.kind", cell.controller);
    apply_sensor_level(c, cell.sensor_level);
    apply_identification(c, cell.identification);
    apply_path(c, cell.path);
    c.set("sim.seed", std::to_string(run_seed));
    const SimConfig sim = build_sim_config(c);
    const Path path = Path::make(build_path_spec(c), sim.true_params.geom);
    const SimLog log = run_simulation(sim, path);
    out.metrics = compute_metrics(log, c.get_double("sim.settle_skip"));
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

// Run the full grid described by the [grid] config section. Cells run in
// parallel across `jobs` threads; a failing replicate marks its cell but does
// not abort the sweep. Row order is the deterministic nesting
// path > identification > sensor level > controller.
inline GridResult run_grid(const Config& base, int jobs = 1) {
  const auto controllers = base.get_list("grid.controllers");
  const auto levels = base.get_list("grid.sensor_levels");
  const auto idents = base.get_list("grid.identifications");
  const auto paths = base.get_list("grid.paths");
  const int replicates = static_cast<int>(base.get_double("grid.replicates"));
  const std::uint64_t base_seed = base.get_seed("grid.base_seed");
  if (replicates < 1) throw ConfigError("grid.replicates must be at least 1");

  GridResult result;
  for (const auto& path : paths)
    for (const auto& ident : idents)
      for (const auto& level : levels)
        for (const auto& ctrl : controllers) {
          controller_kind_from_string(ctrl);  // fail fast on typos
          GridRow row;
          row.controller = ctrl;
          row.path = path;
          row.sensor_level = level;
          row.identification = ident;
          row.replicates = replicates;
          result.rows.push_back(row);
        }

  const std::size_t n_cells = result.rows.size();
  std::vector<std::vector<detail::RepOutcome>> outcomes(
      n_cells, std::vector<detail::RepOutcome>(replicates));

  std::atomic<std::size_t> next{0};
  const std::size_t n_tasks = n_cells * static_cast<std::size_t>(replicates);
  const auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
      const std::size_t cell = i / replicates;
      const int rep = static_cast<int>(i % replicates);
      outcomes[cell][rep] = detail::run_grid_replicate(
          base, result.rows[cell], base_seed + static_cast<std::uint64_t>(rep));
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    GridRow& row = result.rows[cell];
    double s = 0, s2 = 0, d = 0, d2 = 0, mx = 0;
    for (const auto& rep : outcomes[cell]) {
      if (!rep.ok) {
        if (row.status == "ok") row.status = "error: " + rep.error;
        continue;
      }
      ++row.replicates_ok;
      s += rep.metrics.static_accuracy;
      s2 += rep.metrics.static_accuracy * rep.metrics.static_accuracy;
      d += rep.metrics.dynamic_accuracy;
      d2 += rep.metrics.dynamic_accuracy * rep.metrics.dynamic_accuracy;
      mx += rep.metrics.max_error;
    }
    if (row.replicates_ok > 0) {
      const double inv = 1.0 / row.replicates_ok;
      row.static_mean = s * inv;
      row.static_std = std::sqrt(std::max(0.0, s2 * inv - row.static_mean * row.static_mean));
      row.dynamic_mean = d * inv;
      row.dynamic_std = std::sqrt(std::max(0.0, d2 * inv - row.dynamic_mean * row.dynamic_mean));
      row.max_mean = mx * inv;
    }
  }

  // improvement relative to the paired single-axis baseline of the same cell
  for (GridRow& row : result.rows) {
    const GridRow* base_row = result.find("single_axis", row.path,
                                          row.sensor_level, row.identification);
    if (!base_row || base_row->replicates_ok == 0 || row.replicates_ok == 0) continue;
    if (base_row->static_mean > 0.0) {
      row.improve_static_pct =
          100.0 * (base_row->static_mean - row.static_mean) / base_row->static_mean;
    }
    if (base_row->dynamic_mean > 0.0) {
      row.improve_dynamic_pct =
          100.0 * (base_row->dynamic_mean - row.dynamic_mean) / base_row->dynamic_mean;
    }
  }
  return result;
}

// CSV export; accuracy figures in micrometers, rounded half-to-even to three
// decimals.
inline void write_grid_csv(const GridResult& grid, std::ostream& os) {
  os << "controller,path,sensor_level,identification,replicates,replicates_ok,"
        "static_um,static_std_um,dynamic_um,dynamic_std_um,max_um,"
        "improve_static_pct,improve_dynamic_pct,status\n";
  char buf[128];
  for (const GridRow& r : grid.rows) {
    os << r.controller << ',' << r.path << ',' << r.sensor_level << ','
       << r.identification << ',' << r.replicates << ',' << r.replicates_ok << ',';
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%.3f,%.3f,%.3f,%.2f,%.2f,",
                  round_um(r.static_mean), round_um(r.static_std),
                  round_um(r.dynamic_mean), round_um(r.dynamic_std),
                  round_um(r.max_mean), r.improve_static_pct,
                  r.improve_dynamic_pct);
    os << buf << '"' << r.status << "\"\n";
  }
}

// ---------------------------------------------------------------------------
// Vision-sensor characterization
// ---------------------------------------------------------------------------

struct CharacterizePoint {
  double accel = 0.0;          // m/s^2, profile acceleration limit
  double static_error = 0.0;   // m, mean error magnitude at rest
  double dynamic_error = 0.0;  // m, mean error magnitude while moving
};

// Replay protocol: rest, one straight quintic displacement at the given
// acceleration limit, rest again. The sensor is sampled at its own rate; the
// static figure averages over the rest windows, the dynamic figure over the
// motion window.
inline CharacterizePoint characterize_once(const Config& c, double accel,
                                           double blur_gain) {
  const double disp = c.get_double("characterize.displacement");
  const double rest = c.get_double("characterize.rest_time");
  if (!(disp > 0.0) || !(rest > 0.0) || !(accel > 0.0)) {
    throw ConfigError("characterize displacement, rest_time and accel must be positive");
  }
  const Pose center(c.get_double("path.center_x"), c.get_double("path.center_y"),
                    c.get_double("path.center_z"));
  const Pose from = center - Vec3(0.5 * disp, 0.0, 0.0);
  const Pose to = center + Vec3(0.5 * disp, 0.0, 0.0);
  const Path motion = Path::line(from, to, accel);

  VisionConfig vc;
  vc.accuracy = c.get_double("characterize.vision_accuracy");
  vc.rate = c.get_double("vision.rate");
  vc.latency = c.get_double("vision.latency");
  vc.static_bias = Vec3(c.get_double("characterize.static_bias"), 0.0, 0.0);
  vc.blur_gain = blur_gain;
  const std::string noise = c.get("vision.noise");
  if (noise == "gaussian") vc.noise_kind = VisionConfig::Noise::Gaussian;
  vc.seed = c.get_seed("vision.seed") +
            0x9e3779b97f4a7c15ULL * c.get_seed("sim.seed");
  VisionSensor sensor(vc);

  const double t1 = rest, t2 = rest + motion.duration();
  const double t_end = t2 + rest;
  const int n = static_cast<int>(std::round(t_end * vc.rate));
  double static_sum = 0, dynamic_sum = 0;
  int static_n = 0, dynamic_n = 0;
  for (int k = 0; k <= n; ++k) {
    const double t = k / vc.rate;
    Pose pose;
    double accel_mag = 0.0;
    bool moving = false;
    if (t < t1) {
      pose = from;
    } else if (t <= t2) {
      const Setpoint sp = motion.sample(t - t1);
      pose = sp.pos;
      accel_mag = sp.acc.norm();
      moving = true;
    } else {
      pose = to;
    }
    sensor.capture(t, pose, accel_mag);
    Measurement m;
    try {
      m = sensor.read(t);
    } catch (const NotYetAvailable&) {
      continue;
    }
    const double err = (m.value - pose).norm();
    if (moving) {
      dynamic_sum += err;
      ++dynamic_n;
    } else {
      static_sum += err;
      ++static_n;
    }
  }
  if (static_n == 0 || dynamic_n == 0) {
    throw EmptyWindow("characterization produced an empty phase window");
  }
  return {accel, static_sum / static_n, dynamic_sum / dynamic_n};
}

// Solve for the blur gain that reproduces the configured dynamic error at the
// calibration acceleration. The dynamic error is monotone in the gain, so a
// plain bisection converges; the replay is fully deterministic per seed.
inline double calibrate_blur_gain(const Config& c) {
  const double target = c.get_double("characterize.calibrate_dynamic_error");
  const double accel = c.get_double("characterize.calibrate_accel");
  const auto dyn_err = [&](double gain) {
    return characterize_once(c, accel, gain).dynamic_error;
  };
  if (dyn_err(0.0) >= target) return 0.0;
  double lo = 0.0, hi = 1e-5;
  while (dyn_err(hi) < target) {
    hi *= 2.0;
    if (hi > 1.0) throw Error("blur calibration failed to bracket the target");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dyn_err(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Full characterization sweep at the configured acceleration levels, with the
// blur gain first calibrated against the configured dynamic-error anchor.
struct CharacterizeResult {
  double blur_gain = 0.0;
  std::vector<CharacterizePoint> points;
};

inline CharacterizeResult run_characterization(const Config& c) {
  CharacterizeResult out;
  out.blur_gain = calibrate_blur_gain(c);
  for (const std::string& s : c.get_list("characterize.accels")) {
    std::size_t pos = 0;
    const double accel = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("bad characterize.accels entry: " + s);
    out.points.push_back(characterize_once(c, accel, out.blur_gain));
  }
  return out;
}

inline void write_characterize_csv(const CharacterizeResult& r, std::ostream& os) {
  os << "accel,static_um,dynamic_um\n";
  char buf[96];
  for (const CharacterizePoint& p : r.points) {
    std::snprintf(buf, sizeof(buf), "%g,%.3f,%.3f\n", p.accel,
                  round_um(p.static_error), round_um(p.dynamic_error));
    os << buf;
  }
}

}  // namespace orthoglide
