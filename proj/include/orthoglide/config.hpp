#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "orthoglide/control.hpp"
#include "orthoglide/sensors.hpp"
#include "orthoglide/simulator.hpp"
#include "orthoglide/trajectory.hpp"

// Flat key-value experiment configuration. One `section.key = value` pair per
// line, `#` comments; unknown keys are rejected so typos surface as errors.
// All defaults are printable with `orthoglide_cli config dump`.

namespace orthoglide {

class Config {
 public:
  static const std::vector<std::pair<std::string, std::string>>& default_entries() {
    static const std::vector<std::pair<std::string, std::string>> defaults = {
        // machine geometry (placeholders for a ~200 mm cubic workspace)
        {"geom.d4", "0.31"},
        {"geom.d6", "0.03"},
        {"geom.a", "0.20"},
        // lumped dynamic parameters
        {"dyn.m_platform", "3.0"},
        {"dyn.m_foot", "2.0"},
        {"dyn.m_bar", "0.5"},
        {"dyn.rod_inertia", "0.0"},
        {"dyn.gravity_x", "0.0"},
        {"dyn.gravity_y", "0.0"},
        {"dyn.gravity_z", "-9.81"},
        // simulation
        {"sim.control_rate", "400"},
        {"sim.plant_dt", "1e-4"},
        {"sim.seed", "1"},
        {"sim.safety_halfwidth", "0"},
        {"sim.settle_skip", "0"},
        // controller
        {"controller.kind", "vision_ctc"},
        {"controller.bandwidth_hz", "6"},
        {"controller.pid_kind", "pid"},
        {"controller.gain_scale", "1.0"},
        {"controller.derivative_cutoff_hz", "50"},
        {"controller.torque_limit", "400"},
        {"controller.integral_limit", "0"},
        {"controller.reflected_mass", "5.0"},
        // joint encoders
        {"encoder.resolution", "10e-6"},
        // vision sensor
        {"vision.accuracy", "100e-6"},
        {"vision.rate", "400"},
        {"vision.latency", "0"},
        {"vision.bias_x", "0"},
        {"vision.bias_y", "0"},
        {"vision.bias_z", "0"},
        {"vision.blur_gain", "0"},
        {"vision.noise", "uniform"},
        {"vision.seed", "0"},
        // model identification error
        {"identification.geom_tolerance", "0"},
        {"identification.dyn_tolerance", "0"},
        {"identification.seed", "0"},
        // reference path
        {"path.kind", "circle"},
        {"path.side", "0.05"},
        {"path.radius", "0.025"},
        {"path.center_x", "0.0"},
        {"path.center_y", "0.0"},
        {"path.center_z", "0.20"},
        {"path.accel_limit", "3.0"},
        {"path.speed_limit", "0"},
        {"path.workspace_margin", "0.05"},
        // experiment grid
        {"grid.controllers", "single_axis,joint_ctc,cartesian_ctc_fkm,vision_ctc"},
        {"grid.sensor_levels", "coarse,fine"},
        {"grid.identifications", "classical,accurate"},
        {"grid.paths", "square50"},
        {"grid.replicates", "5"},
        {"grid.base_seed", "1"},
        {"grid.joint_res_coarse", "10e-6"},
        {"grid.joint_res_fine", "1e-6"},
        {"grid.vision_acc_coarse", "100e-6"},
        {"grid.vision_acc_fine", "10e-6"},
        // sensor characterization (200 mm linear displacement protocol)
        {"characterize.displacement", "0.2"},
        {"characterize.accels", "1,3,5,10"},
        {"characterize.rest_time", "0.5"},
        {"characterize.static_bias", "198e-6"},
        {"characterize.vision_accuracy", "10e-6"},
        {"characterize.calibrate_dynamic_error", "286e-6"},
        {"characterize.calibrate_accel", "1"},
    };
    return defaults;
  }

  static Config defaults() {
    Config c;
    for (const auto& [k, v] : default_entries()) c.values_[k] = v;
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Config c = defaults();
    c.merge_text(ss.str(), path);
    return c;
  }

  void merge_text(const std::string& text, const std::string& origin = "<inline>") {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key = value");
      }
      set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(get(key), &pos);
      if (pos != get(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " is not a number: " + get(key));
    }
  }

  std::uint64_t get_seed(const std::string& key) const {
    return static_cast<std::uint64_t>(get_double(key));
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  void dump(std::ostream& os) const {
    std::string section;
    for (const auto& [k, def] : default_entries()) {
      const std::string sec = k.substr(0, k.find('.'));
      if (sec != section) {
        if (!section.empty()) os << '\n';
        os << "# [" << sec << "]\n";
        section = sec;
      }
      os << k << " = " << values_.at(k) << '\n';
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "single_axis") return ControllerKind::SingleAxis;
  if (s == "joint_ctc") return ControllerKind::JointCtc;
  if (s == "cartesian_ctc_fkm") return ControllerKind::CartesianCtcFkm;
  if (s == "vision_ctc") return ControllerKind::VisionCtc;
  throw ConfigError("unknown controller kind: " + s);
}

inline MachineParams build_true_params(const Config& c) {
  MachineParams p;
  p.geom.d4 = c.get_double("geom.d4");
  p.geom.d6 = c.get_double("geom.d6");
  p.geom.a = c.get_double("geom.a");
  if (!(p.geom.d4 > 0.0)) throw ConfigError("geom.d4 must be positive");
  p.dyn.m_platform = c.get_double("dyn.m_platform");
  p.dyn.m_foot = c.get_double("dyn.m_foot");
  p.dyn.m_bar = c.get_double("dyn.m_bar");
  p.dyn.rod_inertia = c.get_double("dyn.rod_inertia");
  p.dyn.gravity = Vec3(c.get_double("dyn.gravity_x"),
                       c.get_double("dyn.gravity_y"),
                       c.get_double("dyn.gravity_z"));
  return p;
}

inline PathSpec build_path_spec(const Config& c) {
  PathSpec spec;
  const std::string kind = c.get("path.kind");
  if (kind == "square") spec.kind = PathSpec::Kind::Square;
  else if (kind == "circle") spec.kind = PathSpec::Kind::Circle;
  else throw ConfigError("unknown path kind: " + kind);
  spec.side = c.get_double("path.side");
  spec.radius = c.get_double("path.radius");
  spec.center = Pose(c.get_double("path.center_x"), c.get_double("path.center_y"),
                     c.get_double("path.center_z"));
  spec.accel_limit = c.get_double("path.accel_limit");
  spec.speed_limit = c.get_double("path.speed_limit");
  spec.workspace_margin = c.get_double("path.workspace_margin");
  return spec;
}

inline ControllerConfig build_controller_config(const Config& c) {
  ControllerConfig ctrl;
  const std::string pk = c.get("controller.pid_kind");
  if (pk != "pd" && pk != "pid") throw ConfigError("controller.pid_kind must be pd or pid");
  ctrl.gains = gains_from_bandwidth(
      c.get_double("controller.bandwidth_hz") * c.get_double("controller.gain_scale"),
      pk == "pd" ? PidKind::Pd : PidKind::Pid);
  ctrl.derivative_cutoff_hz = c.get_double("controller.derivative_cutoff_hz");
  ctrl.torque_limit = c.get_double("controller.torque_limit");
  ctrl.integral_limit = c.get_double("controller.integral_limit");
  ctrl.reflected_mass = c.get_double("controller.reflected_mass");
  return ctrl;
}

inline VisionConfig build_vision_config(const Config& c, std::uint64_t run_seed) {
  VisionConfig v;
  v.accuracy = c.get_double("vision.accuracy");
  v.rate = c.get_double("vision.rate");
  v.latency = c.get_double("vision.latency");
  v.static_bias = Vec3(c.get_double("vision.bias_x"), c.get_double("vision.bias_y"),
                       c.get_double("vision.bias_z"));
  v.blur_gain = c.get_double("vision.blur_gain");
  const std::string noise = c.get("vision.noise");
  if (noise == "uniform") v.noise_kind = VisionConfig::Noise::Uniform;
  else if (noise == "gaussian") v.noise_kind = VisionConfig::Noise::Gaussian;
  else throw ConfigError("vision.noise must be uniform or gaussian");
  // every stream gets its own seed, derived deterministically from the run seed
  v.seed = c.get_seed("vision.seed") + 0x9e3779b97f4a7c15ULL * run_seed;
  return v;
}

// Assemble the full simulation config. The run seed (sim.seed, or the --seed
// override) deterministically derives the sensor and identification seeds.
inline SimConfig build_sim_config(const Config& c) {
  SimConfig sim;
  sim.control_rate = c.get_double("sim.control_rate");
  sim.plant_dt = c.get_double("sim.plant_dt");
  sim.safety_halfwidth = c.get_double("sim.safety_halfwidth");
  sim.controller = controller_kind_from_string(c.get("controller.kind"));
  sim.ctrl = build_controller_config(c);
  sim.encoder.resolution = c.get_double("encoder.resolution");
  const std::uint64_t run_seed = c.get_seed("sim.seed");
  sim.vision = build_vision_config(c, run_seed);
  sim.true_params = build_true_params(c);
  PerturbationSpec pert;
  pert.geom_tolerance = c.get_double("identification.geom_tolerance");
  pert.dyn_tolerance = c.get_double("identification.dyn_tolerance");
  pert.seed = c.get_seed("identification.seed") + 0x9e3779b97f4a7c15ULL * run_seed;
  sim.model_params = perturb_params(sim.true_params, pert);
  sim.validate();
  return sim;
}

}  // namespace orthoglide
