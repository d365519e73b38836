#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "orthoglide/config.hpp"
#include "orthoglide/simulator.hpp"

using namespace orthoglide;

namespace {

// Perfect-information baseline: vision CTC, ideal sensors, model = plant.
SimConfig perfect_cfg() {
  SimConfig cfg;
  cfg.controller = ControllerKind::VisionCtc;
  cfg.ctrl = ControllerConfig{gains_from_bandwidth(6.0)};
  cfg.encoder.resolution = 0.0;
  cfg.vision.accuracy = 0.0;
  cfg.vision.latency = 0.0;
  cfg.true_params = MachineParams{};
  cfg.model_params = cfg.true_params;
  return cfg;
}

Path small_circle(const GeomParams& g) {
  PathSpec spec;
  spec.kind = PathSpec::Kind::Circle;
  spec.radius = 0.025;
  spec.accel_limit = 3.0;
  return Path::circle(spec, g);
}

}  // namespace

TEST_CASE("sim config validation") {
  SimConfig cfg = perfect_cfg();
  cfg.plant_dt = 3e-3;  // exceeds the 2.5 ms control period
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.plant_dt = 1.1e-4;  // does not divide the period
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.plant_dt = 1e-4;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("parameter perturbation bounds and determinism") {
  const MachineParams p{};
  PerturbationSpec zero;
  const MachineParams same = perturb_params(p, zero);
  CHECK(same.geom.d4 == p.geom.d4);
  CHECK(same.dyn.m_platform == p.dyn.m_platform);

  PerturbationSpec spec{100e-6, 0.10, 77};
  const MachineParams a = perturb_params(p, spec);
  const MachineParams b = perturb_params(p, spec);
  CHECK(a.geom.d4 == b.geom.d4);
  CHECK(a.dyn.m_bar == b.dyn.m_bar);
  CHECK(std::abs(a.geom.d4 - p.geom.d4) <= 100e-6);
  CHECK(std::abs(a.geom.d6 - p.geom.d6) <= 100e-6);
  CHECK(std::abs(a.geom.a - p.geom.a) <= 100e-6);
  CHECK(std::abs(a.dyn.m_platform / p.dyn.m_platform - 1.0) <= 0.10);
  CHECK(std::abs(a.dyn.m_foot / p.dyn.m_foot - 1.0) <= 0.10);
  PerturbationSpec other{100e-6, 0.10, 78};
  CHECK(perturb_params(p, other).geom.d4 != a.geom.d4);
}

TEST_CASE("metrics of synthetic logs") {
  SimLog log;
  log.control_rate = 400.0;
  // identical reference and truth
  for (int k = 0; k < 10; ++k) {
    SimRecord r{};
    r.t = k / 400.0;
    r.ref = Pose(0.0, 0.0, 0.3);
    r.truth = r.ref;
    log.records.push_back(r);
  }
  Metrics m = compute_metrics(log);
  CHECK(m.static_accuracy == 0.0);
  CHECK(m.dynamic_accuracy == 0.0);
  CHECK(m.max_error == 0.0);

  // constant offset: static = |e|, dynamic = 0
  for (auto& r : log.records) r.truth = r.ref + Vec3(3e-6, 4e-6, 0.0);
  m = compute_metrics(log);
  CHECK(m.static_accuracy == Catch::Approx(5e-6).epsilon(1e-12));
  CHECK(m.dynamic_accuracy == Catch::Approx(0.0).margin(1e-15));
  CHECK(m.max_error == Catch::Approx(5e-6).epsilon(1e-12));

  // alternating error magnitudes 0 / 2e: mean e, std e
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    log.records[i].truth =
        log.records[i].ref + ((i % 2) ? Vec3(2e-6, 0, 0) : Vec3::Zero());
  }
  m = compute_metrics(log);
  CHECK(m.static_accuracy == Catch::Approx(1e-6).epsilon(1e-12));
  CHECK(m.dynamic_accuracy == Catch::Approx(1e-6).epsilon(1e-12));

  CHECK_THROWS_AS(compute_metrics(log, 1.0), EmptyWindow);
}

TEST_CASE("simulation log shape and determinism") {
  SimConfig cfg = perfect_cfg();
  const Path path = small_circle(cfg.true_params.geom);
  const SimLog a = run_simulation(cfg, path);
  const SimLog b = run_simulation(cfg, path);

  const int expected =
      static_cast<int>(std::ceil(path.duration() * cfg.control_rate - 1e-9)) + 1;
  CHECK(static_cast<int>(a.records.size()) == expected);
  for (std::size_t i = 1; i < a.records.size(); ++i) {
    CHECK(a.records[i].t > a.records[i - 1].t);
    CHECK(a.records[i].t - a.records[i - 1].t ==
          Catch::Approx(1.0 / cfg.control_rate).epsilon(1e-9));
  }
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK((a.records[i].truth - b.records[i].truth).norm() == 0.0);
    CHECK((a.records[i].torque - b.records[i].torque).norm() == 0.0);
  }
}

TEST_CASE("perfect-information tracking is tight") {
  SimConfig cfg = perfect_cfg();
  const Path path = small_circle(cfg.true_params.geom);
  const Metrics m = compute_metrics(run_simulation(cfg, path));
  INFO("max error " << m.max_error * 1e6 << " um");
  CHECK(m.max_error < 1e-6);
}

TEST_CASE("integrator refinement convergence") {
  SimConfig cfg = perfect_cfg();
  const Path path = small_circle(cfg.true_params.geom);
  const SimLog coarse = run_simulation(cfg, path);
  cfg.plant_dt = 5e-5;
  const SimLog fine = run_simulation(cfg, path);
  const Pose xa = coarse.records.back().truth;
  const Pose xb = fine.records.back().truth;
  CHECK((xa - xb).norm() < 1e-8);
}

TEST_CASE("divergence raises SimDiverged") {
  SimConfig cfg = perfect_cfg();
  cfg.ctrl.gains = Gains{0.0, 0.0, 0.0};   // feedforward only, then drift
  cfg.controller = ControllerKind::SingleAxis;
  cfg.ctrl.reflected_mass = 0.0;           // no torque at all: free fall
  cfg.safety_halfwidth = 0.05;
  const Path path = Path::dwell(Pose(0.0, 0.0, 0.32), 5.0);
  CHECK_THROWS_AS(run_simulation(cfg, path), SimDiverged);
}

TEST_CASE("CSV export shape") {
  SimConfig cfg = perfect_cfg();
  PathSpec spec;
  spec.kind = PathSpec::Kind::Square;
  spec.side = 0.02;
  const Path path = Path::square(spec, cfg.true_params.geom);
  const SimLog log = run_simulation(cfg, path);
  std::ostringstream os;
  write_log_csv(log, os);
  const std::string text = os.str();
  CHECK(text.rfind("t,ref_x,ref_y,ref_z,", 0) == 0);
  const auto rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == static_cast<long>(log.records.size()) + 1);
}

TEST_CASE("all four controllers complete a square under realistic sensing") {
  Config base = Config::defaults();
  base.set("path.kind", "square");
  base.set("path.side", "0.02");
  for (const char* kind :
       {"single_axis", "joint_ctc", "cartesian_ctc_fkm", "vision_ctc"}) {
    Config c = base;
    c.set("controller.kind", kind);
    const SimConfig sim = build_sim_config(c);
    const Path path = Path::make(build_path_spec(c), sim.true_params.geom);
    const Metrics m = compute_metrics(run_simulation(sim, path));
    INFO(kind << ": static " << m.static_accuracy * 1e6 << " um, max "
              << m.max_error * 1e6 << " um");
    CHECK(m.max_error < 5e-3);  // stays in the neighborhood of the path
  }
}
