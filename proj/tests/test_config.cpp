#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "orthoglide/config.hpp"
#include "orthoglide/experiment.hpp"
#include "orthoglide/verify.hpp"

using namespace orthoglide;

TEST_CASE("config parsing, defaults and rejection of unknown keys") {
  Config c = Config::defaults();
  CHECK(c.get_double("geom.d4") == 0.31);
  CHECK(c.get_double("sim.control_rate") == 400.0);
  c.merge_text("geom.d4 = 0.32  # comment\n\n# full-line comment\nsim.seed=9\n");
  CHECK(c.get_double("geom.d4") == 0.32);
  CHECK(c.get_seed("sim.seed") == 9);
  CHECK_THROWS_AS(c.merge_text("no.such.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(c.merge_text("geom.d4 is 3\n"), ConfigError);
  CHECK_THROWS_AS(c.get_double("controller.kind"), ConfigError);
  const auto list = c.get_list("grid.controllers");
  REQUIRE(list.size() == 4);
  CHECK(list[0] == "single_axis");
  CHECK(list[3] == "vision_ctc");
}

TEST_CASE("config dump/parse roundtrip") {
  Config c = Config::defaults();
  c.set("controller.kind", "joint_ctc");
  c.set("vision.accuracy", "1e-05");
  std::ostringstream os;
  c.dump(os);
  Config back = Config::defaults();
  back.merge_text(os.str());
  std::ostringstream os2;
  back.dump(os2);
  CHECK(os.str() == os2.str());
}

TEST_CASE("builders validate their inputs") {
  Config c = Config::defaults();
  c.set("sim.plant_dt", "0.01");
  CHECK_THROWS_AS(build_sim_config(c), ConfigError);
  Config c2 = Config::defaults();
  c2.set("controller.kind", "banana");
  CHECK_THROWS_AS(build_sim_config(c2), ConfigError);
  Config c3 = Config::defaults();
  c3.set("path.kind", "helix");
  CHECK_THROWS_AS(build_path_spec(c3), ConfigError);
}

TEST_CASE("micrometer rounding is half-to-even at 3 decimals") {
  CHECK(round_um(1.0005e-6) == Catch::Approx(1.0).margin(1e-12));   // ties to even
  CHECK(round_um(1.0015e-6) == Catch::Approx(1.002).margin(1e-12)); // ties to even
  CHECK(round_um(1.00149e-6) == Catch::Approx(1.001).margin(1e-12));
  CHECK(round_um(123.4564e-6) == Catch::Approx(123.456).margin(1e-12));
}

TEST_CASE("grid cardinality, pairing and byte determinism") {
  Config c = Config::defaults();
  c.set("grid.replicates", "1");
  const GridResult grid = run_grid(c, 2);
  // 4 controllers x 2 sensor levels x 2 identifications x 1 path
  CHECK(grid.rows.size() == 16);
  for (const GridRow& r : grid.rows) {
    INFO(r.controller << '/' << r.sensor_level << '/' << r.identification << ": "
                      << r.status);
    CHECK(r.status == "ok");
    CHECK(r.replicates_ok == 1);
    CHECK(r.static_mean >= 0.0);
    CHECK(r.max_mean >= r.static_mean);
  }
  // the single-axis rows carry zero self-improvement
  const GridRow* base =
      grid.find("single_axis", "square50", "coarse", "classical");
  REQUIRE(base != nullptr);
  CHECK(base->improve_static_pct == 0.0);

  std::ostringstream a, b;
  write_grid_csv(grid, a);
  write_grid_csv(run_grid(c, 3), b);  // different thread count, same bytes
  CHECK(a.str() == b.str());
}

TEST_CASE("characterization: flat without blur, calibrated and monotone with it") {
  Config c = Config::defaults();
  // without blur the dynamic error does not depend on the acceleration
  const CharacterizePoint p1 = characterize_once(c, 1.0, 0.0);
  const CharacterizePoint p10 = characterize_once(c, 10.0, 0.0);
  CHECK(std::abs(p1.dynamic_error - p10.dynamic_error) <
        0.1 * (p1.static_error + 1e-9));
  // static error reproduces the configured bias within 5%
  CHECK(p1.static_error ==
        Catch::Approx(c.get_double("characterize.static_bias")).epsilon(0.05));

  // calibration reproduces the anchor cell, then increases with acceleration
  const double gain = calibrate_blur_gain(c);
  CHECK(gain > 0.0);
  const double target = c.get_double("characterize.calibrate_dynamic_error");
  const CharacterizePoint cal = characterize_once(c, 1.0, gain);
  CHECK(cal.dynamic_error == Catch::Approx(target).epsilon(1e-6));
  const CharacterizeResult sweep = run_characterization(c);
  REQUIRE(sweep.points.size() == 4);
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    CHECK(sweep.points[i].dynamic_error > sweep.points[i - 1].dynamic_error);
  }
}

TEST_CASE("verification suites pass and catch injected faults") {
  const MachineParams p{};
  const auto results = run_verification(p, "all", 11);
  CHECK(results.size() == 6);
  for (const SuiteResult& r : results) {
    INFO(r.name << " worst=" << r.worst << " " << r.detail);
    CHECK(r.pass);
  }
  // corrupted bar length on the forward-kinematics side must trip the
  // roundtrip suite
  GeomParams bad = p.geom;
  bad.d4 += 1e-4;
  const SuiteResult r = verify_roundtrip(p.geom, 11, 100, &bad);
  CHECK_FALSE(r.pass);
  // selector: only the kinematics suites
  CHECK(run_verification(p, "kinematics", 11).size() == 2);
  CHECK(run_verification(p, "nonsense", 11).empty());
}
