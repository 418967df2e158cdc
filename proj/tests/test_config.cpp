#include "flapsim/config.hpp"
#include "flapsim/errors.hpp"
#include "flapsim/io.hpp"

#include <doctest.h>

#include <set>

using namespace flapsim;
using namespace flapsim::config;

TEST_SUITE("config") {
  TEST_CASE("empty document gives the valid defaults") {
    const Config c = parse_config("");
    CHECK_NOTHROW(c.validate());
    CHECK(c.sim.dt == 1e-4);
    CHECK(c.model.control.l_ref_zp == Eigen::Vector4d(7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3));
    CHECK(to_yaml(c) == to_yaml(parse_config("# comment only\n")));
  }

  TEST_CASE("serialize then load reproduces the configuration exactly") {
    Config c = parse_config("");
    apply_override(c, "control.pitch_gain=[0.1, -0.2, 0.30000000000000004, 1e-17]");
    apply_override(c, "sim.initial.pitch_rad=0.1234567890123456");
    apply_override(c, "optimizer.method=cma-es");
    apply_override(c, "optimizer.zero_path_min_m=[0.005, 0.008, 0.004, 0.005]");
    apply_override(c, "sensitivity.parameters=[l_8b, crank1_radius]");
    const std::string y = to_yaml(c);
    const Config d = parse_config(y);
    CHECK(to_yaml(d) == y);
    CHECK(d.model.control.K_c == c.model.control.K_c);
    CHECK(d.sim.pitch == c.sim.pitch);
    CHECK(d.optimizer.method == opt::Method::kCmaEs);
    CHECK(d.zero_path_min.has_value());
    CHECK(d.sensitivity.parameters == std::vector<std::string>{"l_8b", "crank1_radius"});
  }

  TEST_CASE("every key is reachable and unique") {
    const auto keys = config_keys();
    std::set<std::string> unique(keys.begin(), keys.end());
    CHECK(unique.size() == keys.size());
    CHECK(unique.count("coupling.left_humerus.stiffness_n_per_m"));
    CHECK(unique.count("aero.segments.LR.chord_m"));
  }

  TEST_CASE("l_min above l_max names the FDC bounds key") {
    const std::string y = "kinematics:\n  fdc:\n    l_8b:\n      min_m: 0.0095\n      max_m: 0.009\n";
    try {
      parse_config(y);
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.key() == "kinematics.fdc.l_8b");
    }
  }

  TEST_CASE("unknown keys, bad values and bad YAML are rejected") {
    CHECK_THROWS_WITH_AS(parse_config("sim:\n  dt: 0.001\n"), doctest::Contains("sim.dt"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config("cost:\n  w_pitch: heavy\n"), doctest::Contains("cost.w_pitch"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config("sim:\n  dt_s: -1\n"), doctest::Contains("sim.dt_s"), ValidationError);
    CHECK_THROWS_AS(parse_config("sim: [1, 2\n"), ParseError);
    CHECK_THROWS_AS(parse_config("- 1\n- 2\n"), ParseError);
    Config c;
    CHECK_THROWS_AS(apply_override(c, "no_equals_sign"), ParseError);
    CHECK_THROWS_AS(apply_override(c, "sim.nothing=1"), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent/flapsim.yaml"), IoError);
  }

  TEST_CASE("zero path and geometry stay in sync") {
    Config c = parse_config("control:\n  zero_path_m: [0.007, 0.011, 0.006, 0.008]\n");
    CHECK(c.model.topology.geometry.fdc_nominal == Eigen::Vector4d(0.007, 0.011, 0.006, 0.008));
    CHECK_THROWS_AS(parse_config("control:\n  zero_path_m: [0.02, 0.011, 0.006, 0.008]\n"), ValidationError);
  }

  TEST_CASE("shipped default file matches the built-in defaults") {
    const std::string path = std::string(FLAPSIM_SOURCE_DIR) + "/configs/default.yaml";
    CHECK(io::read_text(path) == to_yaml(parse_config("")));
  }
}
