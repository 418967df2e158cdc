#include "flapsim/errors.hpp"
#include "flapsim/kinematics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace flapsim;
using namespace flapsim::kin;

namespace {

Vec2 unit(double a) { return {std::cos(a), std::sin(a)}; }

Vec2 rotate(double a, const Vec2& v) { return {std::cos(a) * v.x() - std::sin(a) * v.y(), std::sin(a) * v.x() + std::cos(a) * v.y()}; }

// Root of f on [a, b] by plain bisection.
template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// The root of f nearest to `near`, bracketed on a fine grid over one turn.
// The grid is offset by half a cell so a root at `near` is never a grid node.
template <class F>
double nearest_root(F f, double near) {
  const int n = 3600;
  double best = NAN;
  for (int i = 0; i < n; ++i) {
    const double a = near - std::numbers::pi + 2.0 * std::numbers::pi * (i + 0.5) / n;
    const double b = a + 2.0 * std::numbers::pi / n;
    if ((f(a) < 0.0) != (f(b) < 0.0)) {
      const double r = bisect(f, a, b);
      if (std::isnan(best) || std::abs(r - near) < std::abs(best - near)) best = r;
    }
  }
  return best;
}

double angle_diff(double a, double b) { return std::remainder(a - b, 2.0 * std::numbers::pi); }

const FdcVector kNominal{7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3};

}  // namespace

TEST_SUITE("kinematics") {
  TEST_CASE("closure matches a bisection solve of loops A and B") {
    const LinkageTopology topo = default_topology();
    const LinkageGeometry& g = topo.geometry;
    for (int i = 0; i < 12; ++i) {
      const double crank = 2.0 * std::numbers::pi * i / 12.0;
      const KinematicState s = solve_loop_closure(topo, crank, kNominal);
      CHECK(constraint_residual(g, s.q).norm() < 1e-10);

      const Vec2 j2 = g.crank1_center + g.crank1_radius * unit(crank);
      auto fa = [&](double th4) {
        return (rotate(th4, {kNominal[0], kNominal[1]}) - j2).norm() - g.coupler_a_length;
      };
      CHECK(std::abs(angle_diff(nearest_root(fa, s.q[kTheta4]), s.q[kTheta4])) < 1e-9);

      const Vec2 j10 = g.crank2_center + g.crank2_radius * unit(g.gear_ratio * crank + g.crank2_phase);
      auto fb = [&](double th12) {
        return (g.rocker_b_pivot + kNominal[2] * unit(th12) - j10).norm() - g.coupler_b_length;
      };
      CHECK(std::abs(angle_diff(nearest_root(fb, s.q[kTheta12]), s.q[kTheta12])) < 1e-9);
    }
  }

  TEST_CASE("joint positions keep every rigid link length") {
    const LinkageTopology topo = default_topology();
    const LinkageGeometry& g = topo.geometry;
    const KinematicState s = solve_loop_closure(topo, 1.1, kNominal);
    const auto p = joint_positions(g, s.q);
    CHECK((p[1] - p[0]).norm() == doctest::Approx(g.crank1_radius).epsilon(1e-12));
    CHECK((p[3] - p[1]).norm() == doctest::Approx(g.coupler_a_length).epsilon(1e-10));
    CHECK((p[9] - p[8]).norm() == doctest::Approx(g.crank2_radius).epsilon(1e-12));
    CHECK((p[11] - p[9]).norm() == doctest::Approx(g.coupler_b_length).epsilon(1e-10));
    CHECK((p[12] - p[10]).norm() == doctest::Approx(g.rocker_b_lever).epsilon(1e-12));
    CHECK((p[13] - p[12]).norm() == doctest::Approx(g.pushrod_fixed_length + kNominal[3]).epsilon(1e-10));
    CHECK((p[13] - p[14]).norm() == doctest::Approx(g.radius_lever).epsilon(1e-10));
    CHECK(p[4].norm() == doctest::Approx(g.joint5_distance).epsilon(1e-12));
  }

  TEST_CASE("projected velocities match finite differences of the closure") {
    const LinkageTopology topo = default_topology();
    const double crank = 0.7, h = 1e-6;
    const InputVector rate = (InputVector() << 62.8, 0.02, -0.01, 0.015, 0.01).finished();
    KinematicState s = solve_loop_closure(topo, crank, kNominal);
    for (int c = 0; c < kInputs; ++c) s.qdot[kIndependent[c]] = rate[c];
    s = project_state(topo, s);
    const auto plus = solve_loop_closure(topo, crank + h * rate[0], kNominal + h * rate.tail<4>());
    const auto minus = solve_loop_closure(topo, crank - h * rate[0], kNominal - h * rate.tail<4>());
    const CoordVector fd = (plus.q - minus.q) / (2.0 * h);
    CHECK((fd - s.qdot).norm() < 1e-6 * s.qdot.norm());
  }

  TEST_CASE("kinematic EOM acceleration matches differenced velocities") {
    const LinkageTopology topo = default_topology();
    const LinkageGeometry& g = topo.geometry;
    const double crank = 2.3, h = 1e-5;
    const InputVector rate = (InputVector() << 60.0, 0.01, 0.02, -0.01, 0.01).finished();
    KinematicInput in;
    in.crank_accel = 150.0;
    in.fdc_accel << 1.0, -2.0, 0.5, 1.5;
    const InputVector u = in.vector();

    auto state_at = [&](double t) {
      KinematicState s = solve_loop_closure(topo, crank + rate[0] * t + 0.5 * u[0] * t * t,
                                            kNominal + rate.tail<4>() * t + 0.5 * u.tail<4>() * t * t);
      for (int c = 0; c < kInputs; ++c) s.qdot[kIndependent[c]] = rate[c] + u[c] * t;
      return project_state(topo, s);
    };
    const KinematicState s0 = state_at(0.0);
    const CoordVector qdd = kinematic_eom(topo, s0, in);
    const CoordVector fd = (state_at(h).qdot - state_at(-h).qdot) / (2.0 * h);
    CHECK((fd - qdd).norm() < 1e-5 * qdd.norm());

    // The normal-equation form gives the same acceleration.
    const CoordMatrix mk = kinematic_mass_matrix(g, s0.q);
    const CoordVector rhs = kinematic_input_map() * u - kinematic_bias(g, s0.q, s0.qdot);
    CHECK((mk.ldlt().solve(rhs) - qdd).norm() < 1e-8 * qdd.norm());
  }

  TEST_CASE("driven joint acceleration matches differenced velocity") {
    const LinkageTopology topo = default_topology();
    const double crank = 4.0, h = 1e-5, w = 62.8;
    auto state_at = [&](double t) {
      KinematicState s = solve_loop_closure(topo, crank + w * t, kNominal);
      s.qdot[kTheta1] = w;
      return project_state(topo, s);
    };
    const KinematicState s0 = state_at(0.0);
    const CoordVector qdd = kinematic_eom(topo, s0, {});
    const auto out = driven_joint_output(topo, s0, qdd);
    const auto plus = driven_joint_output(topo, state_at(h), qdd);
    const auto minus = driven_joint_output(topo, state_at(-h), qdd);
    CHECK(((plus.p5 - minus.p5) / (2 * h) - out.v5).norm() < 1e-6 * out.v5.norm());
    CHECK(((plus.v16 - minus.v16) / (2 * h) - out.a16).norm() < 1e-4 * out.a16.norm());
  }

  TEST_CASE("seeded closure follows the branch and rejects jumps") {
    const LinkageTopology topo = default_topology();
    const KinematicState a = solve_loop_closure(topo, 0.0, kNominal);
    const KinematicState b = solve_loop_closure(topo, 0.01, kNominal, a);
    CHECK(branch_signs(topo.geometry, b.q) == topo.geometry.assembly_branch);

    LinkageTopology flipped = topo;
    flipped.geometry.assembly_branch[0] = -flipped.geometry.assembly_branch[0];
    const KinematicState other = solve_loop_closure(flipped, 0.0, kNominal);
    CHECK(std::abs(angle_diff(other.q[kTheta4], a.q[kTheta4])) > 0.5);
    // A seed on the other assembly mode is followed, not snapped back.
    const KinematicState follow = solve_loop_closure(topo, 0.01, kNominal, other);
    CHECK(branch_signs(topo.geometry, follow.q) == flipped.geometry.assembly_branch);
    // A crank step too large to track moves the humerus plate beyond the jump threshold.
    CHECK_THROWS_AS(solve_loop_closure(topo, 4.0 * std::numbers::pi / 3.0, kNominal, a), BranchJump);
  }

  TEST_CASE("FDC lengths outside the bounds are rejected") {
    const LinkageTopology topo = default_topology();
    FdcVector l = kNominal;
    l[2] = 1.0e-3;
    CHECK_THROWS_AS(solve_loop_closure(topo, 0.0, l), ValidationError);
  }

  TEST_CASE("topology has three independent loops") {
    const LinkageTopology topo = default_topology();
    CHECK(topo.links.size() == 12);
    CHECK(topo.joints.size() == 17);
    CHECK(topo.independent_loops() == 3);
    CHECK_NOTHROW(topo.validate());
  }

  TEST_CASE("radius-side FDCs leave joint 5 untouched") {
    const LinkageTopology topo = default_topology();
    for (const char* p : {"l_8b", "l_10b"}) {
      const SensitivityReport r = sensitivity_analysis(topo, p, 1e-4, 72);
      CHECK(r.max_dev_j5 * std::abs(r.delta) < 1e-12);
      CHECK(r.max_dev_j16 > 0.0);
    }
    const SensitivityReport h = sensitivity_analysis(topo, "l_3b", 1e-4, 72);
    CHECK(h.max_dev_j5 > 0.0);
    CHECK(h.max_dev_j16 > 0.0);
    CHECK_THROWS_AS(sensitivity_analysis(topo, "no_such_length", 1e-4, 72), ValidationError);
  }

  TEST_CASE("OpenMP sweeps equal the serial references") {
    const LinkageTopology topo = default_topology();
    const auto a = crank_sweep_serial(topo, kNominal, 90);
    const auto b = crank_sweep_parallel(topo, kNominal, 90);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].p5 == b[i].p5);
      CHECK(a[i].p16 == b[i].p16);
    }
    const std::vector<std::string> params{"l_3b", "l_3c", "l_8b", "l_10b", "crank1_radius"};
    const auto s = sensitivity_batch_serial(topo, params, 1e-4, 36);
    const auto p = sensitivity_batch_parallel(topo, params, 1e-4, 36);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].parameter == p[i].parameter);
      CHECK(s[i].max_dev_j5 == p[i].max_dev_j5);
      CHECK(s[i].rms_dev_j16 == p[i].rms_dev_j16);
    }
  }
}
