#include "flapsim/errors.hpp"
#include "flapsim/optimize.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace flapsim;
using namespace flapsim::opt;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

Objective quadratic(const Vec& target, const Eigen::MatrixXd& A) {
  return [=](const Vec& x) {
    const Vec d = x - target;
    return Outcome{d.dot(A * d), false};
  };
}

Eigen::MatrixXd spd4() {
  Eigen::MatrixXd a(4, 4);
  a << 4, 1, 0, 0.5, 1, 3, 0.2, 0, 0, 0.2, 2, 0.3, 0.5, 0, 0.3, 1;
  return a;
}

Bounds box(double lo, double hi, int n = 4) { return {Vec::Constant(n, lo), Vec::Constant(n, hi)}; }

void check_trace_properties(const OptimizationResult& r, const Bounds& b) {
  double best = INFINITY;
  for (const auto& row : r.trace) {
    CHECK(((row.x - b.lo).minCoeff() >= 0.0 && (b.hi - row.x).minCoeff() >= 0.0));
    best = std::min(best, row.J);
  }
  CHECK(r.best_J == best);
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("quadratic optimum inside the bounds is recovered") {
    const Vec target = vec({0.3, -0.2, 0.55, -0.7});
    for (Method m : {Method::kNelderMead, Method::kCmaEs}) {
      OptimizerConfig cfg;
      cfg.method = m;
      cfg.budget = 500;
      cfg.x_tolerance = 1e-7;
      cfg.f_tolerance = 1e-14;
      const Bounds b = box(-1.0, 1.0);
      const OptimizationResult r = minimize(quadratic(target, spd4()), Vec::Zero(4), b, cfg);
      CAPTURE(method_name(m));
      CHECK((r.best_x - target).cwiseAbs().maxCoeff() < 1e-3);
      CHECK(r.evaluations <= 501);
      check_trace_properties(r, b);
    }
  }

  TEST_CASE("optimum outside the bounds lands on the box projection") {
    const Vec target = vec({1.5, -0.2, -3.0, 0.4});
    const Eigen::MatrixXd diag = Vec(vec({1.0, 2.0, 0.5, 3.0})).asDiagonal();
    for (Method m : {Method::kNelderMead, Method::kCmaEs}) {
      OptimizerConfig cfg;
      cfg.method = m;
      cfg.budget = 500;
      cfg.x_tolerance = 1e-7;
      cfg.f_tolerance = 1e-14;
      const Bounds b = box(-1.0, 1.0);
      const OptimizationResult r = minimize(quadratic(target, diag), Vec::Zero(4), b, cfg);
      CAPTURE(method_name(m));
      CHECK((r.best_x - b.project(target)).cwiseAbs().maxCoeff() < 1e-3);
    }
  }

  TEST_CASE("collapsed bounds return the point without moving") {
    const Bounds b{vec({0.2, 0.3}), vec({0.2, 0.3})};
    const OptimizationResult r = minimize(quadratic(vec({0, 0}), Eigen::MatrixXd::Identity(2, 2)), vec({5, 5}), b, {});
    CHECK(r.best_x == vec({0.2, 0.3}));
    CHECK(r.evaluations == 1);
    CHECK(r.converged);
  }

  TEST_CASE("zero budget reports exhaustion with the initial guess") {
    OptimizerConfig cfg;
    cfg.budget = 0;
    const Vec x0 = vec({0.1, 0.2, 0.3, 0.4});
    const OptimizationResult r = minimize(quadratic(Vec::Zero(4), spd4()), x0, box(-1, 1), cfg);
    CHECK(r.budget_exhausted);
    CHECK_FALSE(r.converged);
    CHECK(r.best_x == x0);
    CHECK(r.evaluations == 1);
  }

  TEST_CASE("identical seeds give identical traces, serial or parallel") {
    for (Method m : {Method::kNelderMead, Method::kCmaEs}) {
      OptimizerConfig cfg;
      cfg.method = m;
      cfg.budget = 120;
      cfg.seed = 42;
      const auto f = quadratic(vec({0.1, 0.2, -0.3, 0.4}), spd4());
      const OptimizationResult a = minimize(f, Vec::Zero(4), box(-1, 1), cfg);
      const OptimizationResult b = minimize(f, Vec::Zero(4), box(-1, 1), cfg);
      cfg.parallel = true;
      const OptimizationResult p = minimize(f, Vec::Zero(4), box(-1, 1), cfg);
      REQUIRE(a.trace.size() == b.trace.size());
      REQUIRE(a.trace.size() == p.trace.size());
      for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].J == b.trace[i].J);
        CHECK(a.trace[i].J == p.trace[i].J);
        CHECK(a.trace[i].x == p.trace[i].x);
      }
    }
  }

  TEST_CASE("penalized candidates never become the reported best") {
    // A cliff at x0 > 0.5 reports a tiny but penalized cost.
    const Objective f = [](const Vec& x) {
      if (x[0] > 0.5) return Outcome{-1e9, true};
      return Outcome{(x - Vec::Constant(2, 0.4)).squaredNorm(), false};
    };
    for (Method m : {Method::kNelderMead, Method::kCmaEs}) {
      OptimizerConfig cfg;
      cfg.method = m;
      cfg.budget = 200;
      const OptimizationResult r = minimize(f, Vec::Zero(2), box(-1, 1, 2), cfg);
      CHECK_FALSE(r.best_penalized);
      CHECK(r.best_x[0] <= 0.5);
    }
  }

  TEST_CASE("batch evaluation preserves candidate order") {
    std::vector<Vec> xs;
    for (int i = 0; i < 17; ++i) xs.push_back(Vec::Constant(1, i));
    const Objective f = [](const Vec& x) { return Outcome{x[0] * x[0], x[0] > 10}; };
    const auto s = evaluate_batch_serial(f, xs);
    const auto p = evaluate_batch_parallel(f, xs);
    for (int i = 0; i < 17; ++i) {
      CHECK(s[i].J == i * i);
      CHECK(p[i].J == s[i].J);
      CHECK(p[i].penalized == s[i].penalized);
    }
    const Objective bad = [](const Vec&) -> Outcome { throw NoConvergence("stub"); };
    CHECK_THROWS_AS(evaluate_batch_parallel(bad, xs), NoConvergence);
  }

  TEST_CASE("zero-path search recovers a stubbed optimum inside the FDC bounds") {
    const Model model = default_model();
    const Eigen::Vector4d target(7.0e-3, 11.2e-3, 5.5e-3, 8.1e-3);
    std::atomic<int> pitch_on{0};
    const EpisodeCost stub = [&](const Model& m, const sim::SimConfig& s, const cost::CostConfig&) {
      if (s.controllers.pitch || m.control.K_c != Eigen::Vector4d::Zero()) ++pitch_on;
      cost::CostResult r;
      r.J = ((m.control.l_ref_zp - target) / 1e-3).squaredNorm();
      return r;
    };
    OptimizerConfig cfg;
    cfg.budget = 500;
    cfg.x_tolerance = 1e-8;
    cfg.f_tolerance = 1e-14;
    const Bounds b = zero_path_bounds(model);
    const OptimizationResult r = optimize_zero_path(model, sim::SimConfig{}, cost::CostConfig{}, b, cfg, stub);
    CHECK((r.best_x - Vec(target)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(pitch_on == 0);
    for (const auto& row : r.trace) {
      CHECK((row.x - b.lo).minCoeff() >= 0.0);
      CHECK((b.hi - row.x).minCoeff() >= 0.0);
    }
  }

  TEST_CASE("gain search starts from the configured guess and never ends worse") {
    const Model model = default_model();
    const EpisodeCost stub = [](const Model& m, const sim::SimConfig& s, const cost::CostConfig&) {
      cost::CostResult r;
      r.J = 10.0 + (m.control.K_c - Eigen::Vector4d(0.2, -0.1, 0.0, 0.3)).squaredNorm() + (s.controllers.pitch ? 0 : 1e6);
      return r;
    };
    GainBounds gb;
    OptimizerConfig cfg;
    cfg.budget = 80;
    const OptimizationResult r = optimize_pitch_gain(model, sim::SimConfig{}, cost::CostConfig{}, gb, cfg, stub);
    CHECK(r.trace.front().x == Vec(gb.K_c_start));
    CHECK(r.best_J <= r.trace.front().J);
    CHECK(r.best_J < 10.2);
  }

  TEST_CASE("bounds and methods validate") {
    CHECK_THROWS_AS(Bounds({vec({1.0}), vec({0.0})}).validate("k"), ValidationError);
    CHECK(parse_method("cma-es") == Method::kCmaEs);
    CHECK_THROWS_AS(parse_method("simplex"), ValidationError);
    const Bounds outside{zero_path_bounds(default_model()).lo.array() - 1e-3, zero_path_bounds(default_model()).hi};
    CHECK_THROWS_AS(optimize_zero_path(default_model(), {}, {}, outside, {}), ValidationError);
  }
}
