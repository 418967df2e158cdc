#include "flapsim/kinematics.hpp"

#include "flapsim/errors.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace flapsim::kin {

namespace {

constexpr std::array<std::string_view, kFdcCount> kFdcNames = {"l_3b", "l_3c", "l_8b", "l_10b"};

Vec2 rot(double a, const Vec2& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

// Rotated local vector R(q[angle] + offset) * (base + [q[len_x], q[len_y]]).
struct Term {
  int angle = -1;
  double offset = 0.0;
  Vec2 base = Vec2::Zero();
  int len_x = -1;
  int len_y = -1;

  Vec2 local(const CoordVector& q) const {
    Vec2 w = base;
    if (len_x >= 0) w.x() += q[len_x];
    if (len_y >= 0) w.y() += q[len_y];
    return w;
  }
  double psi(const CoordVector& q) const { return (angle >= 0 ? q[angle] : 0.0) + offset; }
  Vec2 value(const CoordVector& q) const { return rot(psi(q), local(q)); }

  template <typename Block>
  void add_jacobian(const CoordVector& q, double sign, Block&& rows) const {
    const double a = psi(q);
    if (angle >= 0) rows.col(angle) += sign * perp(rot(a, local(q)));
    if (len_x >= 0) rows.col(len_x) += sign * rot(a, Vec2::UnitX());
    if (len_y >= 0) rows.col(len_y) += sign * rot(a, Vec2::UnitY());
  }

  // Second time derivative with qddot = 0.
  Vec2 bias(const CoordVector& q, const CoordVector& qdot) const {
    const double a = psi(q);
    const double rate = angle >= 0 ? qdot[angle] : 0.0;
    Vec2 wdot = Vec2::Zero();
    if (len_x >= 0) wdot.x() = qdot[len_x];
    if (len_y >= 0) wdot.y() = qdot[len_y];
    return -rate * rate * rot(a, local(q)) + 2.0 * rate * perp(rot(a, wdot));
  }
};

// Sum of up to three terms.
struct PointExpr {
  std::array<Term, 3> terms{};
  int count = 0;

  PointExpr() = default;
  PointExpr(std::initializer_list<Term> ts) {
    for (const auto& t : ts) terms[count++] = t;
  }
  Vec2 value(const CoordVector& q) const {
    Vec2 p = Vec2::Zero();
    for (int i = 0; i < count; ++i) p += terms[i].value(q);
    return p;
  }
  Eigen::Matrix<double, 2, kCoords> jacobian(const CoordVector& q) const {
    Eigen::Matrix<double, 2, kCoords> j = Eigen::Matrix<double, 2, kCoords>::Zero();
    for (int i = 0; i < count; ++i) terms[i].add_jacobian(q, 1.0, j);
    return j;
  }
  Vec2 bias(const CoordVector& q, const CoordVector& qdot) const {
    Vec2 b = Vec2::Zero();
    for (int i = 0; i < count; ++i) b += terms[i].bias(q, qdot);
    return b;
  }
};

Term constant(const Vec2& v) { return Term{-1, 0.0, v, -1, -1}; }

// A dyad loop: start + first == end + second, where first and second carry the
// two unknown angles of the loop and start/end are already known.
struct Loop {
  PointExpr start;
  Term first;
  PointExpr end;
  Term second;
};

std::array<Loop, 3> build_loops(const LinkageGeometry& g) {
  std::array<Loop, 3> loops;
  // A: crank pin j2 + coupler A reaches pin j4 on the humerus plate.
  loops[0].start = {constant(g.crank1_center), Term{kTheta1, 0.0, {g.crank1_radius, 0.0}}};
  loops[0].first = Term{kTheta2, 0.0, {g.coupler_a_length, 0.0}};
  loops[0].end = {};
  loops[0].second = Term{kTheta4, 0.0, Vec2::Zero(), kL3b, kL3c};
  // B: crank-2 pin j10 + coupler B reaches the 8b slider pin j12 on rocker B.
  loops[1].start = {constant(g.crank2_center), Term{kTheta9, 0.0, {g.crank2_radius, 0.0}}};
  loops[1].first = Term{kTheta10, 0.0, {g.coupler_b_length, 0.0}};
  loops[1].end = {constant(g.rocker_b_pivot)};
  loops[1].second = Term{kTheta12, 0.0, Vec2::Zero(), kL8b, -1};
  // C: rocker-B lever j13 + pushrod reaches the radius lever pin j14.
  loops[2].start = {constant(g.rocker_b_pivot),
                    Term{kTheta12, g.rocker_b_lever_angle, {g.rocker_b_lever, 0.0}}};
  loops[2].first = Term{kTheta13, 0.0, {g.pushrod_fixed_length, 0.0}, kL10b, -1};
  loops[2].end = {Term{kTheta4, g.humerus_offset, {g.elbow_distance, 0.0}}};
  loops[2].second = Term{kTheta14, g.radius_lever_angle, {g.radius_lever, 0.0}};
  return loops;
}

PointExpr joint5_expr(const LinkageGeometry& g) {
  return {Term{kTheta4, g.humerus_offset, {g.joint5_distance, 0.0}}};
}

PointExpr joint16_expr(const LinkageGeometry& g) {
  return {Term{kTheta4, g.humerus_offset, {g.elbow_distance, 0.0}},
          Term{kTheta14, 0.0, {g.joint16_distance, 0.0}}};
}

void check_fdc_bounds(const LinkageGeometry& g, const FdcVector& l) {
  for (int i = 0; i < kFdcCount; ++i) {
    if (!std::isfinite(l[i])) {
      throw ValidationError(std::string(kFdcNames[i]), "FDC length is not finite");
    }
    // Tolerate roundoff at the saturation bounds.
    const double slack = 1e-12;
    if (l[i] < g.fdc_min[i] - slack || l[i] > g.fdc_max[i] + slack) {
      throw ValidationError(std::string(kFdcNames[i]), "FDC length outside [l_min, l_max]");
    }
  }
}

Eigen::Matrix<double, kConstraints, kConstraints> dependent_block(const ConstraintJacobian& j) {
  Eigen::Matrix<double, kConstraints, kConstraints> d;
  for (int c = 0; c < kConstraints; ++c) d.col(c) = j.col(kDependent[c]);
  return d;
}

Eigen::Matrix<double, kConstraints, kInputs> independent_block(const ConstraintJacobian& j) {
  Eigen::Matrix<double, kConstraints, kInputs> d;
  for (int c = 0; c < kInputs; ++c) d.col(c) = j.col(kIndependent[c]);
  return d;
}

// Damped Newton on the dependent coordinates. Returns false when the residual
// does not drop below the tolerance.
bool newton_close(const LinkageGeometry& g, CoordVector& q, const ClosureOptions& opt) {
  ConstraintVector r = constraint_residual(g, q);
  double norm = r.norm();
  for (int it = 0; it < opt.max_iterations && norm > opt.tolerance; ++it) {
    const auto jd = dependent_block(constraint_jacobian(g, q));
    Eigen::PartialPivLU<Eigen::Matrix<double, kConstraints, kConstraints>> lu(jd);
    if (!(lu.rcond() > 1e-14)) return false;
    const ConstraintVector step = lu.solve(-r);
    if (!step.allFinite()) return false;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls) {
      CoordVector trial = q;
      for (int c = 0; c < kConstraints; ++c) trial[kDependent[c]] += alpha * step[c];
      const ConstraintVector rt = constraint_residual(g, trial);
      const double nt = rt.norm();
      if (nt < (1.0 - 1e-4 * alpha) * norm || nt <= opt.tolerance) {
        q = trial;
        r = rt;
        norm = nt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  return norm <= opt.tolerance;
}

// Closed-form circle intersection for a loop with the given branch sign.
void solve_dyad(const Loop& loop, int branch, CoordVector& q) {
  const Vec2 p = loop.start.value(q);
  const Vec2 e = loop.end.value(q);
  const Vec2 wa = loop.first.local(q);
  const Vec2 wb = loop.second.local(q);
  const double a = wa.norm(), b = wb.norm();
  const Vec2 d = e - p;
  const double dist = d.norm();
  if (!(dist > 0.0) || dist > a + b || dist < std::abs(a - b)) {
    throw NoConvergence("loop closure impossible: dyad cannot span the gap");
  }
  const double x = (a * a - b * b + dist * dist) / (2.0 * dist);
  const double h = std::sqrt(std::max(a * a - x * x, 0.0));
  const Vec2 u = d / dist;
  const Vec2 joint = p + x * u + (branch >= 0 ? 1.0 : -1.0) * h * perp(u);
  const Vec2 ra = joint - p;
  const Vec2 rb = joint - e;
  q[loop.first.angle] =
      wrap_pi(std::atan2(ra.y(), ra.x()) - std::atan2(wa.y(), wa.x()) - loop.first.offset);
  q[loop.second.angle] =
      wrap_pi(std::atan2(rb.y(), rb.x()) - std::atan2(wb.y(), wb.x()) - loop.second.offset);
}

// Scalar closure equation on the first unknown angle, bracketed on a dense
// grid around the seed and refined by bisection.
bool bisect_dyad(const Loop& loop, CoordVector& q, int samples) {
  const Vec2 p = loop.start.value(q);
  const Vec2 e = loop.end.value(q);
  const double b2 = loop.second.local(q).squaredNorm();
  const double seed = q[loop.first.angle];
  auto f = [&](double angle) {
    CoordVector t = q;
    t[loop.first.angle] = angle;
    return (p + loop.first.value(t) - e).squaredNorm() - b2;
  };
  double best = std::numeric_limits<double>::quiet_NaN();
  double best_dist = std::numeric_limits<double>::infinity();
  const double lo = seed - std::numbers::pi;
  const double step = 2.0 * std::numbers::pi / samples;
  double x0 = lo, f0 = f(x0);
  for (int i = 1; i <= samples; ++i) {
    const double x1 = lo + i * step;
    const double f1 = f(x1);
    if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      if (std::abs(root - seed) < best_dist) {
        best_dist = std::abs(root - seed);
        best = root;
      }
    }
    x0 = x1;
    f0 = f1;
  }
  if (!std::isfinite(best)) return false;
  q[loop.first.angle] = best;
  const Vec2 rb = p + loop.first.value(q) - e;
  const Vec2 wb = loop.second.local(q);
  const double raw = std::atan2(rb.y(), rb.x()) - std::atan2(wb.y(), wb.x()) - loop.second.offset;
  const double prev = q[loop.second.angle];
  q[loop.second.angle] = prev + wrap_pi(raw - prev);
  return true;
}

void project_velocity(const LinkageGeometry& g, KinematicState& s) {
  const ConstraintJacobian j = constraint_jacobian(g, s.q);
  Eigen::Matrix<double, kInputs, 1> vi;
  for (int c = 0; c < kInputs; ++c) vi[c] = s.qdot[kIndependent[c]];
  const ConstraintVector vd = dependent_block(j).partialPivLu().solve(-independent_block(j) * vi);
  for (int c = 0; c < kConstraints; ++c) s.qdot[kDependent[c]] = vd[c];
}

}  // namespace

std::string_view fdc_name(int index) { return kFdcNames.at(static_cast<std::size_t>(index)); }

std::optional<int> fdc_index(std::string_view name) {
  for (int i = 0; i < kFdcCount; ++i) {
    if (kFdcNames[i] == name) return i;
  }
  return std::nullopt;
}

namespace {
template <typename G>
auto scalar_table(G& g) {
  return std::array<std::pair<std::string_view, decltype(&g.crank1_radius)>, 22>{{
      {"crank1_center_u", &g.crank1_center.x()},
      {"crank1_center_v", &g.crank1_center.y()},
      {"crank1_radius", &g.crank1_radius},
      {"coupler_a_length", &g.coupler_a_length},
      {"humerus_offset", &g.humerus_offset},
      {"crank2_center_u", &g.crank2_center.x()},
      {"crank2_center_v", &g.crank2_center.y()},
      {"crank2_radius", &g.crank2_radius},
      {"gear_ratio", &g.gear_ratio},
      {"crank2_phase", &g.crank2_phase},
      {"coupler_b_length", &g.coupler_b_length},
      {"rocker_b_pivot_u", &g.rocker_b_pivot.x()},
      {"rocker_b_pivot_v", &g.rocker_b_pivot.y()},
      {"rocker_b_lever", &g.rocker_b_lever},
      {"rocker_b_lever_angle", &g.rocker_b_lever_angle},
      {"pushrod_fixed_length", &g.pushrod_fixed_length},
      {"radius_lever", &g.radius_lever},
      {"radius_lever_angle", &g.radius_lever_angle},
      {"elbow_distance", &g.elbow_distance},
      {"joint5_distance", &g.joint5_distance},
      {"joint16_distance", &g.joint16_distance},
      {"", nullptr},
  }};
}
}  // namespace

double* LinkageGeometry::scalar(std::string_view name) {
  for (auto& [key, ptr] : scalar_table(*this)) {
    if (ptr && key == name) return ptr;
  }
  return nullptr;
}

const double* LinkageGeometry::scalar(std::string_view name) const {
  return const_cast<LinkageGeometry*>(this)->scalar(name);
}

const std::vector<std::string>& LinkageGeometry::scalar_names() {
  static const std::vector<std::string> names = [] {
    LinkageGeometry g;
    std::vector<std::string> out;
    for (auto& [key, ptr] : scalar_table(g)) {
      if (ptr) out.emplace_back(key);
    }
    return out;
  }();
  return names;
}

ConstraintVector constraint_residual(const LinkageGeometry& g, const CoordVector& q) {
  const auto loops = build_loops(g);
  ConstraintVector r;
  for (int i = 0; i < 3; ++i) {
    const Loop& l = loops[i];
    r.segment<2>(2 * i) = l.start.value(q) + l.first.value(q) - l.end.value(q) - l.second.value(q);
  }
  r[6] = q[kTheta9] - g.gear_ratio * q[kTheta1] - g.crank2_phase;
  return r;
}

ConstraintJacobian constraint_jacobian(const LinkageGeometry& g, const CoordVector& q) {
  const auto loops = build_loops(g);
  ConstraintJacobian j = ConstraintJacobian::Zero();
  for (int i = 0; i < 3; ++i) {
    const Loop& l = loops[i];
    auto rows = j.middleRows<2>(2 * i);
    for (int t = 0; t < l.start.count; ++t) l.start.terms[t].add_jacobian(q, 1.0, rows);
    l.first.add_jacobian(q, 1.0, rows);
    for (int t = 0; t < l.end.count; ++t) l.end.terms[t].add_jacobian(q, -1.0, rows);
    l.second.add_jacobian(q, -1.0, rows);
  }
  j(6, kTheta9) = 1.0;
  j(6, kTheta1) = -g.gear_ratio;
  return j;
}

ConstraintVector constraint_bias(const LinkageGeometry& g, const CoordVector& q,
                                 const CoordVector& qdot) {
  const auto loops = build_loops(g);
  ConstraintVector b;
  for (int i = 0; i < 3; ++i) {
    const Loop& l = loops[i];
    b.segment<2>(2 * i) =
        l.start.bias(q, qdot) + l.first.bias(q, qdot) - l.end.bias(q, qdot) - l.second.bias(q, qdot);
  }
  b[6] = 0.0;
  return b;
}

std::array<int, 3> branch_signs(const LinkageGeometry& g, const CoordVector& q) {
  const auto loops = build_loops(g);
  std::array<int, 3> s{};
  for (int i = 0; i < 3; ++i) {
    const Vec2 p = loops[i].start.value(q);
    const Vec2 joint = p + loops[i].first.value(q);
    const Vec2 e = loops[i].end.value(q);
    s[i] = cross2(e - p, joint - p) >= 0.0 ? 1 : -1;
  }
  return s;
}

KinematicState solve_loop_closure(const LinkageTopology& topology, double crank_angle,
                                  const FdcVector& fdc_lengths,
                                  const std::optional<KinematicState>& seed,
                                  const ClosureOptions& options) {
  const LinkageGeometry& g = topology.geometry;
  if (!std::isfinite(crank_angle)) throw ValidationError("crank_angle", "not finite");
  check_fdc_bounds(g, fdc_lengths);

  KinematicState out;
  if (seed) out = *seed;
  out.q[kTheta1] = crank_angle;
  out.q.segment<4>(kL3b) = fdc_lengths;

  const auto loops = build_loops(g);
  if (!seed) {
    out.q[kTheta9] = g.gear_ratio * crank_angle + g.crank2_phase;
    for (int i = 0; i < 3; ++i) solve_dyad(loops[i], g.assembly_branch[i], out.q);
    // Closed form is already at roundoff; polish anyway.
    newton_close(g, out.q, options);
  } else {
    CoordVector trial = out.q;
    trial[kTheta9] = g.gear_ratio * crank_angle + g.crank2_phase;
    if (!newton_close(g, trial, options)) {
      trial = out.q;
      trial[kTheta9] = g.gear_ratio * crank_angle + g.crank2_phase;
      for (const Loop& loop : loops) {
        if (!bisect_dyad(loop, trial, options.bisection_samples)) {
          throw NoConvergence("loop closure failed: no root of the dyad closure equation");
        }
      }
      newton_close(g, trial, options);
    }
    const auto s_new = branch_signs(g, trial);
    const auto s_old = branch_signs(g, seed->q);
    for (int i = 0; i < 3; ++i) {
      if (s_new[i] != s_old[i]) {
        throw BranchJump("loop " + std::string(1, static_cast<char>('A' + i)) +
                         " changed assembly branch relative to the seed");
      }
    }
    for (int c : kDependent) {
      if (c == kTheta9) continue;
      if (std::abs(trial[c] - seed->q[c]) > options.branch_jump_threshold) {
        throw BranchJump("dependent angle jumped beyond threshold relative to the seed");
      }
    }
    out.q = trial;
  }

  const double res = constraint_residual(g, out.q).norm();
  if (!(res < options.accept_residual)) {
    throw NoConvergence("loop closure residual " + std::to_string(res) + " above tolerance");
  }
  project_velocity(g, out);
  return out;
}

KinematicState project_state(const LinkageTopology& topology, const KinematicState& state,
                             const ClosureOptions& options) {
  const LinkageGeometry& g = topology.geometry;
  KinematicState out = state;
  out.q[kTheta9] = g.gear_ratio * out.q[kTheta1] + g.crank2_phase;
  if (!newton_close(g, out.q, options)) {
    throw NoConvergence("projection onto the constraint manifold failed");
  }
  project_velocity(g, out);
  return out;
}

CoordMatrix kinematic_mass_matrix(const LinkageGeometry& g, const CoordVector& q) {
  const ConstraintJacobian j = constraint_jacobian(g, q);
  CoordMatrix m = j.transpose() * j;
  for (int c : kIndependent) m(c, c) += 1.0;
  return m;
}

CoordVector kinematic_bias(const LinkageGeometry& g, const CoordVector& q, const CoordVector& qdot) {
  return constraint_jacobian(g, q).transpose() * constraint_bias(g, q, qdot);
}

Eigen::Matrix<double, kCoords, kInputs> kinematic_input_map() {
  Eigen::Matrix<double, kCoords, kInputs> b = Eigen::Matrix<double, kCoords, kInputs>::Zero();
  for (int c = 0; c < kInputs; ++c) b(kIndependent[c], c) = 1.0;
  return b;
}

CoordVector kinematic_eom(const LinkageTopology& topology, const KinematicState& state,
                          const KinematicInput& input) {
  const LinkageGeometry& g = topology.geometry;
  // Solve the partitioned form S qdd = u, J qdd = -Jdot qdot, which is the
  // same system as the normal-equation form M_k qdd = B_k u - h_k.
  const ConstraintJacobian j = constraint_jacobian(g, state.q);
  const InputVector u = input.vector();
  Eigen::PartialPivLU<Eigen::Matrix<double, kConstraints, kConstraints>> lu(dependent_block(j));
  if (!(lu.rcond() > 1e-9)) {
    throw SingularMassMatrix("kinematic constraint Jacobian is singular (rcond " +
                             std::to_string(lu.rcond()) + ")");
  }
  const ConstraintVector rhs = -independent_block(j) * u - constraint_bias(g, state.q, state.qdot);
  const ConstraintVector qdd_dep = lu.solve(rhs);
  CoordVector qdd;
  for (int c = 0; c < kInputs; ++c) qdd[kIndependent[c]] = u[c];
  for (int c = 0; c < kConstraints; ++c) qdd[kDependent[c]] = qdd_dep[c];
  return qdd;
}

DrivenJointOutput driven_joint_output(const LinkageTopology& topology, const KinematicState& state,
                                      const CoordVector& accel) {
  const LinkageGeometry& g = topology.geometry;
  const PointExpr e5 = joint5_expr(g);
  const PointExpr e16 = joint16_expr(g);
  DrivenJointOutput out;
  out.p5 = e5.value(state.q);
  out.p16 = e16.value(state.q);
  const auto j5 = e5.jacobian(state.q);
  const auto j16 = e16.jacobian(state.q);
  out.v5 = j5 * state.qdot;
  out.v16 = j16 * state.qdot;
  out.a5 = j5 * accel + e5.bias(state.q, state.qdot);
  out.a16 = j16 * accel + e16.bias(state.q, state.qdot);
  return out;
}

std::array<Vec2, 17> joint_positions(const LinkageGeometry& g, const CoordVector& q) {
  const auto loops = build_loops(g);
  std::array<Vec2, 17> p;
  const Vec2 j2 = loops[0].start.value(q);
  const Vec2 j4 = loops[0].second.value(q);
  const Vec2 j10 = loops[1].start.value(q);
  const Vec2 j12 = loops[1].end.value(q) + loops[1].second.value(q);
  const Vec2 j13 = loops[2].start.value(q);
  const Vec2 j15 = loops[2].end.value(q);
  const Vec2 j14 = j15 + loops[2].second.value(q);
  p[0] = g.crank1_center;
  p[1] = j2;
  p[2] = Vec2::Zero();
  p[3] = j4;
  p[4] = joint5_expr(g).value(q);
  p[5] = rot(q[kTheta4], {q[kL3b], 0.0});  // 3b slider carriage
  p[6] = j4;                                // 3c slider carriage carries pin j4
  p[7] = j12;                               // 8b slider carriage carries pin j12
  p[8] = g.crank2_center;
  p[9] = j10;
  p[10] = g.rocker_b_pivot;
  p[11] = j12;
  p[12] = j13;
  p[13] = j14;
  p[14] = j15;
  p[15] = joint16_expr(g).value(q);
  p[16] = j13 + rot(q[kTheta13], {g.pushrod_fixed_length, 0.0});  // 10b slider
  return p;
}

LinkageTopology make_topology(const LinkageGeometry& geometry) {
  LinkageTopology t;
  t.geometry = geometry;
  const FdcVector& l = geometry.fdc_nominal;
  const auto& g = geometry;
  t.links = {
      {"L1", "crank 1", g.crank1_radius, {}},
      {"L2", "coupler A", g.coupler_a_length, {}},
      {"L3", "humerus plate", g.elbow_distance, {"l_3b", "l_3c"}},
      {"L4", "FDC 3b slider", l[0], {}},
      {"L5", "FDC 3c slider", l[1], {}},
      {"L6", "crank 2", g.crank2_radius, {}},
      {"L7", "coupler B", g.coupler_b_length, {}},
      {"L8", "rocker B", g.rocker_b_lever, {"l_8b"}},
      {"L9", "FDC 8b slider", l[2], {}},
      {"L10", "pushrod", g.pushrod_fixed_length, {"l_10b"}},
      {"L11", "FDC 10b slider", l[3], {}},
      {"L12", "KS radius", g.joint16_distance, {}},
  };
  using JT = JointType;
  t.joints = {
      {"j1", JT::kRevolute, "ground", "L1", {}, ""},
      {"j2", JT::kRevolute, "L1", "L2", {}, ""},
      {"j3", JT::kRevolute, "ground", "L3", {}, ""},
      {"j4", JT::kRevolute, "L2", "L5", {}, ""},
      {"j5", JT::kRevolute, "L3", "massed_humerus", {}, ""},
      {"j6", JT::kPrismaticFdc, "L3", "L4", {}, "l_3b"},
      {"j7", JT::kPrismaticFdc, "L4", "L5", {}, "l_3c"},
      {"j8", JT::kPrismaticFdc, "L8", "L9", {}, "l_8b"},
      {"j9", JT::kRevolute, "ground", "L6", {}, ""},
      {"j10", JT::kRevolute, "L6", "L7", {}, ""},
      {"j11", JT::kRevolute, "ground", "L8", {}, ""},
      {"j12", JT::kRevolute, "L7", "L9", {}, ""},
      {"j13", JT::kRevolute, "L8", "L10", {}, ""},
      {"j14", JT::kRevolute, "L11", "L12", {}, ""},
      {"j15", JT::kRevolute, "L3", "L12", {}, ""},
      {"j16", JT::kRevolute, "L12", "massed_radius", {}, ""},
      {"j17", JT::kPrismaticFdc, "L10", "L11", {}, "l_10b"},
  };
  // Anchors from the assembly reference pose when it exists.
  try {
    const KinematicState ref = solve_loop_closure(t, 0.0, geometry.fdc_nominal);
    const auto pos = joint_positions(geometry, ref.q);
    for (std::size_t i = 0; i < t.joints.size(); ++i) t.joints[i].anchor_m = pos[i];
  } catch (const Error&) {
    // Geometry that cannot assemble keeps zero anchors; validate() reports it.
  }
  return t;
}

LinkageTopology default_topology() { return make_topology(LinkageGeometry{}); }

int LinkageTopology::independent_loops() const {
  // Union-find over ground + links; cycles = E - V + components.
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end()) {
      parent[x] = x;
      return x;
    }
    if (it->second == x) return x;
    return it->second = find(it->second);
  };
  std::set<std::string> nodes{"ground"};
  for (const auto& l : links) nodes.insert(l.id);
  int edges = 0;
  for (const auto& j : joints) {
    if (!nodes.count(j.parent) || !nodes.count(j.child)) continue;  // coupling sites
    ++edges;
    const auto a = find(j.parent), b = find(j.child);
    if (a != b) parent[a] = b;
  }
  std::set<std::string> roots;
  for (const auto& n : nodes) roots.insert(find(n));
  return edges - static_cast<int>(nodes.size()) + static_cast<int>(roots.size());
}

void LinkageTopology::validate() const {
  if (links.size() != 12) throw ValidationError("kinematics.links", "expected exactly 12 links");
  if (joints.size() != 17) throw ValidationError("kinematics.joints", "expected exactly 17 joints");
  std::set<std::string> fdc_joints;
  for (const auto& j : joints) {
    if (j.type == JointType::kPrismaticFdc) {
      if (!fdc_index(j.fdc_segment)) {
        throw ValidationError("kinematics.joints." + j.id, "prismatic joint on a non-FDC segment");
      }
      fdc_joints.insert(j.fdc_segment);
    }
  }
  if (fdc_joints.size() != 4) {
    throw ValidationError("kinematics.joints", "expected exactly 4 prismatic FDC joints (l_3b, l_3c, l_8b, l_10b)");
  }
  for (const auto& id : crank_joints) {
    bool ok = false;
    for (const auto& j : joints) ok |= (j.id == id && j.type == JointType::kRevolute && j.parent == "ground");
    if (!ok) throw ValidationError("kinematics.crank_joints", "crank joint " + id + " must be a grounded revolute");
  }
  if (independent_loops() < 3) {
    throw ValidationError("kinematics.joints", "constraint graph needs one closed loop per four-bar stage");
  }
  const auto& g = geometry;
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("kinematics.") + key, "must be positive");
  };
  positive("crank1_radius_m", g.crank1_radius);
  positive("coupler_a_length_m", g.coupler_a_length);
  positive("crank2_radius_m", g.crank2_radius);
  positive("coupler_b_length_m", g.coupler_b_length);
  positive("rocker_b_lever_m", g.rocker_b_lever);
  positive("pushrod_fixed_length_m", g.pushrod_fixed_length);
  positive("radius_lever_m", g.radius_lever);
  positive("elbow_distance_m", g.elbow_distance);
  positive("joint5_distance_m", g.joint5_distance);
  positive("joint16_distance_m", g.joint16_distance);
  for (int i = 0; i < kFdcCount; ++i) {
    const std::string key = "kinematics.fdc." + std::string(kFdcNames[i]);
    if (!(g.fdc_min[i] > 0.0)) throw ValidationError(key + ".min_m", "must be positive");
    if (!(g.fdc_min[i] < g.fdc_max[i])) throw ValidationError(key, "l_min must be below l_max");
    if (!(g.fdc_nominal[i] >= g.fdc_min[i] && g.fdc_nominal[i] <= g.fdc_max[i])) {
      throw ValidationError(key + ".nominal_m", "nominal length outside [l_min, l_max]");
    }
  }
}

}  // namespace flapsim::kin
