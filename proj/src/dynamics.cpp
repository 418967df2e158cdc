#include "flapsim/dynamics.hpp"

#include "flapsim/errors.hpp"

#include <cmath>

namespace flapsim::dyn {

namespace {

constexpr int kBodies = 1 + kWingLinks;

using Vec2 = kin::Vec2;

Vec2 rot2(double a, const Vec2& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// Wing-root plane to body coordinates (direction part only).
Vec3 plane_to_body(bool left, const Vec2& w) { return {0.0, left ? w.x() : -w.x(), w.y()}; }

Vec3 shoulder_of(const MassProperties& mp, bool left) {
  return left ? mp.shoulder : Vec3(mp.shoulder.x(), -mp.shoulder.y(), mp.shoulder.z());
}

int humerus_index(int link) { return is_left(link) ? 0 : 2; }

// Per-body quantities shared by the mass matrix, bias and energy routines.
struct BodyTerms {
  double m = 0.0;
  Vec3 r = Vec3::Zero();
  PointJacobian jv = PointJacobian::Zero();
  Eigen::Matrix<double, 3, kDof> jw = Eigen::Matrix<double, 3, kDof>::Zero();
  Vec3 acc_bias = Vec3::Zero();  // body-coordinate acceleration with v_dot = 0
  Mat3 inertia = Mat3::Zero();
  Vec3 omega_link = Vec3::Zero();
  Vec3 alpha_bias = Vec3::Zero();  // angular acceleration with v_dot = 0
};

std::array<BodyTerms, kBodies> body_terms(const DynamicState& s, const MassProperties& mp) {
  std::array<BodyTerms, kBodies> out;
  const Vec3& w = s.omega;

  BodyTerms& body = out[0];
  body.m = mp.body_mass;
  body.jv.block<3, 3>(0, kVelP) = s.R.transpose();
  body.jw.block<3, 3>(0, kVelOmega) = Mat3::Identity();
  body.inertia = mp.body_inertia;
  body.omega_link = w;

  for (int link = 0; link < kWingLinks; ++link) {
    BodyTerms& b = out[1 + link];
    const LinkProps& lp = is_radius(link) ? mp.radius : mp.humerus;
    const PointKinematics pk = link_point(s, mp, link, lp.com);
    b.m = lp.mass;
    b.r = pk.r;
    b.jv = point_jacobian(s, pk);
    b.acc_bias = w.cross(w.cross(pk.r)) + 2.0 * w.cross(pk.r_dot) + pk.r_ddot_bias;
    const Vec3 axis = link_axis(link);
    const int h = humerus_index(link);
    b.jw.block<3, 3>(0, kVelOmega) = Mat3::Identity();
    b.jw.col(kVelPhi + h) = axis;
    if (is_radius(link)) b.jw.col(kVelPhi + h + 1) = axis;
    const double rate = link_abs_rate(s, link);
    b.inertia = link_inertia_body(s, mp, link);
    b.omega_link = w + axis * rate;
    b.alpha_bias = w.cross(axis * rate);
  }
  return out;
}

}  // namespace

Eigen::Matrix<double, 7, 1> DynamicState::q_d() const {
  Eigen::Matrix<double, 7, 1> q;
  q << p, phi;
  return q;
}

Eigen::Matrix<double, 7, 1> DynamicState::q_d_dot() const {
  Eigen::Matrix<double, 7, 1> q;
  q << p_dot, phi_dot;
  return q;
}

GenVector DynamicState::velocity() const {
  GenVector v;
  v << p_dot, phi_dot, omega;
  return v;
}

void DynamicState::set_velocity(const GenVector& v) {
  p_dot = v.segment<3>(kVelP);
  phi_dot = v.segment<4>(kVelPhi);
  omega = v.segment<3>(kVelOmega);
}

void MassProperties::validate() const {
  auto spd = [](const Mat3& m, const std::string& key) {
    if (!m.allFinite() || (m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) {
      throw NonPositiveDefinite(key + ": inertia tensor is not symmetric");
    }
    Eigen::LLT<Mat3> llt(m);
    if (llt.info() != Eigen::Success) throw NonPositiveDefinite(key + ": inertia tensor is not positive definite");
  };
  if (!(body_mass > 0.0)) throw ValidationError("mass.body.mass_kg", "must be positive");
  if (!(humerus.mass > 0.0)) throw ValidationError("mass.humerus.mass_kg", "must be positive");
  if (!(radius.mass > 0.0)) throw ValidationError("mass.radius.mass_kg", "must be positive");
  if (!(elbow_distance > 0.0)) throw ValidationError("mass.elbow_distance_m", "must be positive");
  if (!shoulder.allFinite()) throw ValidationError("mass.shoulder_m", "not finite");
  spd(body_inertia, "mass.body.inertia_kg_m2");
  spd(humerus.inertia, "mass.humerus.inertia_kg_m2");
  spd(radius.inertia, "mass.radius.inertia_kg_m2");
}

void JointCoupling::validate() const {
  static const char* names[kWingLinks] = {"left_humerus", "left_radius", "right_humerus", "right_radius"};
  for (int i = 0; i < kWingLinks; ++i) {
    const std::string key = std::string("coupling.") + names[i];
    const CouplingSite& c = sites[i];
    if (!(c.stiffness >= 0.0) || !std::isfinite(c.stiffness)) {
      throw ValidationError(key + ".stiffness_n_per_m", "must be finite and >= 0");
    }
    if (!(c.damping >= 0.0) || !std::isfinite(c.damping)) {
      throw ValidationError(key + ".damping_n_s_per_m", "must be finite and >= 0");
    }
    if (!(c.rest_length >= 0.0) || !std::isfinite(c.rest_length)) {
      throw ValidationError(key + ".rest_length_m", "must be finite and >= 0");
    }
    if (!std::isfinite(c.attach_distance)) throw ValidationError(key + ".attach_distance_m", "not finite");
  }
}

Vec3 link_axis(int link) { return is_left(link) ? Vec3::UnitX() : Vec3(-1.0, 0.0, 0.0); }

double link_abs_rate(const DynamicState& s, int link) {
  const int h = humerus_index(link);
  return is_radius(link) ? s.phi_dot[h] + s.phi_dot[h + 1] : s.phi_dot[h];
}

Mat3 link_inertia_body(const DynamicState& s, const MassProperties& mp, int link) {
  const int h = humerus_index(link);
  const double psi = is_radius(link) ? s.phi[h] + s.phi[h + 1] : s.phi[h];
  const Vec2 e(std::cos(psi), std::sin(psi));
  Mat3 frame;
  frame.col(0) = Vec3::UnitX();
  frame.col(1) = plane_to_body(true, e);
  frame.col(2) = plane_to_body(true, perp(e));
  const Mat3& local = is_radius(link) ? mp.radius.inertia : mp.humerus.inertia;
  Mat3 I = frame * local * frame.transpose();
  if (!is_left(link)) {
    const Vec3 sdiag(1.0, -1.0, 1.0);
    I = sdiag.asDiagonal() * I * sdiag.asDiagonal();
  }
  return I;
}

PointKinematics link_point(const DynamicState& s, const MassProperties& mp, int link, const Vec3& local) {
  const bool left = is_left(link);
  const int h = humerus_index(link);
  const double ph = s.phi[h];
  const double rh = s.phi_dot[h];
  const Vec2 ab(local.y(), local.z());

  Vec2 w, w_dot, w_bias, dw_dh, dw_dr = Vec2::Zero();
  if (!is_radius(link)) {
    w = rot2(ph, ab);
    dw_dh = perp(w);
    w_dot = rh * dw_dh;
    w_bias = -rh * rh * w;
  } else {
    const double pr = ph + s.phi[h + 1];
    const double rr = rh + s.phi_dot[h + 1];
    const Vec2 elbow = rot2(ph, {mp.elbow_distance, 0.0});
    const Vec2 tail = rot2(pr, ab);
    w = elbow + tail;
    dw_dh = perp(w);
    dw_dr = perp(tail);
    w_dot = rh * perp(elbow) + rr * perp(tail);
    w_bias = -rh * rh * elbow - rr * rr * tail;
  }

  PointKinematics pk;
  pk.r = shoulder_of(mp, left) + Vec3(local.x(), 0.0, 0.0) + plane_to_body(left, w);
  pk.r_dot = plane_to_body(left, w_dot);
  pk.r_ddot_bias = plane_to_body(left, w_bias);
  pk.jr.col(h) = plane_to_body(left, dw_dh);
  if (is_radius(link)) pk.jr.col(h + 1) = plane_to_body(left, dw_dr);
  return pk;
}

PointJacobian point_jacobian(const DynamicState& s, const PointKinematics& pk) {
  PointJacobian j;
  j.block<3, 3>(0, kVelP) = s.R.transpose();
  j.block<3, 4>(0, kVelPhi) = pk.jr;
  j.block<3, 3>(0, kVelOmega) = -hat(pk.r);
  return j;
}

GenMatrix mass_matrix(const DynamicState& s, const MassProperties& mp) {
  GenMatrix M = GenMatrix::Zero();
  for (const BodyTerms& b : body_terms(s, mp)) {
    M.noalias() += b.m * b.jv.transpose() * b.jv;
    M.noalias() += b.jw.transpose() * b.inertia * b.jw;
  }
  // Exact symmetry regardless of summation order.
  return 0.5 * (M + M.transpose());
}

GenVector bias_forces(const DynamicState& s, const MassProperties& mp, const Vec3& gravity) {
  GenVector h = GenVector::Zero();
  const Vec3 g_body = s.R.transpose() * gravity;
  for (const BodyTerms& b : body_terms(s, mp)) {
    h.noalias() += b.m * b.jv.transpose() * (b.acc_bias - g_body);
    h.noalias() += b.jw.transpose() *
                   (b.inertia * b.alpha_bias + b.omega_link.cross(b.inertia * b.omega_link));
  }
  return h;
}

GenVector dynamics_accel(const DynamicState& s, const MassProperties& mp, const GenVector& forces,
                         const Vec3& gravity) {
  const GenMatrix M = mass_matrix(s, mp);
  Eigen::LLT<GenMatrix> llt(M);
  if (llt.info() != Eigen::Success) throw NonPositiveDefinite("massed-subsystem mass matrix is not positive definite");
  if (!(llt.rcond() > 1e-12)) {
    throw SingularMassMatrix("massed-subsystem mass matrix is ill-conditioned (rcond " +
                             std::to_string(llt.rcond()) + ")");
  }
  return llt.solve(forces - bias_forces(s, mp, gravity));
}

double kinetic_energy(const DynamicState& s, const MassProperties& mp) {
  const GenVector v = s.velocity();
  double t = 0.0;
  for (const BodyTerms& b : body_terms(s, mp)) {
    const Vec3 vc = b.jv * v;
    t += 0.5 * b.m * vc.squaredNorm() + 0.5 * b.omega_link.dot(b.inertia * b.omega_link);
  }
  return t;
}

double gravity_potential(const DynamicState& s, const MassProperties& mp, const Vec3& gravity) {
  double u = 0.0;
  for (const BodyTerms& b : body_terms(s, mp)) u -= b.m * gravity.dot(s.p + s.R * b.r);
  return u;
}

Vec3 center_of_mass(const DynamicState& s, const MassProperties& mp) {
  Vec3 c = Vec3::Zero();
  double m = 0.0;
  for (const BodyTerms& b : body_terms(s, mp)) {
    c += b.m * (s.p + s.R * b.r);
    m += b.m;
  }
  return c / m;
}

Vec3 linear_momentum(const DynamicState& s, const MassProperties& mp) {
  const GenVector v = s.velocity();
  Vec3 l = Vec3::Zero();
  for (const BodyTerms& b : body_terms(s, mp)) l += b.m * (s.R * (b.jv * v));
  return l;
}

Vec3 angular_momentum(const DynamicState& s, const MassProperties& mp, const Vec3& about) {
  const GenVector v = s.velocity();
  Vec3 h = Vec3::Zero();
  for (const BodyTerms& b : body_terms(s, mp)) {
    const Vec3 x = s.p + s.R * b.r - about;
    h += b.m * x.cross(s.R * (b.jv * v)) + s.R * (b.inertia * b.omega_link);
  }
  return h;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return m;
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

Mat3 step_attitude(const Mat3& R, const Vec3& omega, double dt) {
  const Mat3 W = hat(omega);
  const Mat3 k1 = R * W;
  const Mat3 k2 = (R + 0.5 * dt * k1) * W;
  const Mat3 k3 = (R + 0.5 * dt * k2) * W;
  const Mat3 k4 = (R + dt * k3) * W;
  return orthonormalize(R + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

double pitch_angle(const Mat3& R) {
  return std::atan2(-R(2, 0), std::sqrt(R(0, 0) * R(0, 0) + R(1, 0) * R(1, 0)));
}

Vec3 driven_point_body(const MassProperties& mp, int link, const kin::Vec2& planar) {
  return shoulder_of(mp, is_left(link)) + plane_to_body(is_left(link), planar);
}

Vec3 driven_velocity_body(int link, const kin::Vec2& planar_velocity) {
  return plane_to_body(is_left(link), planar_velocity);
}

CouplingResult coupling_forces(const DynamicState& s, const MassProperties& mp, const DrivenPoints& driven,
                               const JointCoupling& coupling, bool damping_on) {
  CouplingResult out;
  const Eigen::Matrix<double, 4, 1> phi_dot = s.phi_dot;
  for (int link = 0; link < kWingLinks; ++link) {
    const CouplingSite& site = coupling.sites[link];
    const PointKinematics pk = link_point(s, mp, link, Vec3(0.0, site.attach_distance, 0.0));
    const kin::Vec2& p = is_radius(link) ? driven.p16 : driven.p5;
    const kin::Vec2& pv = is_radius(link) ? driven.v16 : driven.v5;
    const Vec3 delta = pk.r - driven_point_body(mp, link, p);
    const Vec3 v_drv = driven_velocity_body(link, pv);
    // Relative inertial velocity of attachment and driven point, body coords.
    const Vec3 delta_rate = s.omega.cross(delta) + pk.jr * phi_dot - v_drv;

    Vec3 fs = Vec3::Zero();
    const double len = delta.norm();
    if (site.rest_length == 0.0) {
      fs = -site.stiffness * delta;
      out.potential += 0.5 * site.stiffness * len * len;
    } else {
      if (len > 0.0) fs = -site.stiffness * (len - site.rest_length) * delta / len;
      out.potential += 0.5 * site.stiffness * (len - site.rest_length) * (len - site.rest_length);
    }
    const Vec3 fd = damping_on ? Vec3(-site.damping * delta_rate) : Vec3::Zero();

    Eigen::Matrix<double, 3, kDof> jrel = Eigen::Matrix<double, 3, kDof>::Zero();
    jrel.block<3, 4>(0, kVelPhi) = pk.jr;
    jrel.block<3, 3>(0, kVelOmega) = -hat(delta);
    out.B_s.block<kDof, 3>(0, 3 * link) = jrel.transpose();
    out.u_s.segment<3>(3 * link) = fs + fd;

    out.delta[link] = delta;
    out.spring_force[link] = fs;
    out.damper_force[link] = fd;
    out.damper_power += fd.dot(delta_rate);
    out.drive_power += (fs + fd).dot(v_drv);
  }
  out.Q = out.B_s * out.u_s;
  return out;
}

Vec4 matched_wing_angles(const kin::LinkageGeometry& g, const kin::CoordVector& q) {
  const double humerus = q[kin::kTheta4] + g.humerus_offset;
  const double radius = q[kin::kTheta14] - humerus;
  return {humerus, radius, humerus, radius};
}

}  // namespace flapsim::dyn
