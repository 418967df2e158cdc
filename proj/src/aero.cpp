#include "flapsim/aero.hpp"

#include "flapsim/errors.hpp"

#include <cmath>
#include <numbers>

namespace flapsim::aero {

namespace {

struct Contribution {
  int segment = 0;
  Vec3 force = Vec3::Zero();   // inertial
  Vec3 moment = Vec3::Zero();  // body axes, about the body origin
  GenVector Q = GenVector::Zero();
  double power = 0.0;
  StripSample sample;
};

Contribution evaluate(const dyn::DynamicState& s, const dyn::MassProperties& mp, const BladeElement& e,
                      int link, const Mat3& axes, const AeroEnvironment& env, int index) {
  Contribution c;
  c.segment = e.segment;
  const dyn::PointKinematics pk = dyn::link_point(s, mp, link, e.midchord_local);
  const Vec3 v_mid = s.R.transpose() * s.p_dot + s.omega.cross(pk.r) + pk.r_dot;
  const StripForce sf = strip_force(-v_mid, axes, e.chord, e.ds, env);
  const Vec3 r_a = pk.r + Vec3(e.pressure_local.x() - e.midchord_local.x(), 0.0, 0.0);
  const Vec3& fb = sf.force_body;
  c.force = s.R * fb;
  c.moment = r_a.cross(fb);
  c.Q.segment<3>(dyn::kVelP) = c.force;
  c.Q.segment<4>(dyn::kVelPhi) = pk.jr.transpose() * fb;
  c.Q.segment<3>(dyn::kVelOmega) = c.moment;
  const Vec3 v_a = v_mid + s.omega.cross(r_a - pk.r);
  c.power = fb.dot(v_a);
  c.sample = {index, sf.air.alpha, sf.air.v_r, sf.lift, sf.drag};
  return c;
}

AeroResult reduce(const std::vector<Contribution>& parts, bool record) {
  AeroResult out;
  for (const Contribution& c : parts) {
    out.segment_force[c.segment] += c.force;
    out.segment_moment[c.segment] += c.moment;
    out.Q += c.Q;
    out.power += c.power;
  }
  if (record) {
    out.strips.reserve(parts.size());
    for (const Contribution& c : parts) out.strips.push_back(c.sample);
  }
  return out;
}

std::array<Mat3, 4> all_axes(const dyn::DynamicState& s) {
  std::array<Mat3, 4> axes;
  for (int link = 0; link < dyn::kWingLinks; ++link) axes[link] = segment_axes(s, link);
  return axes;
}

}  // namespace

void AeroEnvironment::validate() const {
  if (!(density > 0.0) || !std::isfinite(density)) throw ValidationError("aero.density_kg_per_m3", "must be positive");
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(lift[i])) throw ValidationError("aero.lift_coefficients", "not finite");
    if (!std::isfinite(drag[i])) throw ValidationError("aero.drag_coefficients", "not finite");
  }
  // C_D >= 0 for every alpha exactly when b0 >= |b1|.
  if (drag[0] < std::abs(drag[1])) {
    throw ValidationError("aero.drag_coefficients", "b0 must be at least |b1| so that C_D >= 0");
  }
}

void WingSegment::validate() const {
  const std::string key = "aero.segments." + id;
  if (!(chord > 0.0)) throw ValidationError(key + ".chord_m", "must be positive");
  if (!(span > 0.0)) throw ValidationError(key + ".span_m", "must be positive");
  if (n_strips < 1) throw ValidationError(key + ".n_strips", "must be at least 1");
  if (!std::isfinite(root_offset)) throw ValidationError(key + ".root_offset_m", "not finite");
  if (!std::isfinite(leading_edge_x)) throw ValidationError(key + ".leading_edge_x_m", "not finite");
}

std::array<WingSegment, 4> default_segments() {
  return {{
      {"LH", dyn::kLeftHumerus, 0.07, 0.055, 0.0, 0.01, 10},
      {"LR", dyn::kLeftRadius, 0.06, 0.095, 0.0, 0.01, 10},
      {"RH", dyn::kRightHumerus, 0.07, 0.055, 0.0, 0.01, 10},
      {"RR", dyn::kRightRadius, 0.06, 0.095, 0.0, 0.01, 10},
  }};
}

double total_area(const std::array<WingSegment, 4>& segments) {
  double a = 0.0;
  for (const auto& s : segments) a += s.chord * s.span;
  return a;
}

std::vector<BladeElement> blade_elements(const std::array<WingSegment, 4>& segments) {
  std::vector<BladeElement> out;
  for (int i = 0; i < 4; ++i) {
    const WingSegment& seg = segments[i];
    const double ds = seg.span / seg.n_strips;
    for (int k = 0; k < seg.n_strips; ++k) {
      BladeElement e;
      e.segment = i;
      e.link = seg.link;
      e.k = k;
      e.chord = seg.chord;
      e.ds = ds;
      const double a = seg.root_offset + (k + 0.5) * ds;
      e.pressure_local = Vec3(seg.leading_edge_x - 0.25 * seg.chord, a, 0.0);
      e.midchord_local = Vec3(seg.leading_edge_x - 0.5 * seg.chord, a, 0.0);
      out.push_back(e);
    }
  }
  return out;
}

std::pair<double, double> lift_drag_coefficients(double alpha, const AeroEnvironment& env) {
  const double a = std::remainder(alpha, 2.0 * std::numbers::pi);
  const auto& l = env.lift;
  const auto& d = env.drag;
  return {l[0] + l[1] * std::sin(l[2] * a + l[3]), d[0] - d[1] * std::cos(d[2] * a + d[3])};
}

Airspeed effective_airspeed(const Vec3& flow) {
  Airspeed a;
  a.v_r = std::hypot(flow.x(), flow.z());
  if (a.v_r < kDegenerateSpeed) {
    a.v_r = 0.0;
    a.degenerate = true;
    return a;
  }
  a.alpha = std::atan2(flow.z(), flow.x());
  return a;
}

StripForce strip_force(const Vec3& flow_body, const Mat3& axes, double chord, double ds,
                       const AeroEnvironment& env) {
  StripForce f;
  const Vec3 flow(flow_body.dot(axes.col(0)), flow_body.dot(axes.col(1)), flow_body.dot(axes.col(2)));
  f.air = effective_airspeed(flow);
  if (f.air.degenerate) return f;
  const auto [cl, cd] = lift_drag_coefficients(f.air.alpha, env);
  const double q = 0.5 * env.density * f.air.v_r * f.air.v_r * chord * ds;
  f.lift = q * cl;
  f.drag = q * cd;
  const double ca = std::cos(f.air.alpha), sa = std::sin(f.air.alpha);
  const Vec3 e_d = ca * axes.col(0) + sa * axes.col(2);
  const Vec3 e_l = -sa * axes.col(0) + ca * axes.col(2);
  f.R_k.col(0) = e_l;
  f.R_k.col(1) = e_d.cross(e_l);
  f.R_k.col(2) = e_d;
  f.force_body = f.lift * e_l + f.drag * e_d;
  return f;
}

Mat3 segment_axes(const dyn::DynamicState& s, int link) {
  const int h = dyn::is_left(link) ? 0 : 2;
  const double psi = dyn::is_radius(link) ? s.phi[h] + s.phi[h + 1] : s.phi[h];
  const double c = std::cos(psi), sn = std::sin(psi);
  const double side = dyn::is_left(link) ? 1.0 : -1.0;
  Mat3 axes;
  axes.col(0) = Vec3(-1.0, 0.0, 0.0);
  axes.col(1) = Vec3(0.0, side * c, sn);
  axes.col(2) = Vec3(0.0, -side * sn, c);
  return axes;
}

AeroResult aero_forces_serial(const dyn::DynamicState& s, const dyn::MassProperties& mp,
                              const std::vector<BladeElement>& elements, const AeroEnvironment& env,
                              bool record_strips) {
  const auto axes = all_axes(s);
  std::vector<Contribution> parts(elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const int link = elements[i].link;
    parts[i] = evaluate(s, mp, elements[i], link, axes[link], env, static_cast<int>(i));
  }
  return reduce(parts, record_strips);
}

AeroResult aero_forces_parallel(const dyn::DynamicState& s, const dyn::MassProperties& mp,
                                const std::vector<BladeElement>& elements, const AeroEnvironment& env,
                                bool record_strips) {
  const auto axes = all_axes(s);
  const int n = static_cast<int>(elements.size());
  std::vector<Contribution> parts(elements.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int link = elements[i].link;
    parts[i] = evaluate(s, mp, elements[i], link, axes[link], env, i);
  }
  return reduce(parts, record_strips);
}

}  // namespace flapsim::aero
