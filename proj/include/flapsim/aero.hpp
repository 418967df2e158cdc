#pragma once

// Quasi-steady blade-element aerodynamics on four rectangular wing segments.
//
// Segment axes (body coordinates): chord c = -x (leading to trailing edge),
// span s = outboard along the carrying link, normal n = in-plane normal of the
// link. The flow at a strip is the air velocity relative to the wing; its
// angle of attack is atan2(flow . n, flow . c).

#include "flapsim/dynamics.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace flapsim::aero {

using dyn::GenVector;
using dyn::Mat3;
using dyn::Vec3;

struct AeroEnvironment {
  double density = 1.225;  // kg/m^3
  // C_L = a0 + a1 sin(a2 alpha + a3), C_D = b0 - b1 cos(b2 alpha + b3).
  std::array<double, 4> lift{0.0, 1.58, 2.0, 0.0};
  std::array<double, 4> drag{1.92, 1.55, 2.0, 0.0};
  void validate() const;
};

struct WingSegment {
  std::string id;       // LH, LR, RH, RR
  int link = 0;         // dyn::WingLink carrying the membrane
  double chord = 0.0;   // m
  double span = 0.0;    // m
  double root_offset = 0.0;      // start of the membrane along the link, m
  double leading_edge_x = 0.0;   // body-x offset of the leading edge from the link axis, m
  int n_strips = 10;
  void validate() const;
};

// Default geometry: humerus and radius membranes on both wings.
std::array<WingSegment, 4> default_segments();
double total_area(const std::array<WingSegment, 4>& segments);

struct BladeElement {
  int segment = 0;
  int link = 0;
  int k = 0;
  double chord = 0.0;
  double ds = 0.0;
  Vec3 pressure_local = Vec3::Zero();   // quarter chord, link coordinates (x, a, b)
  Vec3 midchord_local = Vec3::Zero();   // mid chord, link coordinates
};

std::vector<BladeElement> blade_elements(const std::array<WingSegment, 4>& segments);

std::pair<double, double> lift_drag_coefficients(double alpha, const AeroEnvironment& env);

struct Airspeed {
  double v_r = 0.0;
  double alpha = 0.0;
  bool degenerate = false;  // projected speed below threshold; alpha undefined
};

inline constexpr double kDegenerateSpeed = 1e-9;

// flow: relative air velocity at the mid chord in segment axes (c, s, n).
Airspeed effective_airspeed(const Vec3& flow);

struct StripForce {
  Airspeed air;
  double lift = 0.0;
  double drag = 0.0;
  Mat3 R_k = Mat3::Identity();    // columns: lift, span, drag directions in body axes
  Vec3 force_body = Vec3::Zero(); // R_k [L, 0, D]
};

// axes: columns (c, s, n) in body coordinates; flow_body is the relative air
// velocity in body coordinates.
StripForce strip_force(const Vec3& flow_body, const Mat3& axes, double chord, double ds,
                       const AeroEnvironment& env);

// Segment axes (c, s, n) in body coordinates for the link carrying it.
Mat3 segment_axes(const dyn::DynamicState& s, int link);

struct StripSample {
  int element = 0;
  double alpha = 0.0;
  double v_r = 0.0;
  double lift = 0.0;
  double drag = 0.0;
};

struct AeroResult {
  AeroResult() {
    segment_force.fill(Vec3::Zero());
    segment_moment.fill(Vec3::Zero());
  }
  std::array<Vec3, 4> segment_force;   // inertial frame
  std::array<Vec3, 4> segment_moment;  // about the body origin, body axes
  GenVector Q = GenVector::Zero();
  double power = 0.0;  // sum of strip force . pressure-point velocity
  std::vector<StripSample> strips;  // filled when requested
};

// Reference implementation, one strip after another.
AeroResult aero_forces_serial(const dyn::DynamicState& s, const dyn::MassProperties& mp,
                              const std::vector<BladeElement>& elements, const AeroEnvironment& env,
                              bool record_strips = false);
// OpenMP strip evaluation with the same fixed-order reduction; bitwise equal
// to the serial result.
AeroResult aero_forces_parallel(const dyn::DynamicState& s, const dyn::MassProperties& mp,
                                const std::vector<BladeElement>& elements, const AeroEnvironment& env,
                                bool record_strips = false);

}  // namespace flapsim::aero
