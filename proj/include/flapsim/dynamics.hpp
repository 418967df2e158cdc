#pragma once

// Massed subsystem: the body plus the humerus and radius links of both wings.
//
// Generalized velocity v = [p_dot (inertial, 3), phi_dot (4), omega^B (3)].
// Wing angles phi = [left humerus, left radius, right humerus, right radius];
// humerus angles are absolute in the wing-root plane, radius angles are
// relative to their humerus. The left wing-root plane maps (u, v) onto body
// (y, z) at the shoulder; the right wing is its mirror image through y = 0.

#include "flapsim/kinematics.hpp"

#include <Eigen/Dense>

#include <array>

namespace flapsim::dyn {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kDof = 10;
using GenVector = Eigen::Matrix<double, kDof, 1>;
using GenMatrix = Eigen::Matrix<double, kDof, kDof>;
using PointJacobian = Eigen::Matrix<double, 3, kDof>;

// Index offsets inside the generalized velocity.
inline constexpr int kVelP = 0;
inline constexpr int kVelPhi = 3;
inline constexpr int kVelOmega = 7;

enum WingLink : int { kLeftHumerus = 0, kLeftRadius = 1, kRightHumerus = 2, kRightRadius = 3 };
inline constexpr int kWingLinks = 4;

inline bool is_left(int link) { return link < 2; }
inline bool is_radius(int link) { return link % 2 == 1; }

struct LinkProps {
  double mass = 0.0;
  // COM in link coordinates: x along body x, a along the link axis, b normal
  // to the link inside the wing-root plane.
  Vec3 com{0.0, 0.0, 0.0};
  // Inertia about the COM in link axes (body x, link axis, in-plane normal).
  Mat3 inertia = Mat3::Zero();
};

struct MassProperties {
  double body_mass = 0.022;
  Mat3 body_inertia = Vec3(1.2e-5, 1.8e-5, 1.6e-5).asDiagonal();
  Vec3 shoulder{0.0, 0.015, 0.01};  // left shoulder pivot in body coordinates
  double elbow_distance = 0.055;   // humerus axis length, shoulder to elbow
  LinkProps humerus{0.0015, {-0.01, 0.0275, 0.0}, Vec3(3.8e-7, 2.0e-7, 5.8e-7).asDiagonal()};
  LinkProps radius{0.002, {-0.01, 0.0475, 0.0}, Vec3(1.5e-6, 4.2e-7, 1.9e-6).asDiagonal()};

  double total_mass() const { return body_mass + 2.0 * (humerus.mass + radius.mass); }
  // Throws ValidationError for non-positive masses or non-SPD inertia.
  void validate() const;
};

struct DynamicState {
  Vec3 p = Vec3::Zero();
  Vec4 phi = Vec4::Zero();
  Mat3 R = Mat3::Identity();
  Vec3 p_dot = Vec3::Zero();
  Vec4 phi_dot = Vec4::Zero();
  Vec3 omega = Vec3::Zero();

  Eigen::Matrix<double, 7, 1> q_d() const;
  Eigen::Matrix<double, 7, 1> q_d_dot() const;
  GenVector velocity() const;
  void set_velocity(const GenVector& v);
};

// Kinematics of one material point rigidly attached to a wing link (or to the
// body when link < 0).
struct PointKinematics {
  Vec3 r = Vec3::Zero();         // body coordinates, relative to the body origin
  Vec3 r_dot = Vec3::Zero();     // rate of r seen from the body frame
  Vec3 r_ddot_bias = Vec3::Zero();  // r_ddot with phi_ddot = 0
  Eigen::Matrix<double, 3, 4> jr = Eigen::Matrix<double, 3, 4>::Zero();  // dr/dphi
};

// local = (x, a, b) in link coordinates.
PointKinematics link_point(const DynamicState& s, const MassProperties& mp, int link, const Vec3& local);

// Maps v to the inertial velocity of the point, expressed in body coordinates.
PointJacobian point_jacobian(const DynamicState& s, const PointKinematics& pk);

// Link inertia about its COM in body axes, and the link's absolute angular
// velocity (body coordinates) omega_link = omega + axis * rate.
Mat3 link_inertia_body(const DynamicState& s, const MassProperties& mp, int link);
Vec3 link_axis(int link);  // +x for the left wing, -x for the right
double link_abs_rate(const DynamicState& s, int link);

GenMatrix mass_matrix(const DynamicState& s, const MassProperties& mp);
// Coriolis/centrifugal and gravity terms; gravity is the inertial vector g.
GenVector bias_forces(const DynamicState& s, const MassProperties& mp, const Vec3& gravity);
// v_dot = M^{-1}(Q - h).
GenVector dynamics_accel(const DynamicState& s, const MassProperties& mp, const GenVector& forces,
                         const Vec3& gravity);

double kinetic_energy(const DynamicState& s, const MassProperties& mp);
double gravity_potential(const DynamicState& s, const MassProperties& mp, const Vec3& gravity);
Vec3 center_of_mass(const DynamicState& s, const MassProperties& mp);  // inertial
Vec3 linear_momentum(const DynamicState& s, const MassProperties& mp);  // inertial
// Total angular momentum of all massed bodies about the given inertial point.
Vec3 angular_momentum(const DynamicState& s, const MassProperties& mp, const Vec3& about);

// Skew-symmetric cross-product matrix.
Mat3 hat(const Vec3& w);
// Closest rotation (polar factor).
Mat3 orthonormalize(const Mat3& R);
// One RK4 step of R_dot = R hat(omega) at constant omega, re-orthonormalized.
Mat3 step_attitude(const Mat3& R, const Vec3& omega, double dt);
// Z-Y-X Tait-Bryan pitch.
double pitch_angle(const Mat3& R);

// Spring-damper coupling between the massed links and the driven joints.
struct CouplingSite {
  double stiffness = 1.4e4;   // N/m
  double damping = 30.0;      // N s/m
  double rest_length = 0.0;   // m
  double attach_distance = 0.020;  // along the massed link, m
};

struct JointCoupling {
  // Sites in WingLink order: left humerus <-> j5, left radius <-> j16, and
  // the mirrored right-wing pair.
  std::array<CouplingSite, kWingLinks> sites{{{1.4e4, 30.0, 0.0, 0.020},
                                              {1.4e4, 3.0, 0.0, 0.020},
                                              {1.4e4, 30.0, 0.0, 0.020},
                                              {1.4e4, 3.0, 0.0, 0.020}}};
  void validate() const;
};

// Planar positions/velocities of j5 and j16 for one wing (the right wing is
// driven by the mirror image of the same chain).
struct DrivenPoints {
  kin::Vec2 p5 = kin::Vec2::Zero(), p16 = kin::Vec2::Zero();
  kin::Vec2 v5 = kin::Vec2::Zero(), v16 = kin::Vec2::Zero();
};

struct CouplingResult {
  CouplingResult() {
    delta.fill(Vec3::Zero());
    spring_force.fill(Vec3::Zero());
    damper_force.fill(Vec3::Zero());
  }
  std::array<Vec3, kWingLinks> delta;          // attachment minus driven point, body coords
  std::array<Vec3, kWingLinks> spring_force;   // on the massed link, body coords
  std::array<Vec3, kWingLinks> damper_force;
  Eigen::Matrix<double, kDof, 3 * kWingLinks> B_s = Eigen::Matrix<double, kDof, 3 * kWingLinks>::Zero();
  Eigen::Matrix<double, 3 * kWingLinks, 1> u_s = Eigen::Matrix<double, 3 * kWingLinks, 1>::Zero();
  GenVector Q = GenVector::Zero();
  double potential = 0.0;
  double damper_power = 0.0;  // <= 0, dissipated in the dampers
  double drive_power = 0.0;   // work rate of the driven joints on the springs/dampers
};

CouplingResult coupling_forces(const DynamicState& s, const MassProperties& mp, const DrivenPoints& driven,
                               const JointCoupling& coupling, bool damping_on);

// Driven point of a coupling site in body coordinates.
Vec3 driven_point_body(const MassProperties& mp, int link, const kin::Vec2& planar);
Vec3 driven_velocity_body(int link, const kin::Vec2& planar_velocity);

// Wing angles that put every attachment exactly on its driven joint.
Vec4 matched_wing_angles(const kin::LinkageGeometry& g, const kin::CoordVector& q);

}  // namespace flapsim::dyn
