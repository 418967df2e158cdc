#pragma once

// Massless kinetic-sculpture linkage: topology, loop closure, constrained
// kinematic equation of motion and the driven-joint (5 and 16) outputs.
//
// All positions live in the planar wing-root frame: origin at the shoulder
// pivot (joint 3), u axis pointing outboard along the span, v axis pointing up.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flapsim::kin {

using Vec2 = Eigen::Vector2d;

inline constexpr int kCoords = 12;
inline constexpr int kInputs = 5;
inline constexpr int kConstraints = 7;
inline constexpr int kFdcCount = 4;

// Layout of the 12-coordinate state. Each theta_i is the absolute orientation
// (from the u axis) of the link distal to joint i:
//   theta1  crank 1 (L1)              theta9  crank 2 (L6), geared to theta1
//   theta2  coupler A (L2)            theta10 coupler B (L7)
//   theta4  humerus plate (L3)        theta12 rocker B (L8)
//   theta13 pushrod (L10)             theta14 KS radius (L12)
enum Coord : int {
  kTheta1 = 0,
  kTheta2,
  kTheta4,
  kTheta9,
  kTheta10,
  kTheta12,
  kTheta13,
  kTheta14,
  kL3b,
  kL3c,
  kL8b,
  kL10b,
};

inline constexpr std::array<int, kInputs> kIndependent = {kTheta1, kL3b, kL3c, kL8b, kL10b};
inline constexpr std::array<int, kConstraints> kDependent = {
    kTheta2, kTheta4, kTheta9, kTheta10, kTheta12, kTheta13, kTheta14};

using CoordVector = Eigen::Matrix<double, kCoords, 1>;
using InputVector = Eigen::Matrix<double, kInputs, 1>;
using FdcVector = Eigen::Vector4d;
using ConstraintVector = Eigen::Matrix<double, kConstraints, 1>;
using ConstraintJacobian = Eigen::Matrix<double, kConstraints, kCoords>;
using CoordMatrix = Eigen::Matrix<double, kCoords, kCoords>;

// FDC names in the order of the fdc_lengths vector.
std::string_view fdc_name(int index);
std::optional<int> fdc_index(std::string_view name);

// Every length and anchor that shapes the default mechanism. Units: m, rad.
struct LinkageGeometry {
  Vec2 crank1_center{-0.018, -0.006};
  double crank1_radius = 0.0055;
  double coupler_a_length = 0.019;
  double humerus_offset = -1.3613568165555772;  // humerus axis minus plate axis

  Vec2 crank2_center{-0.014, 0.012};
  double crank2_radius = 0.0015;
  double gear_ratio = 1.0;
  double crank2_phase = 0.0;
  double coupler_b_length = 0.015;
  Vec2 rocker_b_pivot{0.0, 0.005};
  double rocker_b_lever = 0.008;
  double rocker_b_lever_angle = 3.141592653589793;

  double pushrod_fixed_length = 0.0478;
  double radius_lever = 0.008;
  double radius_lever_angle = 1.5707963267948966;

  double elbow_distance = 0.055;
  double joint5_distance = 0.020;
  double joint16_distance = 0.020;

  FdcVector fdc_nominal{7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3};
  FdcVector fdc_min{4.8e-3, 7.5e-3, 3.2e-3, 4.2e-3};
  FdcVector fdc_max{10.8e-3, 13.5e-3, 9.2e-3, 10.2e-3};

  // Dyad branch sign per loop (A, B, C) selecting the assembly mode.
  std::array<int, 3> assembly_branch{1, 1, 1};

  // Scalar parameters addressable by name (sensitivity analysis, overrides).
  double* scalar(std::string_view name);
  const double* scalar(std::string_view name) const;
  static const std::vector<std::string>& scalar_names();
};

enum class JointType { kRevolute, kPrismaticFdc };

struct LinkDescriptor {
  std::string id;
  std::string role;
  double nominal_length_m = 0.0;
  std::vector<std::string> fdc_segments;
};

struct JointDescriptor {
  std::string id;
  JointType type = JointType::kRevolute;
  std::string parent;  // "ground" for body-fixed pivots
  std::string child;
  Vec2 anchor_m = Vec2::Zero();  // position in the assembly reference pose
  std::string fdc_segment;        // set for prismatic FDC joints
};

struct LinkageTopology {
  std::vector<LinkDescriptor> links;
  std::vector<JointDescriptor> joints;
  std::array<std::string, 2> crank_joints{"j1", "j9"};
  LinkageGeometry geometry;

  // Throws ValidationError naming the violated invariant.
  void validate() const;
  // Independent cycles of the constraint graph (coupling-site joints excluded).
  int independent_loops() const;
};

// Builds the 12-link / 17-joint descriptor lists for a geometry; anchors are
// the joint positions of the assembly reference pose (crank at zero, nominal
// FDC lengths).
LinkageTopology make_topology(const LinkageGeometry& geometry);
LinkageTopology default_topology();

struct KinematicState {
  CoordVector q = CoordVector::Zero();
  CoordVector qdot = CoordVector::Zero();

  double crank_angle() const { return q[kTheta1]; }
  double crank_rate() const { return qdot[kTheta1]; }
  FdcVector fdc_lengths() const { return q.segment<4>(kL3b); }
  FdcVector fdc_rates() const { return qdot.segment<4>(kL3b); }
};

struct KinematicInput {
  double crank_accel = 0.0;                 // u_g, rad/s^2
  FdcVector fdc_accel = FdcVector::Zero();  // u_3b, u_3c, u_8b, u_10b, m/s^2

  InputVector vector() const {
    InputVector u;
    u << crank_accel, fdc_accel;
    return u;
  }
};

struct DrivenJointOutput {
  Vec2 p5 = Vec2::Zero(), p16 = Vec2::Zero();
  Vec2 v5 = Vec2::Zero(), v16 = Vec2::Zero();
  Vec2 a5 = Vec2::Zero(), a16 = Vec2::Zero();
};

struct ClosureOptions {
  double tolerance = 1e-12;        // Newton stopping residual
  double accept_residual = 1e-10;  // post-condition on the returned state
  int max_iterations = 50;
  double branch_jump_threshold = 0.5;  // rad, per dependent angle
  int bisection_samples = 720;
};

// Constraint residual Phi(q): loops A, B, C (2 rows each, metres) and the gear
// row (radians).
ConstraintVector constraint_residual(const LinkageGeometry& g, const CoordVector& q);
ConstraintJacobian constraint_jacobian(const LinkageGeometry& g, const CoordVector& q);
// Jdot_c(q, qdot) * qdot.
ConstraintVector constraint_bias(const LinkageGeometry& g, const CoordVector& q,
                                 const CoordVector& qdot);

// Closes the linkage for the given crank angle and FDC lengths. Without a seed
// the configured assembly branch is used; with a seed the solution continuous
// with the seed is returned or BranchJump is thrown.
KinematicState solve_loop_closure(const LinkageTopology& topology, double crank_angle,
                                  const FdcVector& fdc_lengths,
                                  const std::optional<KinematicState>& seed = std::nullopt,
                                  const ClosureOptions& options = {});

// Projects an (almost) closed state back onto the constraint manifold keeping
// the independent coordinates and their rates. Used after integration steps.
KinematicState project_state(const LinkageTopology& topology, const KinematicState& state,
                             const ClosureOptions& options = {});

// Dyad branch sign of each loop at q.
std::array<int, 3> branch_signs(const LinkageGeometry& g, const CoordVector& q);

// The terms of M_k qddot + h_k = B_k u_k.
CoordMatrix kinematic_mass_matrix(const LinkageGeometry& g, const CoordVector& q);
CoordVector kinematic_bias(const LinkageGeometry& g, const CoordVector& q, const CoordVector& qdot);
Eigen::Matrix<double, kCoords, kInputs> kinematic_input_map();

// qddot = M_k^{-1} (B_k u - h_k). Throws SingularMassMatrix near kinematic
// singularities.
CoordVector kinematic_eom(const LinkageTopology& topology, const KinematicState& state,
                          const KinematicInput& input);

DrivenJointOutput driven_joint_output(const LinkageTopology& topology, const KinematicState& state,
                                      const CoordVector& accel);

// Positions of all 17 joints (j1..j17) at q.
std::array<Vec2, 17> joint_positions(const LinkageGeometry& g, const CoordVector& q);

// Driven-joint positions over one crank revolution, each sample solved
// independently on the configured branch. The OpenMP variant writes sample i
// into slot i so both return identical vectors.
struct CrankSweepSample {
  double crank_angle = 0.0;
  Vec2 p5 = Vec2::Zero();
  Vec2 p16 = Vec2::Zero();
};
std::vector<CrankSweepSample> crank_sweep_serial(const LinkageTopology& topology,
                                                 const FdcVector& fdc_lengths, int n_samples);
std::vector<CrankSweepSample> crank_sweep_parallel(const LinkageTopology& topology,
                                                   const FdcVector& fdc_lengths, int n_samples);

struct SensitivityReport {
  std::string parameter;
  double delta = 0.0;
  double max_dev_j5 = 0.0;   // per unit parameter change
  double rms_dev_j5 = 0.0;
  double max_dev_j16 = 0.0;
  double rms_dev_j16 = 0.0;
};

// Perturbs one parameter (FDC name such as "l_8b" or a geometry scalar name)
// by delta and reports the joint-5/16 path deviation over one revolution.
SensitivityReport sensitivity_analysis(const LinkageTopology& topology, const std::string& parameter,
                                       double delta, int n_samples);

std::vector<SensitivityReport> sensitivity_batch_serial(const LinkageTopology& topology,
                                                        const std::vector<std::string>& parameters,
                                                        double delta, int n_samples);
std::vector<SensitivityReport> sensitivity_batch_parallel(const LinkageTopology& topology,
                                                          const std::vector<std::string>& parameters,
                                                          double delta, int n_samples);

}  // namespace flapsim::kin
