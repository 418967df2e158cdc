#pragma once

// The complete physical model of the vehicle: linkage, massed bodies,
// coupling, aerodynamics and controller.

#include "flapsim/aero.hpp"
#include "flapsim/control.hpp"
#include "flapsim/dynamics.hpp"
#include "flapsim/kinematics.hpp"

#include <array>
#include <numbers>
#include <vector>

namespace flapsim {

struct Model {
  kin::LinkageTopology topology = kin::default_topology();
  dyn::MassProperties mass;
  dyn::JointCoupling coupling;
  aero::AeroEnvironment air;
  std::array<aero::WingSegment, 4> segments = aero::default_segments();
  ctl::ControllerConfig control;
  double gravity = 9.81;  // m/s^2 along -z inertial
  // Incline of the body reference axis relative to the linkage plate frame,
  // about body y. The attitude state R is the plate frame; the pitch angle
  // seen by the controller is taken from R * Ry(body_axis_incline).
  double body_axis_incline = 18.0 * std::numbers::pi / 180.0;  // rad

  Eigen::Matrix3d body_axes(const Eigen::Matrix3d& R_plate) const;
  double pitch_of(const Eigen::Matrix3d& R_plate) const;
  // Plate attitude for a body pitched by theta_y (no roll or yaw).
  Eigen::Matrix3d plate_attitude(double theta_y) const;

  // Rebuilds derived data (topology descriptors, strip list, FDC bounds shared
  // with the controller) after parameters change.
  void refresh();
  // Validates every module and the cross-module consistency rules.
  void validate() const;

  const std::vector<aero::BladeElement>& elements() const { return elements_; }

 private:
  std::vector<aero::BladeElement> elements_ = aero::blade_elements(aero::default_segments());
};

Model default_model();

}  // namespace flapsim
