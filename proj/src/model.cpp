#include "flapsim/model.hpp"

#include "flapsim/errors.hpp"

#include <cmath>
#include <numbers>

namespace flapsim {

void Model::refresh() {
  topology = kin::make_topology(topology.geometry);
  control.l_min = topology.geometry.fdc_min;
  control.l_max = topology.geometry.fdc_max;
  elements_ = aero::blade_elements(segments);
}

void Model::validate() const {
  topology.validate();
  mass.validate();
  coupling.validate();
  air.validate();
  for (const auto& s : segments) s.validate();
  control.validate();
  if (!std::isfinite(body_axis_incline) || std::abs(body_axis_incline) > std::numbers::pi / 2) {
    throw ValidationError("mass.body_axis_incline_rad", "must lie in [-pi/2, pi/2]");
  }
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) throw ValidationError("sim.gravity_m_per_s2", "must be >= 0");
  if (std::abs(mass.elbow_distance - topology.geometry.elbow_distance) > 1e-12) {
    throw ValidationError("mass.elbow_distance_m", "must equal kinematics.elbow_distance_m");
  }
  if (control.l_min != topology.geometry.fdc_min || control.l_max != topology.geometry.fdc_max) {
    throw ValidationError("kinematics.fdc", "controller saturation bounds out of sync with the FDC bounds");
  }
  // The mechanism must assemble at the zero-path lengths.
  kin::solve_loop_closure(topology, 0.0, control.l_ref_zp);
}

namespace {
Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d R;
  const double c = std::cos(a), s = std::sin(a);
  R << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return R;
}
}  // namespace

Eigen::Matrix3d Model::body_axes(const Eigen::Matrix3d& R_plate) const { return R_plate * rot_y(body_axis_incline); }

double Model::pitch_of(const Eigen::Matrix3d& R_plate) const { return dyn::pitch_angle(body_axes(R_plate)); }

Eigen::Matrix3d Model::plate_attitude(double theta_y) const { return rot_y(theta_y - body_axis_incline); }

Model default_model() {
  Model m;
  m.refresh();
  return m;
}

}  // namespace flapsim
