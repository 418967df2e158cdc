#pragma once

// Crank-rate PD, FDC length PD and the pitch loop that moves the FDC length
// references.

#include <Eigen/Dense>

#include <numbers>

namespace flapsim::ctl {

using Vec4 = Eigen::Vector4d;

struct ControllerConfig {
  double K_d1 = 20.0;                               // 1/s
  Vec4 K_p2 = Vec4::Constant(4000.0);               // 1/s^2, diagonal
  Vec4 K_d2 = Vec4::Constant(120.0);                // 1/s, diagonal
  double omega_ref = 2.0 * std::numbers::pi * 10.0; // rad/s
  Vec4 l_ref_zp{7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3};   // m
  // Pitch gain in configured units; multiplied by gain_unit to give m/rad.
  // The default unit is mm of FDC length per degree of pitch error.
  Vec4 K_c{0.42, -0.26, -0.38, -0.097};
  double gain_unit = 1.0e-3 * 180.0 / std::numbers::pi;
  double theta_ref = 33.0 * std::numbers::pi / 180.0;  // rad
  Vec4 l_min{4.8e-3, 7.5e-3, 3.2e-3, 4.2e-3};
  Vec4 l_max{10.8e-3, 13.5e-3, 9.2e-3, 10.2e-3};

  Vec4 K_c_si() const { return K_c * gain_unit; }
  // Throws ValidationError naming the offending key.
  void validate() const;
};

struct ControlOutput {
  double u_g = 0.0;
  Vec4 u_p = Vec4::Zero();
  Vec4 l_ref = Vec4::Zero();
};

double flap_speed_control(double crank_rate, const ControllerConfig& cfg);
Vec4 fdc_length_control(const Vec4& l, const Vec4& l_dot, const Vec4& l_ref, const ControllerConfig& cfg);
// Affine pitch law l_ref_zp + K_c (theta_ref - theta_y), before saturation.
Vec4 pitch_law(double theta_y, const ControllerConfig& cfg);
// The affine law followed by elementwise saturation to [l_min, l_max].
Vec4 pitch_controller(double theta_y, const ControllerConfig& cfg);
Vec4 saturate(const Vec4& l, const ControllerConfig& cfg);

// Which loops run; disabled loops command zero acceleration (crank) or hold
// the zero-path reference (pitch).
struct ControlToggles {
  bool crank = true;
  bool fdc = true;
  bool pitch = true;
};

ControlOutput control_step(double crank_rate, const Vec4& l, const Vec4& l_dot, double theta_y,
                           const ControllerConfig& cfg, const ControlToggles& on = {});

}  // namespace flapsim::ctl
