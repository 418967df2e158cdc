#include "flapsim/control.hpp"

#include "flapsim/errors.hpp"

#include <cmath>
#include <string>

namespace flapsim::ctl {

namespace {
const char* kChannels[4] = {"l_3b", "l_3c", "l_8b", "l_10b"};
}

void ControllerConfig::validate() const {
  auto finite = [](double v, const std::string& key) {
    if (!std::isfinite(v)) throw ValidationError(key, "not finite");
  };
  finite(K_d1, "control.crank_rate_gain_per_s");
  finite(gain_unit, "control.pitch_gain_unit_m_per_rad");
  finite(theta_ref, "control.pitch_reference_rad");
  if (!(omega_ref > 0.0) || !std::isfinite(omega_ref)) {
    throw ValidationError("control.crank_rate_reference_rad_per_s", "must be positive");
  }
  for (int i = 0; i < 4; ++i) {
    const std::string ch = kChannels[i];
    finite(K_p2[i], "control.fdc_stiffness_gain_per_s2");
    finite(K_d2[i], "control.fdc_damping_gain_per_s");
    finite(K_c[i], "control.pitch_gain");
    if (!(l_min[i] < l_max[i])) {
      throw ValidationError("control.fdc_bounds." + ch, "l_min must be below l_max");
    }
    if (!(l_ref_zp[i] > l_min[i] && l_ref_zp[i] < l_max[i])) {
      throw ValidationError("control.zero_path_m." + ch, "must lie strictly inside [l_min, l_max]");
    }
  }
}

double flap_speed_control(double crank_rate, const ControllerConfig& cfg) {
  return cfg.K_d1 * (cfg.omega_ref - crank_rate);
}

Vec4 fdc_length_control(const Vec4& l, const Vec4& l_dot, const Vec4& l_ref, const ControllerConfig& cfg) {
  return cfg.K_p2.cwiseProduct(l_ref - l) - cfg.K_d2.cwiseProduct(l_dot);
}

Vec4 saturate(const Vec4& l, const ControllerConfig& cfg) { return l.cwiseMax(cfg.l_min).cwiseMin(cfg.l_max); }

Vec4 pitch_law(double theta_y, const ControllerConfig& cfg) {
  return cfg.l_ref_zp + cfg.K_c_si() * (cfg.theta_ref - theta_y);
}

Vec4 pitch_controller(double theta_y, const ControllerConfig& cfg) { return saturate(pitch_law(theta_y, cfg), cfg); }

ControlOutput control_step(double crank_rate, const Vec4& l, const Vec4& l_dot, double theta_y,
                           const ControllerConfig& cfg, const ControlToggles& on) {
  ControlOutput out;
  out.u_g = on.crank ? flap_speed_control(crank_rate, cfg) : 0.0;
  out.l_ref = on.pitch ? pitch_controller(theta_y, cfg) : saturate(cfg.l_ref_zp, cfg);
  out.u_p = on.fdc ? fdc_length_control(l, l_dot, out.l_ref, cfg) : Vec4::Zero();
  return out;
}

}  // namespace flapsim::ctl
