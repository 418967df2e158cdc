#include "flapsim/control.hpp"
#include "flapsim/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace flapsim;
using namespace flapsim::ctl;

TEST_SUITE("control") {
  TEST_CASE("zero pitch error returns the zero-path lengths exactly") {
    const ControllerConfig cfg;
    const Vec4 l = pitch_controller(cfg.theta_ref, cfg);
    CHECK(l == Vec4(7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3));
  }

  TEST_CASE("affine law reproduces hand-computed offsets") {
    ControllerConfig cfg;
    cfg.K_c << 0.42, -0.26, -0.38, -0.097;
    // 5 degrees nose-down of the reference: error of -5 deg, offsets K_c * -5 mm.
    const double theta = cfg.theta_ref + 5.0 * std::numbers::pi / 180.0;
    const Vec4 l = pitch_law(theta, cfg);
    const Vec4 expected = Vec4(7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3) + Vec4(-2.1e-3, 1.3e-3, 1.9e-3, 0.485e-3);
    CHECK((l - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("zero gain reduces to the zero-path controller") {
    ControllerConfig cfg;
    cfg.K_c.setZero();
    for (double th : {-1.0, 0.0, 0.5, 1.3}) CHECK(pitch_controller(th, cfg) == cfg.l_ref_zp);
  }

  TEST_CASE("saturation clamps each channel to its bounds") {
    ControllerConfig cfg;
    cfg.K_c << 10.0, -10.0, 10.0, -10.0;
    const Vec4 l = pitch_controller(cfg.theta_ref - 1.0, cfg);
    CHECK(l == Vec4(cfg.l_max[0], cfg.l_min[1], cfg.l_max[2], cfg.l_min[3]));
  }

  TEST_CASE("flap speed law and loop toggles") {
    const ControllerConfig cfg;
    CHECK(flap_speed_control(cfg.omega_ref, cfg) == 0.0);
    CHECK(flap_speed_control(0.0, cfg) == doctest::Approx(cfg.K_d1 * cfg.omega_ref));
    ControlToggles off{false, false, false};
    const ControlOutput o = control_step(3.0, cfg.l_ref_zp, Vec4::Ones(), 2.0, cfg, off);
    CHECK(o.u_g == 0.0);
    CHECK(o.u_p == Vec4::Zero());
    CHECK(o.l_ref == cfg.l_ref_zp);
  }

  TEST_CASE("FDC loop follows the analytic second-order step response") {
    ControllerConfig cfg;
    const double kp = cfg.K_p2[0], kd = cfg.K_d2[0];
    const double wn = std::sqrt(kp), zeta = kd / (2.0 * wn), wd = wn * std::sqrt(1.0 - zeta * zeta);
    const Vec4 ref = cfg.l_ref_zp;
    const Vec4 l0 = cfg.l_min;
    auto exact = [&](double t, int i) {
      const double e0 = l0[i] - ref[i];
      return ref[i] + e0 * std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta * wn / wd * std::sin(wd * t));
    };
    // RK4 on l'' = u_p(l, l').
    Vec4 l = l0, v = Vec4::Zero();
    const double dt = 1e-5;
    double worst = 0.0;
    for (int n = 1; n <= 20000; ++n) {
      auto f = [&](const Vec4& x, const Vec4& xd) { return fdc_length_control(x, xd, ref, cfg); };
      const Vec4 k1x = v, k1v = f(l, v);
      const Vec4 k2x = v + 0.5 * dt * k1v, k2v = f(l + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
      const Vec4 k3x = v + 0.5 * dt * k2v, k3v = f(l + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
      const Vec4 k4x = v + dt * k3v, k4v = f(l + dt * k3x, v + dt * k3v);
      l += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
      v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
      for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(l[i] - exact(n * dt, i)));
    }
    CHECK(worst < 1e-12);
    CHECK((l - ref).norm() < 1e-4 * (l0 - ref).norm());
  }

  TEST_CASE("validation names the key") {
    ControllerConfig cfg;
    cfg.l_ref_zp[2] = 0.02;
    CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("control.zero_path_m.l_8b"));
  }
}
