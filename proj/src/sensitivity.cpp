#include "flapsim/errors.hpp"
#include "flapsim/kinematics.hpp"

#include <cmath>
#include <exception>
#include <numbers>

namespace flapsim::kin {

namespace {

CrankSweepSample sweep_sample(const LinkageTopology& topology, const FdcVector& fdc, int i, int n) {
  CrankSweepSample s;
  s.crank_angle = 2.0 * std::numbers::pi * i / n;
  const KinematicState st = solve_loop_closure(topology, s.crank_angle, fdc);
  const DrivenJointOutput out = driven_joint_output(topology, st, CoordVector::Zero());
  s.p5 = out.p5;
  s.p16 = out.p16;
  return s;
}

void check_samples(int n) {
  if (n < 1) throw ValidationError("n_samples", "must be at least 1");
}

// Perturbed topology and FDC lengths for one named parameter.
std::pair<LinkageTopology, FdcVector> perturbed(const LinkageTopology& topology,
                                                 const std::string& parameter, double delta) {
  LinkageTopology t = topology;
  FdcVector fdc = topology.geometry.fdc_nominal;
  if (auto idx = fdc_index(parameter)) {
    fdc[*idx] += delta;
    // Widen the bounds so a probe at the edge of the box stays admissible.
    t.geometry.fdc_min[*idx] = std::min(t.geometry.fdc_min[*idx], fdc[*idx]);
    t.geometry.fdc_max[*idx] = std::max(t.geometry.fdc_max[*idx], fdc[*idx]);
  } else if (double* p = t.geometry.scalar(parameter)) {
    *p += delta;
  } else {
    throw ValidationError("parameter", "unknown sensitivity parameter '" + parameter + "'");
  }
  return {t, fdc};
}

}  // namespace

std::vector<CrankSweepSample> crank_sweep_serial(const LinkageTopology& topology,
                                                 const FdcVector& fdc_lengths, int n_samples) {
  check_samples(n_samples);
  std::vector<CrankSweepSample> out(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) out[i] = sweep_sample(topology, fdc_lengths, i, n_samples);
  return out;
}

std::vector<CrankSweepSample> crank_sweep_parallel(const LinkageTopology& topology,
                                                   const FdcVector& fdc_lengths, int n_samples) {
  check_samples(n_samples);
  std::vector<CrankSweepSample> out(static_cast<std::size_t>(n_samples));
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_samples; ++i) {
    try {
      out[i] = sweep_sample(topology, fdc_lengths, i, n_samples);
    } catch (...) {
#pragma omp critical(flapsim_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

SensitivityReport sensitivity_analysis(const LinkageTopology& topology, const std::string& parameter,
                                       double delta, int n_samples) {
  if (!std::isfinite(delta)) throw ValidationError("delta", "not finite");
  SensitivityReport r;
  r.parameter = parameter;
  r.delta = delta;
  auto [pt, pfdc] = perturbed(topology, parameter, delta);
  if (delta == 0.0) return r;
  const auto base = crank_sweep_serial(topology, topology.geometry.fdc_nominal, n_samples);
  const auto pert = crank_sweep_serial(pt, pfdc, n_samples);
  double sum5 = 0.0, sum16 = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double d5 = (pert[i].p5 - base[i].p5).norm();
    const double d16 = (pert[i].p16 - base[i].p16).norm();
    r.max_dev_j5 = std::max(r.max_dev_j5, d5);
    r.max_dev_j16 = std::max(r.max_dev_j16, d16);
    sum5 += d5 * d5;
    sum16 += d16 * d16;
  }
  const double scale = 1.0 / std::abs(delta);
  r.rms_dev_j5 = std::sqrt(sum5 / n_samples) * scale;
  r.rms_dev_j16 = std::sqrt(sum16 / n_samples) * scale;
  r.max_dev_j5 *= scale;
  r.max_dev_j16 *= scale;
  return r;
}

std::vector<SensitivityReport> sensitivity_batch_serial(const LinkageTopology& topology,
                                                        const std::vector<std::string>& parameters,
                                                        double delta, int n_samples) {
  std::vector<SensitivityReport> out;
  out.reserve(parameters.size());
  for (const auto& p : parameters) out.push_back(sensitivity_analysis(topology, p, delta, n_samples));
  return out;
}

std::vector<SensitivityReport> sensitivity_batch_parallel(const LinkageTopology& topology,
                                                          const std::vector<std::string>& parameters,
                                                          double delta, int n_samples) {
  const int n = static_cast<int>(parameters.size());
  std::vector<SensitivityReport> out(parameters.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = sensitivity_analysis(topology, parameters[i], delta, n_samples);
    } catch (...) {
#pragma omp critical(flapsim_sensitivity_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace flapsim::kin
