// Serial references against their OpenMP counterparts.

#include "flapsim/aero.hpp"
#include "flapsim/kinematics.hpp"
#include "flapsim/model.hpp"
#include "flapsim/optimize.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Geometry>

namespace {

using namespace flapsim;

void BM_CrankSweepSerial(benchmark::State& state) {
  const Model m = default_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kin::crank_sweep_serial(m.topology, m.topology.geometry.fdc_nominal, state.range(0)));
  }
}

void BM_CrankSweepParallel(benchmark::State& state) {
  const Model m = default_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kin::crank_sweep_parallel(m.topology, m.topology.geometry.fdc_nominal, state.range(0)));
  }
}

const std::vector<std::string> kParameters{"l_3b", "l_3c", "l_8b", "l_10b", "crank1_radius", "coupler_a_length"};

void BM_SensitivitySerial(benchmark::State& state) {
  const Model m = default_model();
  for (auto _ : state) benchmark::DoNotOptimize(kin::sensitivity_batch_serial(m.topology, kParameters, 1e-4, 72));
}

void BM_SensitivityParallel(benchmark::State& state) {
  const Model m = default_model();
  for (auto _ : state) benchmark::DoNotOptimize(kin::sensitivity_batch_parallel(m.topology, kParameters, 1e-4, 72));
}

dyn::DynamicState flapping_state() {
  dyn::DynamicState s;
  s.R = Eigen::AngleAxisd(0.2, dyn::Vec3::UnitY()).toRotationMatrix();
  s.phi = dyn::Vec4(0.4, -0.3, 0.35, -0.25);
  s.p_dot = dyn::Vec3(3.0, 0.1, -1.5);
  s.phi_dot = dyn::Vec4(35.0, -20.0, 33.0, -18.0);
  s.omega = dyn::Vec3(0.2, -1.0, 0.1);
  return s;
}

std::vector<aero::BladeElement> elements(int n) {
  auto segs = aero::default_segments();
  for (auto& w : segs) w.n_strips = n;
  return aero::blade_elements(segs);
}

void BM_AeroSerial(benchmark::State& state) {
  const auto el = elements(state.range(0));
  const auto s = flapping_state();
  for (auto _ : state) benchmark::DoNotOptimize(aero::aero_forces_serial(s, {}, el, {}));
}

void BM_AeroParallel(benchmark::State& state) {
  const auto el = elements(state.range(0));
  const auto s = flapping_state();
  for (auto _ : state) benchmark::DoNotOptimize(aero::aero_forces_parallel(s, {}, el, {}));
}

// Candidate batch whose objective is one crank sweep, a stand-in for an episode.
std::vector<opt::Vec> candidates() {
  std::vector<opt::Vec> xs;
  for (int i = 0; i < 8; ++i) xs.push_back(opt::Vec::Constant(4, 1e-4 * i));
  return xs;
}

opt::Objective sweep_objective() {
  const Model m = default_model();
  return [m](const opt::Vec& x) {
    const kin::FdcVector l = m.topology.geometry.fdc_nominal + kin::FdcVector(x);
    const auto sweep = kin::crank_sweep_serial(m.topology, l, 36);
    return opt::Outcome{sweep.back().p5.norm(), false};
  };
}

void BM_BatchSerial(benchmark::State& state) {
  const auto f = sweep_objective();
  const auto xs = candidates();
  for (auto _ : state) benchmark::DoNotOptimize(opt::evaluate_batch_serial(f, xs));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto f = sweep_objective();
  const auto xs = candidates();
  for (auto _ : state) benchmark::DoNotOptimize(opt::evaluate_batch_parallel(f, xs));
}

}  // namespace

BENCHMARK(BM_CrankSweepSerial)->Arg(360);
BENCHMARK(BM_CrankSweepParallel)->Arg(360);
BENCHMARK(BM_SensitivitySerial);
BENCHMARK(BM_SensitivityParallel);
BENCHMARK(BM_AeroSerial)->Arg(10)->Arg(80);
BENCHMARK(BM_AeroParallel)->Arg(10)->Arg(80);
BENCHMARK(BM_BatchSerial);
BENCHMARK(BM_BatchParallel);

BENCHMARK_MAIN();
