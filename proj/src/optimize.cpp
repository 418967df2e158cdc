#include "flapsim/optimize.hpp"

#include "flapsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

namespace flapsim::opt {

void Bounds::validate(const std::string& key) const {
  if (lo.size() != hi.size()) throw ValidationError(key, "lower and upper bounds differ in size");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw ValidationError(key, "bounds must be finite");
    if (lo[i] > hi[i]) throw ValidationError(key, "lower bound exceeds upper bound");
  }
}

Vec Bounds::project(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

const char* method_name(Method m) { return m == Method::kNelderMead ? "nelder-mead" : "cma-es"; }

Method parse_method(const std::string& name) {
  if (name == "nelder-mead") return Method::kNelderMead;
  if (name == "cma-es") return Method::kCmaEs;
  throw ValidationError("optimizer.method", "unknown method '" + name + "' (nelder-mead | cma-es)");
}

void OptimizerConfig::validate() const {
  if (budget < 0) throw ValidationError("optimizer.budget", "must be >= 0");
  if (!(initial_step > 0.0 && initial_step <= 1.0)) throw ValidationError("optimizer.initial_step", "must lie in (0, 1]");
  if (!(x_tolerance > 0.0)) throw ValidationError("optimizer.x_tolerance", "must be positive");
  if (!(f_tolerance >= 0.0)) throw ValidationError("optimizer.f_tolerance", "must be >= 0");
  if (population < 0 || population == 1) throw ValidationError("optimizer.population", "must be 0 or at least 2");
  if (!(sigma0 > 0.0)) throw ValidationError("optimizer.sigma0", "must be positive");
}

std::vector<Outcome> evaluate_batch_serial(const Objective& f, const std::vector<Vec>& xs) {
  std::vector<Outcome> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  return out;
}

std::vector<Outcome> evaluate_batch_parallel(const Objective& f, const std::vector<Vec>& xs) {
  std::vector<Outcome> out(xs.size());
  std::vector<std::exception_ptr> errors(xs.size());
  const long n = static_cast<long>(xs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = f(xs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

// Search state shared by both methods: unit-box parametrization of the free
// coordinates, budget accounting, trace and best-so-far.
class Search {
 public:
  Search(const Objective& f, const Vec& x0, const Bounds& b, const OptimizerConfig& cfg, OptimizationResult& res)
      : f_(f), cfg_(cfg), res_(res), base_(b.project(x0)), lo_(b.lo), width_(b.hi - b.lo) {
    for (Eigen::Index i = 0; i < width_.size(); ++i) {
      if (width_[i] > 0.0) free_.push_back(static_cast<int>(i));
    }
  }

  int dim() const { return static_cast<int>(free_.size()); }
  Vec u0() const {
    Vec u(dim());
    for (int k = 0; k < dim(); ++k) u[k] = (base_[free_[k]] - lo_[free_[k]]) / width_[free_[k]];
    return u;
  }
  Vec to_x(const Vec& u) const {
    Vec x = base_;
    for (int k = 0; k < dim(); ++k) x[free_[k]] = lo_[free_[k]] + std::clamp(u[k], 0.0, 1.0) * width_[free_[k]];
    return x;
  }
  static Vec clamp(const Vec& u) { return u.cwiseMax(0.0).cwiseMin(1.0); }

  int remaining() const { return cfg_.budget - (res_.evaluations - 1); }
  bool exhausted() const { return res_.evaluations > 0 && remaining() <= 0; }

  void evaluate_initial() {
    const Outcome o = f_(base_);
    record(0, candidate_++, base_, o);
  }

  // Evaluates up to the remaining budget; returns outcomes for the evaluated
  // prefix of us.
  std::vector<Outcome> batch(int iteration, const std::vector<Vec>& us) {
    const std::size_t n = std::min<std::size_t>(us.size(), static_cast<std::size_t>(std::max(0, remaining())));
    std::vector<Vec> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(to_x(us[i]));
    const std::vector<Outcome> out = cfg_.parallel ? evaluate_batch_parallel(f_, xs) : evaluate_batch_serial(f_, xs);
    if (iteration != iteration_) {
      iteration_ = iteration;
      candidate_ = 0;
    }
    for (std::size_t i = 0; i < n; ++i) record(iteration, candidate_++, xs[i], out[i]);
    return out;
  }

 private:
  void record(int iteration, int candidate, const Vec& x, const Outcome& o) {
    res_.trace.push_back({iteration, candidate, o.J, o.penalized, x});
    const bool better = res_.evaluations == 0 || (res_.best_penalized && !o.penalized) ||
                        (res_.best_penalized == o.penalized && o.J < res_.best_J);
    if (better) {
      res_.best_x = x;
      res_.best_J = o.J;
      res_.best_penalized = o.penalized;
    }
    ++res_.evaluations;
  }

  const Objective& f_;
  const OptimizerConfig& cfg_;
  OptimizationResult& res_;
  Vec base_, lo_, width_;
  std::vector<int> free_;
  int iteration_ = 0;
  int candidate_ = 0;
};

void nelder_mead(Search& s, const OptimizerConfig& cfg, OptimizationResult& res) {
  const int n = s.dim();
  std::vector<Vec> v(n + 1);
  std::vector<double> fv(n + 1);
  v[0] = s.u0();
  fv[0] = res.trace.front().J;
  std::vector<Vec> init;
  for (int i = 0; i < n; ++i) {
    Vec u = v[0];
    u[i] += (u[i] + cfg.initial_step <= 1.0) ? cfg.initial_step : -cfg.initial_step;
    init.push_back(u);
  }
  std::vector<Outcome> o = s.batch(0, init);
  if (static_cast<int>(o.size()) < n) {
    res.budget_exhausted = true;
    return;
  }
  for (int i = 0; i < n; ++i) {
    v[i + 1] = init[i];
    fv[i + 1] = o[i].J;
  }

  std::vector<int> idx(n + 1);
  for (int iteration = 1;; ++iteration) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    {
      std::vector<Vec> vs;
      std::vector<double> fs;
      for (int i : idx) {
        vs.push_back(v[i]);
        fs.push_back(fv[i]);
      }
      v = std::move(vs);
      fv = std::move(fs);
    }
    double size = 0.0;
    for (int i = 1; i <= n; ++i) size = std::max(size, (v[i] - v[0]).cwiseAbs().maxCoeff());
    const double spread = fv[n] - fv[0];
    if (size <= cfg.x_tolerance && spread <= cfg.f_tolerance * (1.0 + std::abs(fv[0]))) {
      res.converged = true;
      return;
    }
    if (s.exhausted()) {
      res.budget_exhausted = true;
      return;
    }

    Vec c = Vec::Zero(n);
    for (int i = 0; i < n; ++i) c += v[i];
    c /= n;
    const Vec xr = Search::clamp(c + (c - v[n]));
    o = s.batch(iteration, {xr});
    if (o.empty()) {
      res.budget_exhausted = true;
      return;
    }
    const double fr = o[0].J;
    auto eval_one = [&](const Vec& u, double& fu) {
      const std::vector<Outcome> r = s.batch(iteration, {u});
      if (r.empty()) return false;
      fu = r[0].J;
      return true;
    };

    if (fr < fv[0]) {
      const Vec xe = Search::clamp(c + 2.0 * (c - v[n]));
      double fe = 0.0;
      if (!eval_one(xe, fe)) {
        v[n] = xr;
        fv[n] = fr;
        res.budget_exhausted = true;
        return;
      }
      if (fe < fr) {
        v[n] = xe;
        fv[n] = fe;
      } else {
        v[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      v[n] = xr;
      fv[n] = fr;
      continue;
    }
    const bool outside = fr < fv[n];
    const Vec xc = outside ? Vec(Search::clamp(c + 0.5 * (xr - c))) : Vec(c + 0.5 * (v[n] - c));
    double fc = 0.0;
    if (!eval_one(xc, fc)) {
      res.budget_exhausted = true;
      return;
    }
    if ((outside && fc <= fr) || (!outside && fc < fv[n])) {
      v[n] = xc;
      fv[n] = fc;
      continue;
    }
    std::vector<Vec> shrunk;
    for (int i = 1; i <= n; ++i) shrunk.push_back(v[0] + 0.5 * (v[i] - v[0]));
    o = s.batch(iteration, shrunk);
    for (std::size_t i = 0; i < o.size(); ++i) {
      v[i + 1] = shrunk[i];
      fv[i + 1] = o[i].J;
    }
    if (static_cast<int>(o.size()) < n) {
      res.budget_exhausted = true;
      return;
    }
  }
}

void cma_es(Search& s, const OptimizerConfig& cfg, OptimizationResult& res) {
  const int n = s.dim();
  const int lambda = cfg.population > 0 ? cfg.population : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  const int mu = lambda / 2;
  Vec w(mu);
  for (int i = 0; i < mu; ++i) w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  w /= w.sum();
  const double mu_eff = 1.0 / w.squaredNorm();
  const double c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma;
  const double c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
  const double c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
  const double c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
  const double chi_n = std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec m = s.u0();
  double sigma = cfg.sigma0;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  Vec p_sigma = Vec::Zero(n), p_c = Vec::Zero(n);

  for (int gen = 1;; ++gen) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    const Eigen::MatrixXd B = eig.eigenvectors();
    const Vec D = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    if (sigma * D.maxCoeff() <= cfg.x_tolerance) {
      res.converged = true;
      return;
    }
    if (s.exhausted()) {
      res.budget_exhausted = true;
      return;
    }
    std::vector<Vec> us(lambda);
    for (int k = 0; k < lambda; ++k) {
      Vec z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      us[k] = Search::clamp(m + sigma * (B * D.asDiagonal() * z));
    }
    const std::vector<Outcome> o = s.batch(gen, us);
    if (static_cast<int>(o.size()) < lambda) {
      res.budget_exhausted = true;
      return;
    }
    std::vector<int> idx(lambda);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return o[a].J < o[b].J; });

    const Vec m_old = m;
    m.setZero();
    for (int i = 0; i < mu; ++i) m += w[i] * us[idx[i]];
    const Vec step = (m - m_old) / sigma;
    const Eigen::MatrixXd C_inv_sqrt = B * D.cwiseInverse().asDiagonal() * B.transpose();
    p_sigma = (1.0 - c_sigma) * p_sigma + std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * (C_inv_sqrt * step);
    const double ps_norm = p_sigma.norm();
    const bool h_sigma =
        ps_norm / std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * gen)) < (1.4 + 2.0 / (n + 1.0)) * chi_n;
    p_c = (1.0 - c_c) * p_c + (h_sigma ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) : 0.0) * step;
    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Vec y = (us[idx[i]] - m_old) / sigma;
      rank_mu += w[i] * y * y.transpose();
    }
    const double delta = h_sigma ? 0.0 : c_c * (2.0 - c_c);
    C = (1.0 - c_1 - c_mu) * C + c_1 * (p_c * p_c.transpose() + delta * C) + c_mu * rank_mu;
    C = 0.5 * (C + C.transpose());
    sigma *= std::exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0));
    sigma = std::min(sigma, 1.0);
  }
}

}  // namespace

OptimizationResult minimize(const Objective& f, const Vec& x0, const Bounds& bounds, const OptimizerConfig& cfg) {
  cfg.validate();
  bounds.validate("optimizer.bounds");
  if (x0.size() != bounds.lo.size()) throw ValidationError("optimizer.bounds", "size differs from the initial guess");
  OptimizationResult res;
  res.method = method_name(cfg.method);
  Search s(f, x0, bounds, cfg, res);
  s.evaluate_initial();
  if (s.dim() == 0) {
    res.converged = true;
    return res;
  }
  if (cfg.budget == 0) {
    res.budget_exhausted = true;
    return res;
  }
  if (cfg.method == Method::kNelderMead) {
    nelder_mead(s, cfg, res);
  } else {
    cma_es(s, cfg, res);
  }
  return res;
}

void GainBounds::validate() const {
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(K_c_min[i]) || !std::isfinite(K_c_max[i])) {
      throw ValidationError("optimizer.gain_min", "bounds must be finite");
    }
    if (K_c_min[i] > K_c_max[i]) throw ValidationError("optimizer.gain_min", "exceeds optimizer.gain_max");
    if (!std::isfinite(K_c_start[i])) throw ValidationError("optimizer.gain_start", "must be finite");
  }
}

namespace {
Outcome to_outcome(const cost::CostResult& r) { return {r.J, r.penalized}; }
}  // namespace

OptimizationResult optimize_pitch_gain(const Model& model, const sim::SimConfig& sim, const cost::CostConfig& cost,
                                       const GainBounds& bounds, const OptimizerConfig& cfg,
                                       const EpisodeCost& episode) {
  bounds.validate();
  cost.validate(sim.dt);
  sim::SimConfig run = sim;
  run.controllers.pitch = true;
  const Objective f = [&](const Vec& x) {
    Model m = model;
    m.control.K_c = x;
    return to_outcome(episode(m, run, cost));
  };
  return minimize(f, bounds.K_c_start, {bounds.K_c_min, bounds.K_c_max}, cfg);
}

Bounds zero_path_bounds(const Model& model) {
  return {model.topology.geometry.fdc_min, model.topology.geometry.fdc_max};
}

OptimizationResult optimize_zero_path(const Model& model, const sim::SimConfig& sim, const cost::CostConfig& cost,
                                      const Bounds& bounds, const OptimizerConfig& cfg, const EpisodeCost& episode) {
  bounds.validate("optimizer.zero_path_bounds");
  if (bounds.lo.size() != 4) throw ValidationError("optimizer.zero_path_bounds", "needs four entries");
  const Bounds fdc = zero_path_bounds(model);
  for (int i = 0; i < 4; ++i) {
    if (bounds.lo[i] < fdc.lo[i] || bounds.hi[i] > fdc.hi[i]) {
      throw ValidationError("optimizer.zero_path_bounds", "must lie inside the FDC bounds");
    }
  }
  cost.validate(sim.dt);
  sim::SimConfig run = sim;
  run.controllers.pitch = false;
  run.fdc_from_zero_path = true;
  const Objective f = [&](const Vec& x) {
    Model m = model;
    m.control.K_c.setZero();
    m.control.l_ref_zp = x;
    return to_outcome(episode(m, run, cost));
  };
  return minimize(f, model.control.l_ref_zp, bounds, cfg);
}

}  // namespace flapsim::opt
