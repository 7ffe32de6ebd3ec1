#include <algorithm>
#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/stability.hpp"

namespace mhe {

HatBounds build_hat_bounds(const ContractionAnalysis& analysis, const DerivedBounds& bounds, const LogGrid& grid,
                           std::int64_t t_max) {
  if (!analysis.passed) throw DomainError("hat bounds need a passing contraction analysis");
  if (analysis.mode != bounds.mode) throw DomainError("hat bounds: analysis and bounds use different modes");
  const int K = static_cast<int>(analysis.K);
  HatBounds hat;
  hat.mode = bounds.mode;
  hat.K = analysis.K;
  hat.kappa = analysis.kappa;
  if (bounds.mode == PlusMode::Max) {
    hat.b = KLFn::window_iterated(analysis.kappa, bounds.b, K, 1.0);
    hat.c = KLFn::window_iterated(analysis.kappa, bounds.c, K, 1.0);
    hat.d = KLFn::window_iterated(analysis.kappa, bounds.d, K, 1.0);
  } else {
    if (!analysis.zeta) throw DomainError("hat bounds: Sum-mode analysis lacks zeta");
    hat.b = KLFn::window_iterated(analysis.kappa, bounds.b, K, 2.0);
    hat.c = KLFn::window_summed(analysis.kappa, *analysis.zeta, bounds.c, K, 2.0);
    hat.d = KLFn::window_summed(analysis.kappa, *analysis.zeta, bounds.d, K, 2.0);
  }
  if (t_max <= 0) t_max = 10 * K;
  hat.kl = check_kl_invariants(hat.b, grid, t_max);
  for (const KLFn* f : {&hat.c, &hat.d}) {
    GridEvidence ev = check_kl_invariants(*f, grid, t_max);
    if (!ev.passed || ev.worst_margin < hat.kl.worst_margin) {
      hat.kl.passed = hat.kl.passed && ev.passed;
      hat.kl.worst_margin = std::min(hat.kl.worst_margin, ev.worst_margin);
      if (!ev.passed) hat.kl.worst_point = ev.worst_point;
    }
    hat.kl.points += ev.points;
  }
  return hat;
}

double eval_mhe_bound(const HatBounds& hat, double init_dist, std::span<const double> w_norms,
                      std::span<const double> v_norms, std::int64_t t) {
  if (t < 0) throw DomainError("eval_mhe_bound: negative time");
  const auto tt = static_cast<std::size_t>(t);
  if (w_norms.size() < tt || v_norms.size() < tt) throw DomainError("eval_mhe_bound: disturbance sequences too short");
  double acc = hat.b(init_dist, t);
  for (std::int64_t tau = 1; tau <= t; ++tau) {
    const auto i = static_cast<std::size_t>(t - tau);
    acc = std::max({acc, hat.c(w_norms[i], tau), hat.d(v_norms[i], tau)});
  }
  return acc;
}

double window_step_rhs(const ContractionAnalysis& analysis, const DerivedBounds& bounds, double e_prev,
                       std::span<const double> w_norms, std::span<const double> v_norms, std::int64_t t) {
  const auto K = static_cast<std::int64_t>(analysis.K);
  if (t < K) throw DomainError("window_step_rhs: needs t >= K");
  if (w_norms.size() < static_cast<std::size_t>(t) || v_norms.size() < static_cast<std::size_t>(t))
    throw DomainError("window_step_rhs: disturbance sequences too short");
  double dist = 0.0;
  for (std::int64_t tau = 1; tau <= K; ++tau) {
    const auto i = static_cast<std::size_t>(t - tau);
    double c = bounds.c(w_norms[i], tau), d = bounds.d(v_norms[i], tau);
    if (analysis.mode == PlusMode::Max)
      dist = std::max({dist, c, d});
    else
      dist += c + d;
  }
  if (analysis.mode == PlusMode::Max) return std::max(analysis.kappa(e_prev), dist);
  if (!analysis.zeta) throw DomainError("window_step_rhs: Sum-mode analysis lacks zeta");
  return std::max(analysis.kappa(e_prev), (*analysis.zeta)(dist));
}

RgesWitness classify_rges(const ContractionAnalysis& analysis, const HatBounds& hat, const DerivedBounds& bounds,
                          const LogGrid& grid, std::int64_t t_max) {
  RgesWitness w;
  w.evidence.check = "b_hat(r, t) <= C lambda^t r";
  w.evidence.range = grid.describe() + ", t in [0, " + std::to_string(t_max) + "]";
  if (analysis.cls != ContractionAnalysis::Class::Linear) return w;
  const auto K = static_cast<std::int64_t>(analysis.K);
  const auto pts = grid.points();
  double decay = 0.0;
  for (double r : pts)
    for (std::int64_t s = 0; s < K; ++s) {
      double a = bounds.b(r, s);
      if (a > 0.0) decay = std::max(decay, bounds.b(r, s + 1) / a);
    }
  w.lambda = std::max(std::pow(analysis.eta, 1.0 / static_cast<double>(K)), decay);
  if (!(w.lambda < 1.0)) return w;
  // C is fitted on the first half of the horizon and must carry over to the second.
  double C = 1.0;
  for (double r : pts)
    for (std::int64_t t = 0; t <= t_max / 2; ++t) C = std::max(C, hat.b(r, t) / (std::pow(w.lambda, t) * r));
  w.C = C;
  for (double r : pts)
    for (std::int64_t t = 0; t <= t_max; ++t) {
      double rhs = C * std::pow(w.lambda, t) * r;
      w.evidence.record(rhs - hat.b(r, t), {r, static_cast<double>(t)}, 1e-12 * rhs);
    }
  w.passed = w.evidence.passed && std::isfinite(C);
  return w;
}

}  // namespace mhe
