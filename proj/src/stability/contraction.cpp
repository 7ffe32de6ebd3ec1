#include <algorithm>
#include <cmath>
#include <limits>

#include "mhe/errors.hpp"
#include "mhe/stability.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

namespace {

/// r -> b(alpha^{-1}(r), K), collapsed to a linear function when both pieces are linear.
ScalarKFn window_gain(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K) {
  const auto s = static_cast<std::int64_t>(K);
  auto a = alpha.linear_coefficient();
  auto e = bounds.b.slice_linear_coefficient(s);
  if (a && e && *e > 0.0) return ScalarKFn::linear(*e / *a);
  return ScalarKFn::compose({ScalarKFn::inverse(alpha), ScalarKFn::section(bounds.b, s)});
}

GridEvidence evidence(const char* name, const LogGrid& grid) {
  GridEvidence ev;
  ev.check = name;
  ev.range = grid.describe();
  return ev;
}

/// r - kappa(r) > 0 on the grid.
void check_strict(ContractionAnalysis& a, const std::vector<double>& pts, const LogGrid& grid) {
  a.strict = evidence("kappa(r) < r", grid);
  for (double r : pts) {
    double margin = r - a.kappa(r);
    a.strict.record(margin, {r});
    if (!(margin > 0.0)) {
      a.strict.passed = false;
      if (!a.first_violation) a.first_violation = r;
    }
  }
}

void classify(ContractionAnalysis& a) {
  auto eta = a.kappa.linear_coefficient();
  if (eta && *eta > 0.0 && *eta < 1.0) {
    a.cls = ContractionAnalysis::Class::Linear;
    a.eta = *eta;
  } else {
    a.cls = ContractionAnalysis::Class::Nonlinear;
    a.eta = 0.0;
  }
}

}  // namespace

ContractionAnalysis find_contraction_max(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                         const LogGrid& grid) {
  if (bounds.mode != PlusMode::Max) throw DomainError("find_contraction_max needs Max-mode bounds");
  if (K < 1) throw DomainError("contraction analysis needs K >= 1");
  ContractionAnalysis a;
  a.K = K;
  a.mode = PlusMode::Max;
  a.alpha = alpha;
  a.kappa = window_gain(bounds, alpha, K);
  const auto pts = grid.points();

  check_strict(a, pts, grid);
  a.dominance = evidence("b(alpha^-1(r), K) <= kappa(r)", grid);
  const auto s = static_cast<std::int64_t>(K);
  for (double r : pts) {
    double lhs = bounds.b(alpha.inverse_at(r), s);
    a.dominance.record(a.kappa(r) - lhs, {r}, 1e-12 * std::max(lhs, 1e-300));
  }
  a.subdistributivity = evidence("kappa(max{r, q}) <= max{kappa(r), kappa(q)}", grid);
  for (std::size_t i = 0; i < pts.size(); i += 8)
    for (std::size_t j = 0; j < pts.size(); j += 8) {
      double lhs = a.kappa(std::max(pts[i], pts[j]));
      double rhs = std::max(a.kappa(pts[i]), a.kappa(pts[j]));
      a.subdistributivity.record(rhs - lhs, {pts[i], pts[j]});
    }
  a.passed = a.strict.passed && a.dominance.passed && a.subdistributivity.passed;
  classify(a);
  if (!a.passed) {
    a.failure = "no strict contraction at K = " + std::to_string(K);
    if (a.first_violation) a.failure += ": kappa(r) >= r first at r = " + format_number(*a.first_violation);
  }
  return a;
}

ContractionAnalysis find_contraction_sum(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                         const LogGrid& grid, std::vector<double> thetas) {
  if (bounds.mode != PlusMode::Sum) throw DomainError("find_contraction_sum needs Sum-mode bounds");
  if (K < 1) throw DomainError("contraction analysis needs K >= 1");
  if (thetas.empty()) throw DomainError("find_contraction_sum: empty slack family");
  const auto pts = grid.points();
  const ScalarKFn base = window_gain(bounds, alpha, K);
  const auto base_lin = base.linear_coefficient();

  ContractionAnalysis best;
  best.K = K;
  best.mode = PlusMode::Sum;
  best.alpha = alpha;
  best.kappa = base;
  best.strict = evidence("kappa(r) < r", grid);
  best.strict.passed = false;
  double best_worst = -std::numeric_limits<double>::infinity();

  for (double theta : thetas) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("slack fraction must lie in (0, 1)");
    ContractionAnalysis a;
    a.K = K;
    a.mode = PlusMode::Sum;
    a.alpha = alpha;
    a.theta = theta;

    // The slack is proportional to the contraction gap, so it vanishes when b leaves no room.
    bool gap_positive = true;
    for (double r : pts)
      if (!(r - base(r) > 0.0)) {
        gap_positive = false;
        if (!a.first_violation) a.first_violation = r;
      }
    if (!gap_positive) {
      a.kappa = base;
      check_strict(a, pts, grid);
      a.failure = "no strict slack at K = " + std::to_string(K) + ": b(alpha^-1(r), K) >= r first at r = " +
                  format_number(*a.first_violation);
      if (a.strict.worst_margin > best_worst || best.failure.empty()) {
        best_worst = a.strict.worst_margin;
        best = a;
      }
      continue;
    }
    if (base_lin) {
      double rho = theta * (1.0 - *base_lin);
      double kap = *base_lin + rho;
      a.rho = ScalarKFn::linear(rho);
      a.kappa = ScalarKFn::linear(kap);
      a.zeta = ScalarKFn::linear(1.0 + kap / rho);
    } else {
      a.rho = ScalarKFn::gap(theta, base);
      a.kappa = ScalarKFn::sum({base, *a.rho});
      a.zeta = ScalarKFn::sum({ScalarKFn(), ScalarKFn::compose({ScalarKFn::inverse(*a.rho), a.kappa})});
    }
    check_strict(a, pts, grid);
    a.dominance = evidence("b(alpha^-1(r), K) + rho(r) <= kappa(r)", grid);
    a.zeta_growth = evidence("zeta(r) > 2 r", grid);
    const auto s = static_cast<std::int64_t>(K);
    for (double r : pts) {
      double lhs = bounds.b(alpha.inverse_at(r), s) + (*a.rho)(r);
      a.dominance.record(a.kappa(r) - lhs, {r}, 1e-12 * std::max(lhs, 1e-300));
      double zm = (*a.zeta)(r) - 2.0 * r;
      a.zeta_growth.record(zm, {r});
      if (!(zm > 0.0)) a.zeta_growth.passed = false;
    }
    a.passed = a.strict.passed && a.dominance.passed;
    classify(a);
    if (a.passed) return a;
    a.failure = "slack fraction " + format_number(theta) + " violates the contraction condition, worst margin " +
                format_number(std::min(a.strict.worst_margin, a.dominance.worst_margin));
    double worst = std::min(a.strict.worst_margin, a.dominance.worst_margin);
    if (worst > best_worst || best.failure.empty()) {
      best_worst = worst;
      best = a;
    }
  }
  best.passed = false;
  return best;
}

ContractionAnalysis find_contraction(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                     const LogGrid& grid) {
  return bounds.mode == PlusMode::Max ? find_contraction_max(bounds, alpha, K, grid)
                                      : find_contraction_sum(bounds, alpha, K, grid);
}

}  // namespace mhe
