#include <algorithm>
#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/stability.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

namespace {

/// Largest sigma_r(r) / r over the lowest decade of the grid, plus the same
/// ratio one decade up (used to detect a ratio that diverges at the origin).
std::pair<double, double> origin_ratios(const ScalarKFn& sigma, const std::vector<double>& pts) {
  const double r0 = pts.front();
  double low = 0.0, high = 0.0;
  for (double r : pts) {
    if (r <= 10.0 * r0) low = std::max(low, sigma(r) / r);
    if (r >= 10.0 * r0 && r <= 100.0 * r0) high = std::max(high, sigma(r) / r);
  }
  return {low, high};
}

}  // namespace

EventuallyExponentialWitness check_eventually_exponential(const KLFn& beta, const LogGrid& grid, std::int64_t s_min,
                                                          std::int64_t s_max,
                                                          std::vector<ExponentialCandidate> candidates) {
  if (s_min < 0 || s_max < s_min) throw DomainError("eventually exponential check: need 0 <= s_min <= s_max");
  const auto pts = grid.points();
  if (pts.size() < 2) throw DomainError("eventually exponential check: grid too small");
  EventuallyExponentialWitness best;
  best.range = grid.describe() + ", s in [" + std::to_string(s_min) + ", " + std::to_string(s_max) + "]";

  bool all_zero = true;
  for (double r : pts)
    for (std::int64_t s = s_min; s <= s_max && all_zero; ++s)
      if (beta(r, s) != 0.0) all_zero = false;
  if (all_zero) {
    best.passed = true;
    best.sigma_r = ScalarKFn::linear(1.0);
    best.L = 0.0;
    best.K_contractive = s_min;
    best.domination.check = "beta(r, s) <= sigma_r(r) lambda^s";
    best.domination.range = best.range;
    return best;
  }

  if (candidates.empty()) {
    double lambda = 0.0;
    for (double r : pts)
      for (std::int64_t s = s_min; s < s_max; ++s) {
        double a = beta(r, s);
        if (a > 0.0) lambda = std::max(lambda, beta(r, s + 1) / a);
      }
    if (!(lambda > 0.0 && lambda < 1.0)) {
      best.failure = "beta does not decay geometrically on the range (worst one-step ratio " + format_number(lambda) + ")";
      return best;
    }
    std::vector<double> x{0.0}, y{0.0};
    double running = 0.0;
    for (double r : pts) {
      double m = 0.0;
      for (std::int64_t s = s_min; s <= s_max; ++s) m = std::max(m, beta(r, s) / std::pow(lambda, s));
      // Knots must be strictly increasing; nudge flat stretches by a relative ulp.
      running = std::max(m, running * (1.0 + 1e-15) + 1e-300);
      x.push_back(r);
      y.push_back(running);
    }
    candidates.push_back({ScalarKFn::piecewise_linear(x, y), lambda});
  }

  bool found = false;
  for (const auto& cand : candidates) {
    EventuallyExponentialWitness w;
    w.range = best.range;
    w.sigma_r = cand.sigma_r;
    w.lambda = cand.lambda;
    w.domination.check = "beta(r, s) <= sigma_r(r) lambda^s";
    w.domination.range = best.range;
    for (double r : pts)
      for (std::int64_t s = s_min; s <= s_max; ++s) {
        double rhs = cand.sigma_r(r) * std::pow(cand.lambda, s);
        w.domination.record(rhs - beta(r, s), {r, static_cast<double>(s)}, 1e-12 * rhs);
      }
    auto [low, high] = origin_ratios(cand.sigma_r, pts);
    w.L = low;
    if (!w.domination.passed) {
      w.failure = "candidate does not dominate beta, worst margin " + format_number(w.domination.worst_margin);
    } else if (high > 0.0 && low > 1.5 * high) {
      w.failure = "sigma_r(r) / r diverges towards the origin (" + format_number(high) + " -> " + format_number(low) +
                  " over one decade)";
    } else {
      w.passed = true;
      for (std::int64_t K = 1; K <= 100000; ++K)
        if (w.L * std::pow(w.lambda, K) < 1.0) {
          w.K_contractive = K;
          break;
        }
    }
    if (w.passed && (!found || w.L < best.L)) {
      best = w;
      found = true;
    } else if (!found && best.failure.empty()) {
      best = w;
    }
  }
  return best;
}

}  // namespace mhe
