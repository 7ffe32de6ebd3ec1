#include <algorithm>
#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/stability.hpp"

namespace mhe {

namespace {

GridEvidence named(const char* check, const std::string& range) {
  GridEvidence ev;
  ev.check = check;
  ev.range = range;
  return ev;
}

const KLFn& pick(const HatBounds& h, int which) { return which == 0 ? h.b : which == 1 ? h.c : h.d; }
const KLFn& pick(const DerivedBounds& f, int which) { return which == 0 ? f.b : which == 1 ? f.c : f.d; }

}  // namespace

double BarBounds::eval_b(std::size_t K, double r, std::int64_t t) const {
  auto it = b.find(std::max(K, K0));
  if (it == b.end()) throw DomainError("bar bound requested outside the swept horizon range");
  return it->second(r, t);
}

BarBounds build_bar_bounds(const std::map<std::size_t, ContractionAnalysis>& analyses,
                           const std::map<std::size_t, HatBounds>& hats, const DerivedBounds& fie, std::size_t K0,
                           std::size_t K_max, const LogGrid& grid, std::int64_t t_max) {
  if (K0 < 1 || K_max < K0) throw DomainError("bar bounds: need 1 <= K0 <= K_max");
  BarBounds bar;
  bar.K0 = K0;
  bar.K_max = K_max;
  for (std::size_t K = K0; K <= K_max; ++K) {
    auto h = hats.find(K);
    auto a = analyses.find(K);
    if (h == hats.end() || a == analyses.end() || !a->second.passed)
      throw DomainError("bar bounds: horizon " + std::to_string(K) + " lacks a passing analysis");
    bar.hats.emplace(K, h->second);
    bar.kappas.emplace(K, a->second.kappa);
  }
  const auto pts = grid.points();
  for (std::size_t K = K0; K < K_max; ++K) {
    const auto& k1 = bar.kappas.at(K);
    const auto& k2 = bar.kappas.at(K + 1);
    for (double r : pts)
      if (k2(r) > k1(r) * (1.0 + 1e-12))
        throw DomainError("bar bounds: contraction family is not monotone in K (K = " + std::to_string(K) + ")");
  }
  for (std::size_t K = K0; K <= K_max; ++K) {
    std::vector<KLFn> bs, cs, ds;
    for (std::size_t k = K; k <= K_max; ++k) {
      bs.push_back(bar.hats.at(k).b);
      cs.push_back(bar.hats.at(k).c);
      ds.push_back(bar.hats.at(k).d);
    }
    bar.b.emplace(K, bs.size() == 1 ? bs[0] : KLFn::pointwise_max(bs));
    bar.c.emplace(K, cs.size() == 1 ? cs[0] : KLFn::pointwise_max(cs));
    bar.d.emplace(K, ds.size() == 1 ? ds[0] : KLFn::pointwise_max(ds));
  }
  bar.truncation = "sup over k truncated at K_max = " + std::to_string(K_max);

  const std::string range = grid.describe() + ", t in [0, " + std::to_string(t_max) + "]";
  bar.monotone = named("theta_bar_K >= theta_bar_{K+1}", range);
  bar.above_hat = named("theta_bar_K >= theta_hat_K", range);
  bar.above_fie = named("theta_bar_K >= theta", range);
  for (int which = 0; which < 3; ++which) {
    const auto& bars = which == 0 ? bar.b : which == 1 ? bar.c : bar.d;
    double& gap = which == 0 ? bar.gap_b : which == 1 ? bar.gap_c : bar.gap_d;
    for (std::int64_t t = 0; t <= t_max; ++t) {
      const double td = static_cast<double>(t);
      for (double r : pts) {
        const double base = pick(fie, which)(r, t);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t K = K0; K <= K_max; ++K) {
          const double v = bars.at(K)(r, t);
          const double kd = static_cast<double>(K);
          if (std::isfinite(prev)) bar.monotone.record(prev - v, {kd, r, td});
          bar.above_hat.record(v - pick(bar.hats.at(K), which)(r, t), {kd, r, td});
          bar.above_fie.record(v - base, {kd, r, td}, 1e-12 * base);
          prev = v;
        }
        gap = std::max(gap, std::abs(prev - base));
      }
    }
  }
  bar.kl = check_kl_invariants(bar.b.at(K0), grid, t_max);
  return bar;
}

std::optional<std::size_t> bar_equality_threshold(const BarBounds& bar, const DerivedBounds& fie, double r,
                                                  std::int64_t t) {
  if (fie.mode != PlusMode::Max) return std::nullopt;
  const double b0 = fie.b(r, 0);
  const double bt = fie.b(r, t);
  for (std::size_t K = std::max(bar.K0, static_cast<std::size_t>(t + 1)); K <= bar.K_max; ++K)
    if (bar.kappas.at(K)(b0) <= bt) return K;
  return std::nullopt;
}

}  // namespace mhe
