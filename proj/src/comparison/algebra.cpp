#include <algorithm>
#include <cmath>
#include <limits>

#include "comparison/nodes.hpp"
#include "mhe/errors.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

const char* to_string(PlusMode mode) { return mode == PlusMode::Max ? "max" : "sum"; }

PlusMode parse_plus_mode(const std::string& text) {
  if (text == "max" || text == "Max") return PlusMode::Max;
  if (text == "sum" || text == "Sum") return PlusMode::Sum;
  throw ParseError("unknown plus mode '" + text + "' (expected max or sum)");
}

double plus(PlusMode mode, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("plus: negative operand");
  return mode == PlusMode::Max ? std::max(a, b) : a + b;
}

double plus_reduce(PlusMode mode, std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw DomainError("plus_reduce: negative value " + format_number(v));
    acc = mode == PlusMode::Max ? std::max(acc, v) : acc + v;
  }
  return acc;
}

std::vector<double> LogGrid::points() const {
  if (!(r_min > 0.0) || !(r_max >= r_min) || per_decade < 1) throw DomainError("log grid: invalid range");
  const double decades = std::log10(r_max / r_min);
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double e = std::min(decades, static_cast<double>(i) / per_decade);
    out.push_back(r_min * std::pow(10.0, e));
  }
  out.back() = r_max;
  return out;
}

std::string LogGrid::describe() const {
  return "r in [" + format_number(r_min) + ", " + format_number(r_max) + "], " + std::to_string(per_decade) +
         " points/decade";
}

void GridEvidence::record(double margin, std::initializer_list<double> point, double tol) {
  if (points == 0 || margin < worst_margin || std::isnan(margin)) {
    worst_margin = margin;
    worst_point.assign(point.begin(), point.end());
  }
  ++points;
  if (!(margin >= -tol)) passed = false;
}

TriangleGrowth TriangleGrowth::constant(double n, PlusMode mode) {
  if (!(n >= 1.0 && n <= 2.0)) throw DomainError("triangle growth must lie in [1, 2]");
  TriangleGrowth g;
  g.values = {n};
  g.mode = mode;
  g.evidence.check = "constant";
  return g;
}

double TriangleGrowth::at(std::int64_t s) const {
  if (values.empty()) return 2.0;
  auto idx = static_cast<std::size_t>(std::max<std::int64_t>(s, 0));
  return idx < values.size() ? values[idx] : values.back();
}

std::string TriangleGrowth::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_number(values[i]);
  }
  return out + "]";
}

SummabilityEvidence check_summable(const KLFn& f, const ScalarKFn& sigma, const LogGrid& grid,
                                   std::int64_t tail_horizon) {
  if (!f.has_tail_bound()) throw CapabilityError("summability: family has no analytic tail bound: " + f.to_string());
  SummabilityEvidence ev;
  ev.sigma = sigma.to_string();
  ev.horizon = tail_horizon;
  ev.grid.check = "summable";
  ev.grid.range = grid.describe() + ", horizon " + std::to_string(tail_horizon);
  for (double r : grid.points()) {
    double partial = 0.0;
    for (std::int64_t tau = 0; tau < tail_horizon; ++tau) partial += f(r, tau);
    double total = partial + *f.tail_bound(r, tail_horizon);
    double bound = sigma(r);
    ev.grid.record(bound - total, {r}, 1e-12 * bound);
  }
  ev.passed = ev.grid.passed;
  return ev;
}

namespace {

std::vector<double> coarse(const LogGrid& grid) {
  LogGrid g = grid;
  g.per_decade = std::min(grid.per_decade, 8);
  return g.points();
}

// Exponent p if every leaf of f is a geometric family with the same p.
std::optional<double> common_exponent(const KLFn& f) {
  using namespace detail;
  return std::visit(overloaded{
                        [](const GeometricKL& k) -> std::optional<double> { return k.p; },
                        [](const ScaledShiftKL& k) { return common_exponent(k.base); },
                        [](const MaxKL& k) -> std::optional<double> {
                          std::optional<double> p;
                          for (const auto& t : k.terms) {
                            auto q = common_exponent(t);
                            if (!q || (p && *p != *q)) return std::nullopt;
                            p = q;
                          }
                          return p;
                        },
                        [](const SumKL& k) -> std::optional<double> {
                          std::optional<double> p;
                          for (const auto& t : k.terms) {
                            auto q = common_exponent(t);
                            if (!q || (p && *p != *q)) return std::nullopt;
                            p = q;
                          }
                          return p;
                        },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    f.node().v);
}

bool triangle_holds(const KLFn& f, PlusMode mode, double n, std::int64_t s, const std::vector<double>& pts) {
  for (double a1 : pts)
    for (double a2 : pts) {
      if (a2 < a1) continue;  // symmetric in (a1, a2)
      double lhs = f(a1 + a2, s);
      double rhs = plus(mode, f(n * a1, s), f(n * a2, s));
      if (lhs > rhs * (1.0 + 1e-12)) return false;
    }
  return true;
}

}  // namespace

GridEvidence check_triangle(const KLFn& f, PlusMode mode, const TriangleGrowth& n, std::int64_t s_max,
                            const LogGrid& grid) {
  GridEvidence ev;
  ev.check = "triangle";
  ev.range = grid.describe() + " (pairs at <= 8/decade), s in [0, " + std::to_string(s_max) + "]";
  auto pts = coarse(grid);
  for (std::int64_t s = 0; s <= s_max; ++s) {
    double ns = n.at(s);
    for (double a1 : pts)
      for (double a2 : pts) {
        if (a2 < a1) continue;
        double lhs = f(a1 + a2, s);
        double rhs = plus(mode, f(ns * a1, s), f(ns * a2, s));
        ev.record(rhs - lhs, {a1, a2, static_cast<double>(s)}, 1e-12 * rhs);
      }
  }
  return ev;
}

TriangleGrowth triangle_constant(const KLFn& f, PlusMode mode, std::int64_t s_max, const LogGrid& grid) {
  std::vector<double> candidates{1.0, 2.0};
  if (auto p = common_exponent(f); p && mode == PlusMode::Sum && *p > 1.0)
    candidates.push_back(std::pow(2.0, 1.0 - 1.0 / *p));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  auto pts = coarse(grid);
  TriangleGrowth g;
  g.mode = mode;
  g.values.assign(static_cast<std::size_t>(s_max + 1), 2.0);
  for (std::int64_t s = 0; s <= s_max; ++s) {
    for (double c : candidates) {
      if (c == 2.0 || triangle_holds(f, mode, c, s, pts)) {
        g.values[static_cast<std::size_t>(s)] = c;
        break;
      }
    }
  }
  // Raising N never breaks the inequality, so a running max from the right
  // makes the profile nonincreasing without losing validity.
  for (std::size_t i = g.values.size(); i-- > 1;) g.values[i - 1] = std::max(g.values[i - 1], g.values[i]);
  // Trim a constant tail.
  while (g.values.size() > 1 && g.values[g.values.size() - 2] == g.values.back()) g.values.pop_back();
  g.evidence = check_triangle(f, mode, g, s_max, grid);
  return g;
}

GridEvidence check_k_invariants(const ScalarKFn& f, const LogGrid& grid) {
  GridEvidence ev;
  ev.check = "k_function";
  ev.range = grid.describe();
  double at0 = f(0.0);
  ev.record(-std::abs(at0), {0.0});
  double prev = at0;
  for (double r : grid.points()) {
    double v = f(r);
    ev.record(v - prev, {r});
    if (!(v > prev)) ev.passed = false;
    double nudged = f(r * (1.0 + 1e-10));
    // continuity probe: a tiny step in r must not produce a visible jump
    ev.record(1e-6 * (v + std::numeric_limits<double>::min()) - std::abs(nudged - v), {r});
    prev = v;
  }
  if (f.is_unbounded()) {
    double far = f(1e200);
    ev.record(far - 1e6 * f(1.0), {1e200});
  }
  return ev;
}

GridEvidence check_kl_invariants(const KLFn& f, const LogGrid& grid, std::int64_t s_max) {
  GridEvidence ev;
  ev.check = "kl_function";
  ev.range = grid.describe() + ", s in [0, " + std::to_string(s_max) + "]";
  auto pts = grid.points();
  std::vector<double> prev_row(pts.size());
  for (std::int64_t s = 0; s <= s_max; ++s) {
    const double sd = static_cast<double>(s);
    ev.record(-std::abs(f(0.0, s)), {0.0, sd});
    double prev = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double v = f(pts[i], s);
      // strictly increasing in r, except where both values underflowed to 0
      bool ok = v > prev || (v == 0.0 && prev == 0.0);
      ev.record(ok ? v - prev : -std::abs(v - prev) - std::numeric_limits<double>::min(), {pts[i], sd});
      if (s > 0) ev.record(prev_row[i] - v, {pts[i], sd}, 1e-14 * prev_row[i]);
      prev_row[i] = v;
      prev = v;
    }
  }
  // decay toward zero: the last slice must lie strictly below the first
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double first = f(pts[i], 0);
    if (first > 0.0) {
      double last = f(pts[i], s_max);
      double gap = first - last;
      ev.record(gap > 0.0 ? gap : -first, {pts[i], static_cast<double>(s_max)});
    }
  }
  return ev;
}

}  // namespace mhe
