#include <algorithm>
#include <cmath>
#include <limits>

#include "comparison/nodes.hpp"
#include "mhe/errors.hpp"
#include "util/format.hpp"

namespace mhe {

using detail::overloaded;
using util::format_number;

namespace {

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be finite and nonnegative");
}

void require_pos(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be finite and positive");
}

std::optional<double> compute_linear(const detail::ScalarNode& n) {
  return std::visit(
      overloaded{
          [](const detail::LinearK& k) -> std::optional<double> { return k.c; },
          [](const detail::PowerK& k) -> std::optional<double> {
            if (k.p == 1.0) return k.c;
            return std::nullopt;
          },
          [](const detail::PiecewiseLinearK& k) -> std::optional<double> {
            double slope = (k.y[1] - k.y[0]) / (k.x[1] - k.x[0]);
            for (std::size_t i = 2; i < k.x.size(); ++i) {
              double si = (k.y[i] - k.y[i - 1]) / (k.x[i] - k.x[i - 1]);
              if (si != slope) return std::nullopt;
            }
            return slope;
          },
          [](const detail::CompositionK& k) -> std::optional<double> {
            double c = 1.0;
            for (const auto& s : k.stages) {
              auto l = s.linear_coefficient();
              if (!l) return std::nullopt;
              c *= *l;
            }
            return c;
          },
          [](const detail::InverseK& k) -> std::optional<double> {
            auto l = k.f.linear_coefficient();
            if (!l || *l <= 0.0) return std::nullopt;
            return 1.0 / *l;
          },
          [](const detail::SectionK& k) -> std::optional<double> { return k.f.slice_linear_coefficient(k.s); },
          [](const detail::SumK& k) -> std::optional<double> {
            double c = 0.0;
            for (const auto& t : k.terms) {
              auto l = t.linear_coefficient();
              if (!l) return std::nullopt;
              c += *l;
            }
            return c;
          },
          [](const detail::GapK& k) -> std::optional<double> {
            auto l = k.f.linear_coefficient();
            if (!l) return std::nullopt;
            return k.theta * (1.0 - *l);
          },
          [](const detail::SeriesK& k) -> std::optional<double> {
            for (std::int64_t s = 0; s < 4; ++s)
              if (!k.f.slice_linear_coefficient(s)) return std::nullopt;
            auto a = k.f.tail_bound(1.0, 0);
            auto b = k.f.tail_bound(3.0, 0);
            if (!a || !b) return std::nullopt;
            if (std::abs(*b - 3.0 * *a) > 1e-14 * std::abs(*b)) return std::nullopt;
            return *a;
          },
      },
      n.v);
}

double bisect_inverse(const ScalarKFn& f, double y) {
  if (y == 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, y);
  int guard = 0;
  while (f(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) throw CapabilityError("inverse: function does not reach " + format_number(y));
  }
  const double tol = 1e-12 * y;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (std::abs(fm - y) <= tol) return mid;
    if (fm < y)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::min()) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ScalarKFn detail::ScalarNode::make(ScalarNode node) {
  node.linear = compute_linear(node);
  return ScalarKFn(std::make_shared<const ScalarNode>(std::move(node)));
}

ScalarKFn::ScalarKFn() : ScalarKFn(linear(1.0)) {}

ScalarKFn::ScalarKFn(std::shared_ptr<const detail::ScalarNode> node) : node_(std::move(node)) {}

ScalarKFn ScalarKFn::linear(double c) {
  require_pos(c, "linear coefficient");
  return detail::ScalarNode::make({detail::LinearK{c}, {}});
}

ScalarKFn ScalarKFn::power(double c, double p) {
  require_pos(c, "power coefficient");
  require_pos(p, "power exponent");
  return detail::ScalarNode::make({detail::PowerK{c, p}, {}});
}

ScalarKFn ScalarKFn::piecewise_linear(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("piecewise-linear: need at least two knots of equal length");
  if (x[0] != 0.0 || y[0] != 0.0) throw DomainError("piecewise-linear: first knot must be (0, 0)");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1]) || !(y[i] > y[i - 1]))
      throw DomainError("piecewise-linear: knots must be strictly increasing in both coordinates");
  }
  return detail::ScalarNode::make({detail::PiecewiseLinearK{std::move(x), std::move(y)}, {}});
}

ScalarKFn ScalarKFn::compose(std::vector<ScalarKFn> stages) {
  if (stages.empty()) throw DomainError("composition: empty stage list");
  if (stages.size() == 1) return stages.front();
  return detail::ScalarNode::make({detail::CompositionK{std::move(stages)}, {}});
}

ScalarKFn ScalarKFn::inverse(ScalarKFn f) {
  if (!f.is_unbounded()) throw CapabilityError("inverse: argument is not flagged K-infinity: " + f.to_string());
  return detail::ScalarNode::make({detail::InverseK{std::move(f)}, {}});
}

ScalarKFn ScalarKFn::section(KLFn f, std::int64_t s) {
  if (s < 0) throw DomainError("section: negative time argument");
  return detail::ScalarNode::make({detail::SectionK{std::move(f), s}, {}});
}

ScalarKFn ScalarKFn::sum(std::vector<ScalarKFn> terms) {
  if (terms.empty()) throw DomainError("sum: empty term list");
  if (terms.size() == 1) return terms.front();
  return detail::ScalarNode::make({detail::SumK{std::move(terms)}, {}});
}

ScalarKFn ScalarKFn::gap(double theta, ScalarKFn f) {
  require_pos(theta, "gap factor");
  return detail::ScalarNode::make({detail::GapK{theta, std::move(f)}, {}});
}

ScalarKFn ScalarKFn::series(KLFn f) {
  if (!f.has_tail_bound()) throw CapabilityError("series: family has no analytic tail bound: " + f.to_string());
  return detail::ScalarNode::make({detail::SeriesK{std::move(f)}, {}});
}

double ScalarKFn::operator()(double r) const {
  if (node_->linear) return *node_->linear * r;
  return std::visit(overloaded{
                        [&](const detail::LinearK& k) { return k.c * r; },
                        [&](const detail::PowerK& k) { return k.c * std::pow(r, k.p); },
                        [&](const detail::PiecewiseLinearK& k) {
                          auto it = std::upper_bound(k.x.begin(), k.x.end(), r);
                          std::size_t i = static_cast<std::size_t>(it - k.x.begin());
                          if (i == 0) i = 1;
                          if (i >= k.x.size()) i = k.x.size() - 1;
                          double slope = (k.y[i] - k.y[i - 1]) / (k.x[i] - k.x[i - 1]);
                          return k.y[i - 1] + slope * (r - k.x[i - 1]);
                        },
                        [&](const detail::CompositionK& k) {
                          double v = r;
                          for (const auto& s : k.stages) v = s(v);
                          return v;
                        },
                        [&](const detail::InverseK& k) { return k.f.inverse_at(r); },
                        [&](const detail::SectionK& k) { return k.f(r, k.s); },
                        [&](const detail::SumK& k) {
                          double v = 0.0;
                          for (const auto& t : k.terms) v += t(r);
                          return v;
                        },
                        [&](const detail::GapK& k) { return k.theta * (r - k.f(r)); },
                        [&](const detail::SeriesK& k) { return *k.f.tail_bound(r, 0); },
                    },
                    node_->v);
}

double ScalarKFn::inverse_at(double y) const {
  require_nonneg(y, "inverse argument");
  if (!is_unbounded()) throw CapabilityError("inverse: function is not flagged K-infinity: " + to_string());
  if (node_->linear) return y / *node_->linear;
  return std::visit(overloaded{
                        [&](const detail::PowerK& k) { return std::pow(y / k.c, 1.0 / k.p); },
                        [&](const detail::PiecewiseLinearK& k) {
                          auto it = std::upper_bound(k.y.begin(), k.y.end(), y);
                          std::size_t i = static_cast<std::size_t>(it - k.y.begin());
                          if (i == 0) i = 1;
                          if (i >= k.y.size()) i = k.y.size() - 1;
                          double slope = (k.x[i] - k.x[i - 1]) / (k.y[i] - k.y[i - 1]);
                          return k.x[i - 1] + slope * (y - k.y[i - 1]);
                        },
                        [&](const detail::CompositionK& k) {
                          double v = y;
                          for (auto it = k.stages.rbegin(); it != k.stages.rend(); ++it) v = it->inverse_at(v);
                          return v;
                        },
                        [&](const detail::InverseK& k) { return k.f(y); },
                        [&](const auto&) { return bisect_inverse(*this, y); },
                    },
                    node_->v);
}

double ScalarKFn::iterate(std::int64_t n, double r) const {
  if (n < 0) throw DomainError("iterate: negative count");
  if (node_->linear) {
    double c = *node_->linear;
    if (c == 1.0) return r;
    return std::pow(c, static_cast<double>(n)) * r;
  }
  double v = r;
  for (std::int64_t i = 0; i < n; ++i) {
    v = (*this)(v);
    if (v == 0.0) break;
  }
  return v;
}

ScalarKFn::Family ScalarKFn::family() const { return static_cast<Family>(node_->v.index()); }

std::optional<double> ScalarKFn::linear_coefficient() const { return node_->linear; }

bool ScalarKFn::is_unbounded() const {
  return std::visit(overloaded{
                        [](const detail::LinearK&) { return true; },
                        [](const detail::PowerK&) { return true; },
                        [](const detail::PiecewiseLinearK&) { return true; },
                        [](const detail::CompositionK& k) {
                          return std::all_of(k.stages.begin(), k.stages.end(),
                                             [](const ScalarKFn& s) { return s.is_unbounded(); });
                        },
                        [](const detail::InverseK&) { return true; },
                        [](const detail::SectionK& k) { return k.f.slice_unbounded(k.s); },
                        [](const detail::SumK& k) {
                          return std::any_of(k.terms.begin(), k.terms.end(),
                                             [](const ScalarKFn& s) { return s.is_unbounded(); });
                        },
                        [&](const detail::GapK&) { return node_->linear.has_value() && *node_->linear > 0.0; },
                        [](const detail::SeriesK& k) { return k.f.slice_unbounded(0); },
                    },
                    node_->v);
}

namespace {
std::string join_numbers(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_number(v[i]);
  }
  return out + "]";
}
}  // namespace

std::string ScalarKFn::to_string() const {
  return std::visit(overloaded{
                        [](const detail::LinearK& k) { return "linear(" + format_number(k.c) + ")"; },
                        [](const detail::PowerK& k) {
                          return "power(" + format_number(k.c) + "," + format_number(k.p) + ")";
                        },
                        [](const detail::PiecewiseLinearK& k) {
                          return "pwl(" + join_numbers(k.x) + "," + join_numbers(k.y) + ")";
                        },
                        [](const detail::CompositionK& k) {
                          std::string out = "compose(";
                          for (std::size_t i = 0; i < k.stages.size(); ++i) {
                            if (i) out += ",";
                            out += k.stages[i].to_string();
                          }
                          return out + ")";
                        },
                        [](const detail::InverseK& k) { return "inverse(" + k.f.to_string() + ")"; },
                        [](const detail::SectionK& k) {
                          return "section(" + k.f.to_string() + "," + std::to_string(k.s) + ")";
                        },
                        [](const detail::SumK& k) {
                          std::string out = "sum(";
                          for (std::size_t i = 0; i < k.terms.size(); ++i) {
                            if (i) out += ",";
                            out += k.terms[i].to_string();
                          }
                          return out + ")";
                        },
                        [](const detail::GapK& k) {
                          return "gap(" + format_number(k.theta) + "," + k.f.to_string() + ")";
                        },
                        [](const detail::SeriesK& k) { return "series(" + k.f.to_string() + ")"; },
                    },
                    node_->v);
}

double k_inverse(const ScalarKFn& f, double y) { return f.inverse_at(y); }

double iterate_k(const ScalarKFn& kappa, std::int64_t n, double r) { return kappa.iterate(n, r); }

}  // namespace mhe
