#include <algorithm>
#include <cmath>

#include "comparison/nodes.hpp"
#include "mhe/errors.hpp"
#include "util/format.hpp"

namespace mhe {

using detail::overloaded;
using util::format_number;

namespace {

double geometric_power(double lambda, std::int64_t s) {
  if (s == 0) return 1.0;
  return std::pow(lambda, static_cast<double>(s));
}

void require_window(int window) {
  if (window < 1) throw DomainError("window length must be at least 1");
}

}  // namespace

KLFn detail::KLNode::make(KLNode node) { return KLFn(std::make_shared<const KLNode>(std::move(node))); }

KLFn::KLFn() : KLFn(separable_geometric(0.0, 1.0, 0.0)) {}

KLFn::KLFn(std::shared_ptr<const detail::KLNode> node) : node_(std::move(node)) {}

KLFn KLFn::separable_geometric(double c, double p, double lambda) {
  if (!(c >= 0.0) || !(p > 0.0) || !(lambda >= 0.0) || !(lambda <= 1.0) || !std::isfinite(c))
    throw DomainError("geometric: need c >= 0, p > 0, 0 <= lambda <= 1");
  return detail::KLNode::make({detail::GeometricKL{c, p, lambda}});
}

KLFn KLFn::tabulated(std::vector<double> r_knots, std::vector<std::vector<double>> rows) {
  if (r_knots.size() < 2 || r_knots[0] != 0.0) throw DomainError("tabulated: knots must start at 0 and have length >= 2");
  for (std::size_t i = 1; i < r_knots.size(); ++i)
    if (!(r_knots[i] > r_knots[i - 1])) throw DomainError("tabulated: knots must be strictly increasing");
  if (rows.empty()) throw DomainError("tabulated: no rows");
  for (const auto& row : rows)
    if (row.size() != r_knots.size()) throw DomainError("tabulated: row length differs from knot count");
  return detail::KLNode::make({detail::TabulatedKL{std::move(r_knots), std::move(rows)}});
}

KLFn KLFn::scaled_shift(KLFn base, double out_scale, std::vector<double> r_scale, std::int64_t s_shift) {
  if (!(out_scale > 0.0) || s_shift < 0) throw DomainError("scaled: need out_scale > 0 and shift >= 0");
  for (double n : r_scale)
    if (!(n > 0.0)) throw DomainError("scaled: radius scales must be positive");
  return detail::KLNode::make({detail::ScaledShiftKL{std::move(base), out_scale, std::move(r_scale), s_shift}});
}

KLFn KLFn::pointwise_max(std::vector<KLFn> terms) {
  if (terms.empty()) throw DomainError("max: empty term list");
  if (terms.size() == 1) return terms.front();
  return detail::KLNode::make({detail::MaxKL{std::move(terms)}});
}

KLFn KLFn::pointwise_sum(std::vector<KLFn> terms) {
  if (terms.empty()) throw DomainError("sum: empty term list");
  if (terms.size() == 1) return terms.front();
  return detail::KLNode::make({detail::SumKL{std::move(terms)}});
}

KLFn KLFn::iterated(ScalarKFn kappa, ScalarKFn sigma) {
  return detail::KLNode::make({detail::IteratedKL{std::move(kappa), std::move(sigma)}});
}

KLFn KLFn::window_iterated(ScalarKFn kappa, KLFn theta, int window, double pre_scale) {
  require_window(window);
  if (!(pre_scale > 0.0)) throw DomainError("window: pre-scale must be positive");
  return detail::KLNode::make({detail::WindowIteratedKL{std::move(kappa), std::move(theta), window, pre_scale}});
}

KLFn KLFn::window_summed(ScalarKFn kappa, ScalarKFn zeta, KLFn theta, int window, double pre_scale) {
  require_window(window);
  if (!(pre_scale > 0.0)) throw DomainError("window_sum: pre-scale must be positive");
  return detail::KLNode::make(
      {detail::WindowSummedKL{std::move(kappa), std::move(zeta), std::move(theta), window, pre_scale}});
}

KLFn KLFn::inner_discounted(ScalarKFn kappa, KLFn gamma, int window) {
  require_window(window);
  return detail::KLNode::make({detail::InnerDiscountedKL{std::move(kappa), std::move(gamma), window}});
}

double KLFn::operator()(double r, std::int64_t s) const {
  if (!(r >= 0.0)) throw DomainError("KL evaluation at negative or NaN radius");
  if (s < 0) throw DomainError("KL evaluation at negative time");
  return std::visit(
      overloaded{
          [&](const detail::GeometricKL& k) {
            if (r == 0.0) return 0.0;
            double rp = k.p == 1.0 ? r : std::pow(r, k.p);
            return k.c * geometric_power(k.lambda, s) * rp;
          },
          [&](const detail::TabulatedKL& k) {
            const auto& row = k.rows[std::min<std::size_t>(static_cast<std::size_t>(s), k.rows.size() - 1)];
            auto it = std::upper_bound(k.r.begin(), k.r.end(), r);
            std::size_t i = static_cast<std::size_t>(it - k.r.begin());
            if (i == 0) i = 1;
            if (i >= k.r.size()) i = k.r.size() - 1;
            double slope = (row[i] - row[i - 1]) / (k.r[i] - k.r[i - 1]);
            return row[i - 1] + slope * (r - k.r[i - 1]);
          },
          [&](const detail::ScaledShiftKL& k) { return k.out * k.base(k.scale_at(s) * r, s + k.shift); },
          [&](const detail::MaxKL& k) {
            double v = 0.0;
            for (const auto& t : k.terms) v = std::max(v, t(r, s));
            return v;
          },
          [&](const detail::SumKL& k) {
            double v = 0.0;
            for (const auto& t : k.terms) v += t(r, s);
            return v;
          },
          [&](const detail::IteratedKL& k) { return k.kappa.iterate(s, k.sigma(r)); },
          [&](const detail::WindowIteratedKL& k) {
            std::int64_t blocks = s / k.window;
            std::int64_t rest = s % k.window;
            double a = k.kappa.iterate(blocks, k.pre * k.theta(r, rest));
            double b = k.kappa.iterate(blocks + 1, k.pre * k.theta(r, 0));
            return std::max(a, b);
          },
          [&](const detail::WindowSummedKL& k) {
            double acc = 0.0;
            for (int tau = 1; tau <= k.window; ++tau) acc += k.theta(r, tau);
            return k.kappa.iterate(s / k.window, k.zeta(k.pre * acc));
          },
          [&](const detail::InnerDiscountedKL& k) {
            double g = k.gamma(2.0 * r, s / 2);
            double acc = 0.0;
            for (int j = 1; j <= k.window; ++j) acc += k.kappa.iterate(j / 2, g);
            return 2.0 * acc;
          },
      },
      node_->v);
}

std::optional<double> KLFn::tail_bound(double r, std::int64_t from) const {
  if (!(r >= 0.0)) throw DomainError("tail bound at negative radius");
  if (from < 0) from = 0;
  return std::visit(
      overloaded{
          [&](const detail::GeometricKL& k) -> std::optional<double> {
            if (k.lambda >= 1.0) return std::nullopt;
            if (r == 0.0 || k.c == 0.0) return 0.0;
            return k.c * std::pow(r, k.p) * geometric_power(k.lambda, from) / (1.0 - k.lambda);
          },
          [&](const detail::TabulatedKL&) -> std::optional<double> { return std::nullopt; },
          [&](const detail::ScaledShiftKL& k) -> std::optional<double> {
            double n = 0.0;
            if (k.r_scale.empty())
              n = 1.0;
            else
              for (std::size_t i = static_cast<std::size_t>(std::min<std::int64_t>(from, k.r_scale.size() - 1));
                   i < k.r_scale.size(); ++i)
                n = std::max(n, k.r_scale[i]);
            auto t = k.base.tail_bound(n * r, from + k.shift);
            if (!t) return std::nullopt;
            return k.out * *t;
          },
          [&](const detail::MaxKL& k) -> std::optional<double> {
            double acc = 0.0;
            for (const auto& t : k.terms) {
              auto b = t.tail_bound(r, from);
              if (!b) return std::nullopt;
              acc += *b;
            }
            return acc;
          },
          [&](const detail::SumKL& k) -> std::optional<double> {
            double acc = 0.0;
            for (const auto& t : k.terms) {
              auto b = t.tail_bound(r, from);
              if (!b) return std::nullopt;
              acc += *b;
            }
            return acc;
          },
          [&](const detail::IteratedKL& k) -> std::optional<double> {
            auto eta = k.kappa.linear_coefficient();
            if (!eta || *eta >= 1.0) return std::nullopt;
            return k.sigma(r) * geometric_power(*eta, from) / (1.0 - *eta);
          },
          [&](const detail::WindowIteratedKL& k) -> std::optional<double> {
            auto eta = k.kappa.linear_coefficient();
            if (!eta || *eta >= 1.0) return std::nullopt;
            // Every value in block j is at most eta^j * pre * theta(r, 0).
            std::int64_t j0 = from / k.window;
            return k.window * k.pre * k.theta(r, 0) * geometric_power(*eta, j0) / (1.0 - *eta);
          },
          [&](const detail::WindowSummedKL& k) -> std::optional<double> {
            auto eta = k.kappa.linear_coefficient();
            if (!eta || *eta >= 1.0) return std::nullopt;
            double acc = 0.0;
            for (int tau = 1; tau <= k.window; ++tau) acc += k.theta(r, tau);
            std::int64_t j0 = from / k.window;
            return k.window * k.zeta(k.pre * acc) * geometric_power(*eta, j0) / (1.0 - *eta);
          },
          [&](const detail::InnerDiscountedKL& k) -> std::optional<double> {
            // Each value is at most 2 K gamma(2r, floor(tau/2)) and every
            // index floor(tau/2) is hit at most twice.
            auto t = k.gamma.tail_bound(2.0 * r, from / 2);
            if (!t) return std::nullopt;
            return 4.0 * k.window * *t;
          },
      },
      node_->v);
}

bool KLFn::has_tail_bound() const { return tail_bound(1.0, 0).has_value(); }

std::optional<double> KLFn::slice_linear_coefficient(std::int64_t s) const {
  return std::visit(
      overloaded{
          [&](const detail::GeometricKL& k) -> std::optional<double> {
            if (k.p != 1.0) return std::nullopt;
            return k.c * geometric_power(k.lambda, s);
          },
          [&](const detail::TabulatedKL&) -> std::optional<double> { return std::nullopt; },
          [&](const detail::ScaledShiftKL& k) -> std::optional<double> {
            auto c = k.base.slice_linear_coefficient(s + k.shift);
            if (!c) return std::nullopt;
            return k.out * k.scale_at(s) * *c;
          },
          [&](const detail::MaxKL& k) -> std::optional<double> {
            double v = 0.0;
            for (const auto& t : k.terms) {
              auto c = t.slice_linear_coefficient(s);
              if (!c) return std::nullopt;
              v = std::max(v, *c);
            }
            return v;
          },
          [&](const detail::SumKL& k) -> std::optional<double> {
            double v = 0.0;
            for (const auto& t : k.terms) {
              auto c = t.slice_linear_coefficient(s);
              if (!c) return std::nullopt;
              v += *c;
            }
            return v;
          },
          [&](const detail::IteratedKL& k) -> std::optional<double> {
            auto eta = k.kappa.linear_coefficient();
            auto sig = k.sigma.linear_coefficient();
            if (!eta || !sig) return std::nullopt;
            return k.kappa.iterate(s, *sig);
          },
          [&](const detail::WindowIteratedKL& k) -> std::optional<double> {
            if (!k.kappa.linear_coefficient()) return std::nullopt;
            auto a = k.theta.slice_linear_coefficient(s % k.window);
            auto b = k.theta.slice_linear_coefficient(0);
            if (!a || !b) return std::nullopt;
            std::int64_t blocks = s / k.window;
            return std::max(k.kappa.iterate(blocks, k.pre * *a), k.kappa.iterate(blocks + 1, k.pre * *b));
          },
          [&](const detail::WindowSummedKL& k) -> std::optional<double> {
            if (!k.kappa.linear_coefficient() || !k.zeta.linear_coefficient()) return std::nullopt;
            double acc = 0.0;
            for (int tau = 1; tau <= k.window; ++tau) {
              auto c = k.theta.slice_linear_coefficient(tau);
              if (!c) return std::nullopt;
              acc += *c;
            }
            return k.kappa.iterate(s / k.window, k.zeta(k.pre * acc));
          },
          [&](const detail::InnerDiscountedKL& k) -> std::optional<double> {
            if (!k.kappa.linear_coefficient()) return std::nullopt;
            auto g = k.gamma.slice_linear_coefficient(s / 2);
            if (!g) return std::nullopt;
            double acc = 0.0;
            for (int j = 1; j <= k.window; ++j) acc += k.kappa.iterate(j / 2, 2.0 * *g);
            return 2.0 * acc;
          },
      },
      node_->v);
}

bool KLFn::slice_unbounded(std::int64_t s) const {
  return std::visit(
      overloaded{
          [&](const detail::GeometricKL& k) { return k.c > 0.0 && geometric_power(k.lambda, s) > 0.0; },
          [&](const detail::TabulatedKL& k) {
            const auto& row = k.rows[std::min<std::size_t>(static_cast<std::size_t>(s), k.rows.size() - 1)];
            return row[row.size() - 1] > row[row.size() - 2];
          },
          [&](const detail::ScaledShiftKL& k) { return k.base.slice_unbounded(s + k.shift); },
          [&](const detail::MaxKL& k) {
            return std::any_of(k.terms.begin(), k.terms.end(), [&](const KLFn& t) { return t.slice_unbounded(s); });
          },
          [&](const detail::SumKL& k) {
            return std::any_of(k.terms.begin(), k.terms.end(), [&](const KLFn& t) { return t.slice_unbounded(s); });
          },
          [&](const detail::IteratedKL& k) { return k.kappa.is_unbounded() && k.sigma.is_unbounded(); },
          [&](const detail::WindowIteratedKL& k) { return k.kappa.is_unbounded() && k.theta.slice_unbounded(0); },
          [&](const detail::WindowSummedKL& k) {
            return k.kappa.is_unbounded() && k.zeta.is_unbounded() && k.theta.slice_unbounded(1);
          },
          [&](const detail::InnerDiscountedKL& k) { return k.kappa.is_unbounded() && k.gamma.slice_unbounded(s / 2); },
      },
      node_->v);
}

KLFn::Family KLFn::family() const { return static_cast<Family>(node_->v.index()); }

namespace {
std::string list_numbers(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_number(v[i]);
  }
  return out + "]";
}

std::string list_fns(const char* tag, const std::vector<KLFn>& v) {
  std::string out = std::string(tag) + "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += v[i].to_string();
  }
  return out + ")";
}
}  // namespace

std::string KLFn::to_string() const {
  return std::visit(
      overloaded{
          [](const detail::GeometricKL& k) {
            return "geom(" + format_number(k.c) + "," + format_number(k.p) + "," + format_number(k.lambda) + ")";
          },
          [](const detail::TabulatedKL& k) {
            std::string out = "table(" + list_numbers(k.r);
            for (const auto& row : k.rows) out += "," + list_numbers(row);
            return out + ")";
          },
          [](const detail::ScaledShiftKL& k) {
            return "scaled(" + k.base.to_string() + "," + format_number(k.out) + "," + list_numbers(k.r_scale) + "," +
                   std::to_string(k.shift) + ")";
          },
          [](const detail::MaxKL& k) { return list_fns("max", k.terms); },
          [](const detail::SumKL& k) { return list_fns("sum", k.terms); },
          [](const detail::IteratedKL& k) {
            return "iterated(" + k.kappa.to_string() + "," + k.sigma.to_string() + ")";
          },
          [](const detail::WindowIteratedKL& k) {
            return "window(" + k.kappa.to_string() + "," + k.theta.to_string() + "," + std::to_string(k.window) + "," +
                   format_number(k.pre) + ")";
          },
          [](const detail::WindowSummedKL& k) {
            return "window_sum(" + k.kappa.to_string() + "," + k.zeta.to_string() + "," + k.theta.to_string() + "," +
                   std::to_string(k.window) + "," + format_number(k.pre) + ")";
          },
          [](const detail::InnerDiscountedKL& k) {
            return "inner(" + k.kappa.to_string() + "," + k.gamma.to_string() + "," + std::to_string(k.window) + ")";
          },
      },
      node_->v);
}

double kl_eval(const KLFn& f, double r, std::int64_t s) { return f(r, s); }

}  // namespace mhe
