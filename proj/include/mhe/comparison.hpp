#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mhe {

/// How disturbance contributions are combined. Chosen once per analysis and
/// shared by the certificate, the cost, and every derived bound.
enum class PlusMode { Max, Sum };

const char* to_string(PlusMode mode);
PlusMode parse_plus_mode(const std::string& text);

/// Combine nonnegative values; the empty fold is 0 in both modes.
double plus_reduce(PlusMode mode, std::span<const double> values);
double plus(PlusMode mode, double a, double b);

namespace detail {
struct ScalarNode;
struct KLNode;
}  // namespace detail

class KLFn;

/// A strictly increasing function on [0, inf) vanishing at 0, drawn from a
/// closed set of parametric families so that inverses, iterates and text
/// serialization are available.
class ScalarKFn {
 public:
  enum class Family { Linear, Power, PiecewiseLinear, Composition, Inverse, Section, Sum, Gap, Series };

  ScalarKFn();  // identity

  static ScalarKFn linear(double c);
  static ScalarKFn power(double c, double p);
  /// Knots start at (0, 0); beyond the last knot the last slope continues.
  static ScalarKFn piecewise_linear(std::vector<double> x, std::vector<double> y);
  /// Stages are applied left to right: compose({f, g})(r) = g(f(r)).
  static ScalarKFn compose(std::vector<ScalarKFn> stages);
  static ScalarKFn inverse(ScalarKFn f);
  /// r -> f(r, s) for a fixed time argument.
  static ScalarKFn section(KLFn f, std::int64_t s);
  static ScalarKFn sum(std::vector<ScalarKFn> terms);
  /// r -> theta * (r - f(r)); a K-function whenever r - f(r) is increasing.
  static ScalarKFn gap(double theta, ScalarKFn f);
  /// r -> analytic upper bound of sum_{tau >= 0} f(r, tau).
  static ScalarKFn series(KLFn f);

  double operator()(double r) const;
  /// Solve f(x) = y. Closed form where the family allows it, bisection otherwise.
  double inverse_at(double y) const;
  /// n-fold composition applied to r.
  double iterate(std::int64_t n, double r) const;

  Family family() const;
  /// Coefficient c when the function is exactly r -> c r.
  std::optional<double> linear_coefficient() const;
  /// Structural K-infinity flag (unbounded growth).
  bool is_unbounded() const;
  std::string to_string() const;

  const detail::ScalarNode& node() const { return *node_; }

 private:
  explicit ScalarKFn(std::shared_ptr<const detail::ScalarNode> node);
  std::shared_ptr<const detail::ScalarNode> node_;
  friend struct detail::ScalarNode;
};

/// A function of (r, s) that is a K-function in r for every s and
/// nonincreasing in s, again drawn from closed parametric families.
class KLFn {
 public:
  enum class Family {
    SeparableGeometric,
    Tabulated,
    ScaledShift,
    PointwiseMax,
    PointwiseSum,
    Iterated,
    WindowIterated,
    WindowSummed,
    InnerDiscounted
  };

  KLFn();  // identically zero

  /// c * lambda^s * r^p
  static KLFn separable_geometric(double c, double p, double lambda);
  /// rows[s][i] is the value at r_knots[i]; linear in r between knots and
  /// beyond the last; rows past the end repeat the last row.
  static KLFn tabulated(std::vector<double> r_knots, std::vector<std::vector<double>> rows);
  /// out_scale * base(r_scale(s) * r, s + s_shift); r_scale[s] for s past the end is the last entry.
  static KLFn scaled_shift(KLFn base, double out_scale, std::vector<double> r_scale, std::int64_t s_shift);
  static KLFn pointwise_max(std::vector<KLFn> terms);
  static KLFn pointwise_sum(std::vector<KLFn> terms);
  /// kappa^s(sigma(r))
  static KLFn iterated(ScalarKFn kappa, ScalarKFn sigma);
  /// max{kappa^k(pre * theta(r, l)), kappa^{k+1}(pre * theta(r, 0))} with t = k K + l.
  static KLFn window_iterated(ScalarKFn kappa, KLFn theta, int window, double pre_scale);
  /// kappa^k(zeta(pre * sum_{tau=1}^{K} theta(r, tau))) with k = floor(t / K).
  static KLFn window_summed(ScalarKFn kappa, ScalarKFn zeta, KLFn theta, int window, double pre_scale);
  /// 2 * sum_{s=1}^{K} kappa^{floor(s/2)}(gamma(2 r, floor(tau/2))).
  static KLFn inner_discounted(ScalarKFn kappa, KLFn gamma, int window);

  /// Throws DomainError for r < 0 or s < 0.
  double operator()(double r, std::int64_t s) const;
  /// Analytic upper bound of sum_{tau >= from} f(r, tau), if the family has one.
  std::optional<double> tail_bound(double r, std::int64_t from) const;
  bool has_tail_bound() const;
  /// Coefficient c(s) when r -> f(r, s) is exactly linear.
  std::optional<double> slice_linear_coefficient(std::int64_t s) const;
  bool slice_unbounded(std::int64_t s) const;

  Family family() const;
  std::string to_string() const;

  const detail::KLNode& node() const { return *node_; }

 private:
  explicit KLFn(std::shared_ptr<const detail::KLNode> node);
  std::shared_ptr<const detail::KLNode> node_;
  friend struct detail::KLNode;
};

ScalarKFn parse_k(const std::string& text);
KLFn parse_kl(const std::string& text);

// ---------------------------------------------------------------------------
// Grids and evidence

/// Logarithmically spaced radii.
struct LogGrid {
  double r_min = 1e-9;
  double r_max = 1e3;
  int per_decade = 64;

  std::vector<double> points() const;
  std::string describe() const;
};

/// Outcome of a grid check: pass flag, worst margin (rhs - lhs, or the
/// check-specific slack) and the point at which it occurred.
struct GridEvidence {
  std::string check;
  bool passed = true;
  double worst_margin = 0.0;
  std::vector<double> worst_point;
  std::size_t points = 0;
  std::string range;

  /// Fold one probe into the record; the probe passes iff margin >= -tol.
  void record(double margin, std::initializer_list<double> point, double tol = 0.0);
};

struct SummabilityEvidence {
  bool passed = false;
  std::string sigma;
  GridEvidence grid;
  std::int64_t horizon = 0;
};

/// Nonincreasing step profile N(s) in [1, 2].
struct TriangleGrowth {
  std::vector<double> values;
  PlusMode mode = PlusMode::Max;
  GridEvidence evidence;

  static TriangleGrowth constant(double n, PlusMode mode);
  double at(std::int64_t s) const;
  std::string to_string() const;
};

double kl_eval(const KLFn& f, double r, std::int64_t s);
double k_inverse(const ScalarKFn& f, double y);
double iterate_k(const ScalarKFn& kappa, std::int64_t n, double r);

SummabilityEvidence check_summable(const KLFn& f, const ScalarKFn& sigma, const LogGrid& grid,
                                   std::int64_t tail_horizon = 200);

/// Grid check of f(a1 + a2, s) <= f(N(s) a1, s) (+) f(N(s) a2, s).
GridEvidence check_triangle(const KLFn& f, PlusMode mode, const TriangleGrowth& n, std::int64_t s_max,
                            const LogGrid& grid);

/// Smallest per-s growth from the candidate set {1, family value, 2} that
/// passes check_triangle; made nonincreasing in s.
TriangleGrowth triangle_constant(const KLFn& f, PlusMode mode, std::int64_t s_max, const LogGrid& grid);

GridEvidence check_k_invariants(const ScalarKFn& f, const LogGrid& grid);
GridEvidence check_kl_invariants(const KLFn& f, const LogGrid& grid, std::int64_t s_max);

}  // namespace mhe
