#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhe/certificate.hpp"
#include "mhe/comparison.hpp"

namespace mhe {

/// Contraction of the K-step error map.
///   Max mode: kappa(r) = b(alpha^{-1}(r), K) < r.
///   Sum mode: b(alpha^{-1}(r), K) + rho(r) <= kappa(r) < r, zeta(r) = r + kappa(rho^{-1}(r)).
struct ContractionAnalysis {
  enum class Class { Linear, Nonlinear };

  std::size_t K = 0;
  PlusMode mode = PlusMode::Max;
  bool passed = false;
  ScalarKFn alpha;
  ScalarKFn kappa;
  std::optional<ScalarKFn> rho, zeta;  // Sum mode
  double theta = 0.0;                  // slack fraction of the chosen rho (Sum mode)
  Class cls = Class::Nonlinear;
  double eta = 0.0;  // kappa = eta * r when cls == Linear

  GridEvidence strict;      // r - kappa(r) > 0
  GridEvidence dominance;   // kappa - b(alpha^{-1}, K) - rho >= 0
  GridEvidence subdistributivity;
  GridEvidence zeta_growth;  // zeta(r) > 2 r
  /// Smallest grid radius at which strict contraction fails.
  std::optional<double> first_violation;
  std::string failure;
};

ContractionAnalysis find_contraction_max(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                         const LogGrid& grid = {});

/// Tries rho = theta (r - b(alpha^{-1}(r), K)) for each theta in order and keeps the first that passes.
ContractionAnalysis find_contraction_sum(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                         const LogGrid& grid = {}, std::vector<double> thetas = {0.25, 0.5});

/// Dispatches on the bounds' mode.
ContractionAnalysis find_contraction(const DerivedBounds& bounds, const ScalarKFn& alpha, std::size_t K,
                                     const LogGrid& grid = {});

struct HatBounds {
  KLFn b, c, d;
  PlusMode mode = PlusMode::Max;
  std::size_t K = 0;
  ScalarKFn kappa;
  GridEvidence kl;
};

/// Max mode:  theta_hat(r, t) = max{ kappa^{t/K}(theta(r, t mod K)), kappa^{t/K + 1}(theta(r, 0)) }.
/// Sum mode:  b_hat as above with 2 b inside; c_hat(r, t) = kappa^{t/K}(zeta(2 sum_{tau=1}^{K} c(r, tau))), d_hat alike.
HatBounds build_hat_bounds(const ContractionAnalysis& analysis, const DerivedBounds& bounds, const LogGrid& grid = {},
                           std::int64_t t_max = 0);

/// max{ b_hat(init, t), c_hat(|w(t - tau)|, tau), d_hat(|v(t - tau)|, tau) } over tau = 1..t.
double eval_mhe_bound(const HatBounds& hat, double init_dist, std::span<const double> w_norms,
                      std::span<const double> v_norms, std::int64_t t);

/// One-window recursion e(t) <= kappa(e(t - K)) (+) sum_{tau=1}^{K} [c (+) d] (Max), or
/// max{ kappa(e(t - K)), zeta(sum_{tau=1}^{K} [c + d]) } (Sum); requires t >= K.
double window_step_rhs(const ContractionAnalysis& analysis, const DerivedBounds& bounds, double e_prev,
                       std::span<const double> w_norms, std::span<const double> v_norms, std::int64_t t);

struct RgesWitness {
  bool passed = false;
  double C = 0.0;
  double lambda = 0.0;
  GridEvidence evidence;
};

/// For a linear contraction: b_hat(r, t) <= C lambda^t r with
/// lambda = max{ eta^{1/K}, one-step decay of b within a window }.
RgesWitness classify_rges(const ContractionAnalysis& analysis, const HatBounds& hat, const DerivedBounds& bounds,
                          const LogGrid& grid, std::int64_t t_max);

/// theta_bar_K(r, t) = max over k in [max(K, K0), K_max] of theta_hat_k(r, t).
struct BarBounds {
  std::size_t K0 = 0, K_max = 0;
  std::map<std::size_t, HatBounds> hats;
  std::map<std::size_t, ScalarKFn> kappas;
  /// Pointwise maxima of the hat bounds, keyed by K.
  std::map<std::size_t, KLFn> b, c, d;

  GridEvidence monotone;        // theta_bar_K >= theta_bar_{K+1}
  GridEvidence above_hat;       // theta_bar_K >= theta_hat_K
  GridEvidence above_fie;       // theta_bar_K >= theta
  GridEvidence kl;
  /// sup |theta_bar_{K_max} - theta| over the evaluation grid, for b, c, d.
  double gap_b = 0.0, gap_c = 0.0, gap_d = 0.0;
  std::string truncation;

  double eval_b(std::size_t K, double r, std::int64_t t) const;
};

BarBounds build_bar_bounds(const std::map<std::size_t, ContractionAnalysis>& analyses,
                           const std::map<std::size_t, HatBounds>& hats, const DerivedBounds& fie, std::size_t K0,
                           std::size_t K_max, const LogGrid& grid, std::int64_t t_max);

/// Smallest swept K from which b_bar_K(r, t) equals b(r, t), i.e. the first K >= t + 1
/// with kappa_K(b(r, 0)) <= b(r, t); nullopt if none in the sweep.
std::optional<std::size_t> bar_equality_threshold(const BarBounds& bar, const DerivedBounds& fie, double r,
                                                  std::int64_t t);

struct LemmaCheck {
  bool passed = true;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
};

struct SumToMaxReport {
  bool passed = true;
  LemmaCheck pointwise;  // kappa(e) - rho(e) + D <= max{ kappa(e), zeta(D) }
  LemmaCheck sequences;  // sum_tau f(r_tau, tau) <= max_tau sum_s f(r_tau, s)
};

/// Samples (e, D) log-uniformly in [r_min, r_max] (plus exact zeros) and random sequences of
/// lengths 1..seq_len. Tolerance is relative to the right-hand side.
SumToMaxReport check_sum_to_max_lemma(const ScalarKFn& kappa, const ScalarKFn& rho, const ScalarKFn& zeta,
                                      const KLFn& summable, std::size_t pointwise_samples,
                                      std::size_t sequence_samples, std::uint64_t seed, double tol = 1e-12,
                                      double r_min = 1e-6, double r_max = 1e3, std::size_t seq_len = 20);

struct InnerDiscounting {
  KLFn c_tilde;
  std::size_t K = 0;
  LemmaCheck check;  // sum_{tau=1}^{K} gamma(r_tau, tau) <= max_tau c_tilde(r_tau, tau)
};

/// c_tilde(r, tau) = 2 sum_{s=1}^{K} kappa^{floor(s/2)}(gamma(2r, floor(tau/2))) for gamma(r, t) = kappa^t(sigma(r)).
InnerDiscounting preserve_inner_discounting(const IossCertificate& cert, std::size_t K, std::size_t sequences = 1000,
                                            std::uint64_t seed = 0, double tol = 1e-12);

/// beta(r, s) <= sigma_r(r) lambda^s for s >= s_min.
struct ExponentialCandidate {
  ScalarKFn sigma_r;
  double lambda = 0.0;
};

struct EventuallyExponentialWitness {
  bool passed = false;
  ScalarKFn sigma_r;
  double lambda = 0.0;
  /// Lipschitz-at-origin estimate sup sigma_r(r) / r over the lowest decade.
  double L = 0.0;
  /// Smallest K with L lambda^K < 1.
  std::optional<std::int64_t> K_contractive;
  GridEvidence domination;
  std::string range;
  std::string failure;
};

/// Without candidates, fits lambda as the worst one-step decay of beta and
/// sigma_r(r) as max_s beta(r, s) / lambda^s on the grid.
EventuallyExponentialWitness check_eventually_exponential(const KLFn& beta, const LogGrid& grid, std::int64_t s_min,
                                                          std::int64_t s_max,
                                                          std::vector<ExponentialCandidate> candidates = {});

}  // namespace mhe
