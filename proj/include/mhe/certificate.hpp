#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mhe/comparison.hpp"
#include "mhe/system.hpp"

namespace mhe {

/// Proven offline from the error recursion, or only checked by sampling.
enum class Provenance { Analytic, Sampled };

/// Detectability data: for any two solutions,
///   alpha(|x(t) - chi(t)|) <= beta(|x0 - chi0|, t) (+) sum_{tau=1}^{t} [ gamma(|dw|, tau) (+) delta(|dv|, tau)
///                              (+) epsilon(|du|, tau) (+) phi(|dy|, tau) ]
/// with each difference taken at time t - tau.
struct IossCertificate {
  std::string id;
  std::string plant;
  PlusMode mode = PlusMode::Max;
  ScalarKFn alpha;
  KLFn beta, gamma, delta, epsilon, phi;
  /// Bounding functions for the sums over tau, keyed by gain name.
  std::map<std::string, ScalarKFn> sigma;
  std::map<std::string, SummabilityEvidence> summability;
  Provenance provenance = Provenance::Analytic;
};

struct CertificateGains {
  ScalarKFn alpha;
  KLFn beta, gamma, delta, epsilon, phi;
  std::map<std::string, ScalarKFn> sigma;
};

/// Validates the alpha K-infinity flag and, in Sum mode, summability of
/// gamma, delta, epsilon, phi against their bounding functions.
IossCertificate make_certificate(std::string id, std::string plant, PlusMode mode, CertificateGains gains,
                                 Provenance provenance, const LogGrid& grid = {});

/// Cost weights: J = beta_hat(|chi0 - prior|, K) (+) sum_{tau=1}^{K} [ gamma_hat(|omega(t-tau)|, tau)
///                                                    (+) delta_hat(|nu(t-tau)|, tau) ]
struct CostSpec {
  std::string id;
  PlusMode mode = PlusMode::Max;
  KLFn beta_hat, gamma_hat, delta_hat;
  std::map<std::string, SummabilityEvidence> summability;
};

CostSpec make_cost(std::string id, PlusMode mode, KLFn beta_hat, KLFn gamma_hat, KLFn delta_hat,
                   const LogGrid& grid = {});

/// Triangle growth profiles for beta, gamma and delta.
struct GrowthSet {
  TriangleGrowth beta, gamma, delta;

  static GrowthSet uniform(const TriangleGrowth& n) { return {n, n, n}; }
};

GrowthSet triangle_growths(const IossCertificate& cert, std::int64_t s_max, const LogGrid& grid);

/// beta_hat(r, s) = beta(N(s) r, s), likewise gamma_hat and delta_hat.
CostSpec default_cost_from_certificate(const IossCertificate& cert, const GrowthSet& n, const LogGrid& grid = {});

struct CompatibilityWitness {
  bool passed = false;
  double B = 0.0;
  GrowthSet n;
  GridEvidence beta, gamma, delta;
  /// max over the grid of gain(N r, s) / gain_hat(r, s) across the three pairs.
  double worst_ratio = 0.0;
  std::vector<double> candidates;
};

CompatibilityWitness check_compatibility(const IossCertificate& cert, const CostSpec& cost, const GrowthSet& n,
                                         const LogGrid& grid, std::int64_t s_max,
                                         std::vector<double> candidates = {1.0, 2.0, 4.0, 8.0});

/// b(r, s) = beta(N r, s) (+) A B beta_hat(r, s), c and d likewise; (+) is max
/// in Max mode and sum in Sum mode.
struct DerivedBounds {
  KLFn b, c, d;
  PlusMode mode = PlusMode::Max;
  double A = 1.0;
  double B = 1.0;
  std::string certificate_id, cost_id;
};

DerivedBounds derive_bcd(const IossCertificate& cert, const CostSpec& cost, const CompatibilityWitness& witness,
                         double A);

/// Grid check of b <= (1 (+) A) B beta_hat and the analogous c, d bounds.
GridEvidence check_bound_envelopes(const DerivedBounds& bounds, const CostSpec& cost, const LogGrid& grid,
                                   std::int64_t s_max);

/// b(init, t) (+) sum_{tau=1}^{t} [ c(|w(t - tau)|, tau) (+) d(|v(t - tau)|, tau) ];
/// w_norms[i] and v_norms[i] are the disturbance sizes at time i.
double eval_rgas_rhs(const DerivedBounds& bounds, double init_dist, std::span<const double> w_norms,
                     std::span<const double> v_norms, std::int64_t t);

struct MarginRecord {
  bool passed = true;
  double worst_margin = 0.0;
  std::size_t worst_t = 0;
  std::vector<double> lhs, rhs;
};

/// Evaluates the certificate inequality at every t of two equal-length solutions.
MarginRecord check_ioss_on_pair(const IossCertificate& cert, const SystemModel& model, const SolutionTuple& sol1,
                                const SolutionTuple& sol2, double tol_cert = 1e-9);

struct FalsificationRow {
  std::uint64_t pair_seed = 0;
  std::size_t worst_t = 0;
  double margin = 0.0;
};

struct FalsificationReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
  std::vector<FalsificationRow> rows;
};

/// Samples random solution pairs of length T and checks the certificate on each.
FalsificationReport falsify_certificate(const IossCertificate& cert, const SystemModel& model, std::size_t pairs,
                                        std::uint64_t seed, std::size_t T = 30, double tol_cert = 1e-9);

void write_falsification_csv(std::ostream& os, const FalsificationReport& report);

/// Shipped certificates, ids "<plant>_<mode>" for plants s1..s4.
IossCertificate certificate_fixture(const std::string& id, const LogGrid& grid = {});
std::vector<std::string> certificate_ids();

}  // namespace mhe
