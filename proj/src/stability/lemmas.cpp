#include <algorithm>
#include <cmath>
#include <variant>

#include "comparison/nodes.hpp"
#include "mhe/errors.hpp"
#include "mhe/rng.hpp"
#include "mhe/stability.hpp"

namespace mhe {

namespace {

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

void fold(LemmaCheck& c, double lhs, double rhs, double tol) {
  const double margin = rhs - lhs;
  if (c.samples == 0 || margin < c.worst_margin) c.worst_margin = margin;
  ++c.samples;
  if (!(margin >= -tol * std::max(std::abs(rhs), 1e-300))) {
    ++c.violations;
    c.passed = false;
  }
}

/// Random nonnegative sequence: every 10th is constant, every 10th has a zero entry.
std::vector<double> random_sequence(CounterRng& rng, std::size_t len, std::size_t index, double r_min, double r_max) {
  std::vector<double> seq(len);
  if (index % 10 == 0) {
    std::fill(seq.begin(), seq.end(), log_uniform(rng, r_min, r_max));
    return seq;
  }
  for (auto& r : seq) r = log_uniform(rng, r_min, r_max);
  if (index % 10 == 1) seq[static_cast<std::size_t>(rng.uniform() * static_cast<double>(len))] = 0.0;
  return seq;
}

}  // namespace

SumToMaxReport check_sum_to_max_lemma(const ScalarKFn& kappa, const ScalarKFn& rho, const ScalarKFn& zeta,
                                      const KLFn& summable, std::size_t pointwise_samples,
                                      std::size_t sequence_samples, std::uint64_t seed, double tol, double r_min,
                                      double r_max, std::size_t seq_len) {
  if (!(r_min > 0.0 && r_max > r_min)) throw DomainError("sum-to-max lemma: need 0 < r_min < r_max");
  if (seq_len < 1) throw DomainError("sum-to-max lemma: sequence length must be positive");
  SumToMaxReport rep;
  CounterRng rng(seed, 0x51);
  for (std::size_t i = 0; i < pointwise_samples; ++i) {
    double e = log_uniform(rng, r_min, r_max);
    double D = log_uniform(rng, r_min, r_max);
    if (i % 101 == 0) e = 0.0;
    if (i % 103 == 0) D = 0.0;
    // Half the samples sit close to the case boundary D = rho(e).
    if (i % 2 == 1) D = rho(e) * rng.uniform(0.9, 1.1);
    const double lhs = kappa(e) - rho(e) + D;
    const double rhs = std::max(kappa(e), zeta(D));
    fold(rep.pointwise, lhs, rhs, tol);
  }
  CounterRng seq_rng(seed, 0x52);
  for (std::size_t i = 0; i < sequence_samples; ++i) {
    const std::size_t len = 1 + static_cast<std::size_t>(seq_rng.uniform() * static_cast<double>(seq_len));
    auto seq = random_sequence(seq_rng, len, i, r_min, r_max);
    double lhs = 0.0;
    for (std::size_t tau = 1; tau <= len; ++tau) lhs += summable(seq[tau - 1], static_cast<std::int64_t>(tau));
    double rhs = 0.0;
    for (double r : seq) {
      double acc = 0.0;
      for (std::size_t s = 1; s <= len; ++s) acc += summable(r, static_cast<std::int64_t>(s));
      rhs = std::max(rhs, acc);
    }
    fold(rep.sequences, lhs, rhs, tol);
  }
  rep.passed = rep.pointwise.passed && rep.sequences.passed;
  return rep;
}

InnerDiscounting preserve_inner_discounting(const IossCertificate& cert, std::size_t K, std::size_t sequences,
                                            std::uint64_t seed, double tol) {
  if (cert.mode != PlusMode::Sum) throw DomainError("inner discounting applies to Sum-mode certificates");
  if (K < 1) throw DomainError("inner discounting needs K >= 1");
  const auto* it = std::get_if<detail::IteratedKL>(&cert.gamma.node().v);
  if (!it) throw CapabilityError("inner discounting needs gamma of the form kappa^t(sigma(r)), got " +
                                 cert.gamma.to_string());
  InnerDiscounting out;
  out.K = K;
  out.c_tilde = KLFn::inner_discounted(it->kappa, cert.gamma, static_cast<int>(K));
  CounterRng rng(seed, 0x53);
  for (std::size_t i = 0; i < sequences; ++i) {
    auto seq = random_sequence(rng, K, i, 1e-6, 1e3);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t tau = 1; tau <= K; ++tau) {
      const auto t = static_cast<std::int64_t>(tau);
      lhs += cert.gamma(seq[tau - 1], t);
      rhs = std::max(rhs, out.c_tilde(seq[tau - 1], t));
    }
    fold(out.check, lhs, rhs, tol);
  }
  return out;
}

}  // namespace mhe
