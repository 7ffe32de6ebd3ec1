#include "mhe/certificate.hpp"
#include "mhe/errors.hpp"

namespace mhe {

namespace {

struct Geo {
  double c, lambda;
};

CertificateGains gains(Geo beta, Geo gamma, Geo delta, Geo epsilon, Geo phi) {
  CertificateGains g;
  g.alpha = ScalarKFn::linear(1.0);
  auto kl = [](Geo p) { return KLFn::separable_geometric(p.c, 1.0, p.lambda); };
  auto bound = [](Geo p) { return ScalarKFn::linear(p.c / (1.0 - p.lambda)); };
  g.beta = kl(beta);
  g.gamma = kl(gamma);
  g.delta = kl(delta);
  g.epsilon = kl(epsilon);
  g.phi = kl(phi);
  g.sigma = {{"gamma", bound(gamma)}, {"delta", bound(delta)}, {"epsilon", bound(epsilon)}, {"phi", bound(phi)}};
  return g;
}

// Sum over tau >= 1 of (0.85 / 0.925)^tau, divided by 0.85: converts the
// 0.85-weighted sum of a sequence into a max of its 0.925-weighted terms.
constexpr double kS4Ratio = (0.85 / 0.925) / (1.0 - 0.85 / 0.925) / 0.85;

}  // namespace

IossCertificate certificate_fixture(const std::string& id, const LogGrid& grid) {
  // Scalar plants, Max mode: one output-injection step
  //   x(t) - chi(t) = a (dy - dv)(t-1) + du(t-1) + dw(t-1)   (a = 0.5, or 2 for s2)
  // For s3 the first term is instead bounded by 0.5 |dy - dv|(t-1), since sin is 1-Lipschitz.
  // The sum of the terms is bounded by the term count times their max.
  // Sum mode uses the plain contraction recursion where it exists.
  if (id == "s1_max" || id == "s3_max") {
    auto g = gains({1, 0.5}, {6, 0.5}, {3, 0.5}, {1, 0.5}, {3, 0.5});
    return make_certificate(id, id.substr(0, 2), PlusMode::Max, g, Provenance::Analytic, grid);
  }
  if (id == "s1_sum" || id == "s3_sum") {
    auto g = gains({1, 0.5}, {2, 0.5}, {1, 0.5}, {1, 0.5}, {1, 0.5});
    return make_certificate(id, id.substr(0, 2), PlusMode::Sum, g, Provenance::Analytic, grid);
  }
  if (id == "s2_max") {
    auto g = gains({1, 0.5}, {8, 0.5}, {16, 0.5}, {8, 0.5}, {16, 0.5});
    return make_certificate(id, "s2", PlusMode::Max, g, Provenance::Analytic, grid);
  }
  if (id == "s2_sum") {
    auto g = gains({1, 0.5}, {2, 0.5}, {4, 0.5}, {2, 0.5}, {4, 0.5});
    return make_certificate(id, "s2", PlusMode::Sum, g, Provenance::Analytic, grid);
  }
  // s4: the error Jacobian has spectral norm below 0.85 everywhere; the
  // certificates are only checked by sampling.
  if (id == "s4_sum") {
    auto g = gains({1, 0.85}, {1 / 0.85, 0.85}, {1, 0.85}, {1 / 0.85, 0.85}, {1, 0.85});
    return make_certificate(id, "s4", PlusMode::Sum, g, Provenance::Sampled, grid);
  }
  if (id == "s4_max") {
    const double c = 3.0 * kS4Ratio * 1.001;
    auto g = gains({3, 0.85}, {c, 0.925}, {1, 0.85}, {c, 0.925}, {1, 0.85});
    return make_certificate(id, "s4", PlusMode::Max, g, Provenance::Sampled, grid);
  }
  throw ConfigError("unknown certificate id '" + id + "'");
}

std::vector<std::string> certificate_ids() {
  return {"s1_max", "s1_sum", "s2_max", "s2_sum", "s3_max", "s3_sum", "s4_max", "s4_sum"};
}

}  // namespace mhe
