#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mhe/certificate.hpp"
#include "mhe/errors.hpp"
#include "mhe/plants.hpp"
#include "mhe/rng.hpp"

using namespace mhe;

namespace {

const LogGrid kGrid{1e-3, 1e3, 8};

Vec scalar(double x) { return Vec::Constant(1, x); }

KLFn geom(double c, double lambda, double p = 1.0) { return KLFn::separable_geometric(c, p, lambda); }

/// S1 certificate with exact gains beta = 0.5^s r, gamma = 0.5^{s-1} r and a
/// configurable gamma override.
IossCertificate s1_sum_certificate(const KLFn& gamma) {
  CertificateGains g;
  g.alpha = ScalarKFn::linear(1.0);
  g.beta = geom(1.0, 0.5);
  g.gamma = gamma;
  g.delta = geom(0.0, 0.5);
  g.epsilon = geom(0.0, 0.5);
  g.phi = geom(0.0, 0.5);
  for (const char* name : {"gamma", "delta", "epsilon", "phi"}) g.sigma[name] = ScalarKFn::linear(4.0);
  return make_certificate("s1_exact", "s1", PlusMode::Sum, g, Provenance::Analytic, kGrid);
}

SolutionTuple run_s1(double x0, const Seq& w, std::size_t T) {
  auto m = make_plant("s1");
  Seq u(T, Vec::Zero(1)), v(T, Vec::Zero(1));
  auto sol = simulate(m, scalar(x0), u, w, v, T);
  sol.x.push_back(m.f(sol.x.back(), sol.u.back(), sol.w.back()));
  return sol;
}

DerivedBounds linear_bounds(PlusMode mode, double cb, double cc, double cd) {
  DerivedBounds d;
  d.mode = mode;
  d.b = geom(cb, 0.5);
  d.c = geom(cc, 0.5);
  d.d = geom(cd, 0.5);
  return d;
}

}  // namespace

TEST(IossPair, IdenticalTuplesPass) {
  auto cert = certificate_fixture("s1_max", kGrid);
  auto m = make_plant("s1");
  CounterRng rng(1);
  Seq w(20);
  for (auto& e : w) e = scalar(rng.uniform(-0.2, 0.2));
  auto sol = run_s1(0.7, w, 20);
  auto rec = check_ioss_on_pair(cert, m, sol, sol);
  EXPECT_TRUE(rec.passed);
  for (double l : rec.lhs) EXPECT_EQ(l, 0.0);
  EXPECT_GE(rec.worst_margin, 0.0);
}

TEST(IossPair, ExactS1RecursionPasses) {
  auto cert = s1_sum_certificate(geom(2.0, 0.5));
  auto m = make_plant("s1");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed);
    const std::size_t T = 25;
    Seq w1(T), w2(T);
    for (std::size_t t = 0; t < T; ++t) {
      w1[t] = scalar(rng.uniform(-1, 1));
      w2[t] = scalar(rng.uniform(-1, 1));
    }
    const double a0 = rng.uniform(-3, 3), b0 = rng.uniform(-3, 3);
    auto s1 = run_s1(a0, w1, T), s2 = run_s1(b0, w2, T);
    auto rec = check_ioss_on_pair(cert, m, s1, s2);
    EXPECT_TRUE(rec.passed) << seed;
    // Closed-form oracle: x - chi = a^t dx0 + sum a^{tau-1} dw(t - tau).
    for (std::size_t t = 0; t < rec.lhs.size(); ++t) {
      double e = std::pow(0.5, static_cast<double>(t)) * (a0 - b0);
      for (std::size_t tau = 1; tau <= t; ++tau) e += std::pow(0.5, static_cast<double>(tau) - 1) * (w1[t - tau][0] - w2[t - tau][0]);
      EXPECT_NEAR(rec.lhs[t], std::abs(e), 1e-12);
    }
  }
}

TEST(IossPair, ShrunkGainFailsOnImpulse) {
  auto cert = s1_sum_certificate(geom(0.1, 0.5));
  auto m = make_plant("s1");
  Seq w0(5, scalar(0.0)), w1(5, scalar(0.0));
  w1[0] = scalar(1.0);
  auto rec = check_ioss_on_pair(cert, m, run_s1(0.0, w0, 5), run_s1(0.0, w1, 5));
  EXPECT_FALSE(rec.passed);
  EXPECT_EQ(rec.worst_t, 1u);
  EXPECT_NEAR(rec.lhs[1], 1.0, 1e-15);
  EXPECT_NEAR(rec.rhs[1], 0.05, 1e-15);
}

TEST(IossPair, MismatchedInputsRejected) {
  auto cert = certificate_fixture("s1_max", kGrid);
  Seq w(4, scalar(0.0));
  auto a = run_s1(0.0, w, 4);
  auto b = run_s1(0.0, Seq(3, scalar(0.0)), 3);
  EXPECT_THROW(check_ioss_on_pair(cert, make_plant("s1"), a, b), DomainError);
  EXPECT_THROW(check_ioss_on_pair(cert, make_plant("s2"), a, a), DomainError);
}

TEST(Fixtures, SurviveFalsification) {
  for (const auto& id : certificate_ids()) {
    auto cert = certificate_fixture(id, kGrid);
    auto rep = falsify_certificate(cert, make_plant(cert.plant), 100, 42, 30);
    EXPECT_EQ(rep.violations, 0u) << id << " worst " << rep.worst_margin;
    EXPECT_EQ(rep.pairs, 100u);
  }
  EXPECT_THROW(certificate_fixture("s9_max"), ConfigError);
}

TEST(DefaultCost, Substitution) {
  auto lin = geom(1.0, 0.5);
  CertificateGains g;
  g.alpha = ScalarKFn::linear(1.0);
  g.beta = lin;
  g.gamma = geom(1.0, 0.5, 2.0);
  g.delta = lin;
  g.epsilon = lin;
  g.phi = lin;
  auto cert = make_certificate("c", "s1", PlusMode::Max, g, Provenance::Analytic, kGrid);
  auto cost = default_cost_from_certificate(cert, GrowthSet::uniform(TriangleGrowth::constant(2.0, PlusMode::Max)));
  for (double r : kGrid.points())
    for (std::int64_t s : {0, 1, 4, 9}) {
      const double ls = std::pow(0.5, static_cast<double>(s));
      EXPECT_DOUBLE_EQ(cost.beta_hat(r, s), 2.0 * ls * r);
      EXPECT_DOUBLE_EQ(cost.gamma_hat(r, s), 4.0 * ls * r * r);
    }
  auto sum_cert = certificate_fixture("s1_sum", kGrid);
  auto id_cost = default_cost_from_certificate(sum_cert, GrowthSet::uniform(TriangleGrowth::constant(1.0, PlusMode::Sum)));
  for (double r : kGrid.points()) EXPECT_EQ(id_cost.beta_hat(r, 3), sum_cert.beta(r, 3));
}

TEST(Compatibility, DefaultCostGivesUnitB) {
  for (const auto& id : certificate_ids()) {
    auto cert = certificate_fixture(id, kGrid);
    auto n = triangle_growths(cert, 30, kGrid);
    auto cost = default_cost_from_certificate(cert, n, kGrid);
    auto w = check_compatibility(cert, cost, n, kGrid, 30);
    EXPECT_TRUE(w.passed) << id;
    EXPECT_EQ(w.B, 1.0) << id;
    EXPECT_NEAR(w.worst_ratio, 1.0, 1e-12) << id;
  }
}

TEST(Compatibility, ScaledCosts) {
  auto cert = certificate_fixture("s1_max", kGrid);
  auto n = triangle_growths(cert, 30, kGrid);
  auto base = default_cost_from_certificate(cert, n, kGrid);
  auto doubled = make_cost("x2", PlusMode::Max, KLFn::scaled_shift(base.beta_hat, 2.0, {}, 0), base.gamma_hat,
                           base.delta_hat);
  EXPECT_EQ(check_compatibility(cert, doubled, n, kGrid, 30).B, 1.0);
  auto halved = make_cost("x05", PlusMode::Max, KLFn::scaled_shift(base.beta_hat, 0.5, {}, 0), base.gamma_hat,
                          base.delta_hat);
  auto w = check_compatibility(cert, halved, n, kGrid, 30);
  EXPECT_TRUE(w.passed);
  EXPECT_EQ(w.B, 2.0);
  EXPECT_NEAR(w.worst_ratio, 2.0, 1e-12);
}

TEST(DeriveBcd, ClosedForms) {
  const TriangleGrowth two = TriangleGrowth::constant(2.0, PlusMode::Max);
  auto max_cert = certificate_fixture("s1_max", kGrid);
  auto max_cost = default_cost_from_certificate(max_cert, GrowthSet::uniform(two));
  auto wmax = check_compatibility(max_cert, max_cost, GrowthSet::uniform(two), kGrid, 30);
  auto b1 = derive_bcd(max_cert, max_cost, wmax, 1.0);
  auto b2 = derive_bcd(max_cert, max_cost, wmax, 2.0);

  const TriangleGrowth one = TriangleGrowth::constant(1.0, PlusMode::Sum);
  auto sum_cert = certificate_fixture("s1_sum", kGrid);
  auto sum_cost = default_cost_from_certificate(sum_cert, GrowthSet::uniform(one));
  auto wsum = check_compatibility(sum_cert, sum_cost, GrowthSet::uniform(one), kGrid, 30);
  auto bs = derive_bcd(sum_cert, sum_cost, wsum, 1.0);

  for (double r : kGrid.points())
    for (std::int64_t s : {0, 1, 2, 7}) {
      const double ls = std::pow(0.5, static_cast<double>(s));
      EXPECT_DOUBLE_EQ(b1.b(r, s), 2.0 * ls * r);
      EXPECT_DOUBLE_EQ(b2.b(r, s), std::max(max_cert.beta(2 * r, s), 2.0 * max_cost.beta_hat(r, s)));
      EXPECT_DOUBLE_EQ(bs.b(r, s), 2.0 * sum_cert.beta(r, s));
    }
  EXPECT_TRUE(check_bound_envelopes(b2, max_cost, kGrid, 30).passed);
  EXPECT_TRUE(check_kl_invariants(b2.c, kGrid, 30).passed);
  EXPECT_THROW(derive_bcd(max_cert, max_cost, wmax, 0.5), DomainError);
  EXPECT_THROW(derive_bcd(sum_cert, max_cost, wmax, 1.0), DomainError);
}

TEST(RgasRhs, Examples) {
  auto d = linear_bounds(PlusMode::Max, 2, 2, 2);
  std::vector<double> zero(5, 0.0);
  EXPECT_DOUBLE_EQ(eval_rgas_rhs(d, 1.0, zero, zero, 3), 0.25);
  EXPECT_DOUBLE_EQ(eval_rgas_rhs(d, 1.3, zero, zero, 0), d.b(1.3, 0));
  std::vector<double> w{0.0, 1.0};
  std::vector<double> v{0.0, 0.0};
  EXPECT_DOUBLE_EQ(eval_rgas_rhs(d, 1.0, w, v, 2), 1.0);
  auto ds = linear_bounds(PlusMode::Sum, 2, 2, 2);
  EXPECT_DOUBLE_EQ(eval_rgas_rhs(ds, 1.0, w, v, 2), 1.5);
  EXPECT_THROW(eval_rgas_rhs(d, 1.0, w, v, 3), DomainError);
}

TEST(Falsification, CsvLayout) {
  auto cert = certificate_fixture("s4_sum", kGrid);
  auto rep = falsify_certificate(cert, make_plant("s4"), 3, 1, 10);
  std::ostringstream os;
  write_falsification_csv(os, rep);
  std::string s = os.str();
  EXPECT_EQ(s.rfind("pair_seed,worst_t,margin\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}
