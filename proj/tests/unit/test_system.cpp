#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mhe/errors.hpp"
#include "mhe/plants.hpp"
#include "mhe/system.hpp"

using namespace mhe;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

Seq zeros(std::size_t T, int dim = 1) { return Seq(T, Vec::Zero(dim)); }

SystemModel doubling() {
  SystemModel m;
  m.id = "doubling";
  m.f = [](const Vec& x, const Vec&, const Vec& w) -> Vec { return 2.0 * x + w; };
  m.h = [](const Vec& x, const Vec&, const Vec& v) -> Vec { return x + v; };
  return m;
}

}  // namespace

TEST(Simulate, GeometricDecay) {
  auto m = make_plant("s1");
  auto sol = simulate(m, scalar(1.0), zeros(3), zeros(3), zeros(3), 3);
  ASSERT_EQ(sol.x.size(), 3u);
  const double expect[] = {1.0, 0.5, 0.25};
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(sol.x[t][0], expect[t]);
    EXPECT_EQ(sol.y[t][0], expect[t]);
  }
}

TEST(Simulate, EquilibriumStaysAtZero) {
  auto m = make_plant("s1");
  auto sol = simulate(m, scalar(0.0), zeros(5), zeros(5), zeros(5), 5);
  for (const auto& x : sol.x) EXPECT_EQ(x[0], 0.0);
  for (const auto& y : sol.y) EXPECT_EQ(y[0], 0.0);
}

TEST(Simulate, Doubling) {
  auto sol = simulate(doubling(), scalar(1.0), zeros(4), zeros(4), zeros(4), 4);
  const double expect[] = {1, 2, 4, 8};
  for (int t = 0; t < 4; ++t) EXPECT_EQ(sol.x[t][0], expect[t]);
}

TEST(Simulate, DivergenceCarriesTimeIndex) {
  auto m = doubling();
  m.f = [](const Vec& x, const Vec&, const Vec&) -> Vec { return x * 1e200; };
  try {
    simulate(m, scalar(1.0), zeros(5), zeros(5), zeros(5), 5);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.time_index(), 2u);
  }
}

TEST(VerifySolution, Examples) {
  auto m = make_plant("s1");
  auto sol = simulate(m, scalar(1.0), zeros(6), zeros(6), zeros(6), 6);
  auto ok = verify_solution(m, sol);
  EXPECT_TRUE(ok.passed);
  EXPECT_EQ(ok.worst_residual, 0.0);

  sol.x[1][0] += 1e-3;
  auto bad = verify_solution(m, sol, 1e-9);
  EXPECT_FALSE(bad.passed);
  EXPECT_NEAR(bad.worst_residual, 1e-3, 1e-12);

  EXPECT_TRUE(verify_solution(m, SolutionTuple{}).passed);
}

TEST(VerifySolution, RoundTripForEveryPlant) {
  for (const auto& id : plant_ids()) {
    auto m = make_plant(id);
    for (const auto& sc : {"uniform(0.1)", "decaying(1,0.8)", "impulse(5,1)"}) {
      auto spec = parse_scenario(sc, 10000);
      spec.seed = 3;
      auto [w, v] = generate_scenario(spec, {m.process_noise_dim, m.meas_noise_dim});
      Vec x0 = Vec::Constant(m.state_dim, 0.3);
      SolutionTuple sol;
      if (m.output_feedback) {
        sol = simulate_closed_loop(m, x0, w, v, 10000);
      } else {
        Seq u(10000, m.zero_input());
        for (std::size_t t = 0; t < u.size(); ++t) u[t].setConstant(0.2 * std::sin(0.5 * static_cast<double>(t)));
        sol = simulate(m, x0, u, w, v, 10000);
      }
      EXPECT_TRUE(verify_solution(m, sol, 1e-12).passed) << id << " " << sc;
    }
  }
}

TEST(Scenario, ZeroIsZero) {
  auto spec = parse_scenario("zero", 5);
  auto [w, v] = generate_scenario(spec, {1, 1});
  ASSERT_EQ(w.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(w[t].norm(), 0.0);
    EXPECT_EQ(v[t].norm(), 0.0);
  }
}

TEST(Scenario, EnvelopesHold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto dec = parse_scenario("decaying(1,0.5)", 40);
    dec.seed = seed;
    auto [w, v] = generate_scenario(dec, {2, 3});
    for (std::size_t t = 0; t < 40; ++t) {
      EXPECT_LE(w[t].norm(), std::pow(0.5, static_cast<double>(t)) * (1 + 1e-15));
      EXPECT_LE(v[t].norm(), std::pow(0.5, static_cast<double>(t)) * (1 + 1e-15));
    }
    auto uni = parse_scenario("uniform(0.1)", 40);
    uni.seed = seed;
    auto [wu, vu] = generate_scenario(uni, {2, 3});
    for (std::size_t t = 0; t < 40; ++t) {
      EXPECT_LE(wu[t].norm(), 0.1 * (1 + 1e-15));
      EXPECT_LE(vu[t].norm(), 0.1 * (1 + 1e-15));
    }
  }
}

TEST(Scenario, ImpulseHitsOneStep) {
  auto spec = parse_scenario("impulse(3,2)", 8);
  auto [w, v] = generate_scenario(spec, {1, 1});
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_EQ(w[t][0], t == 3 ? 2.0 : 0.0);
    EXPECT_EQ(v[t][0], 0.0);
  }
}

TEST(Scenario, DeterministicAndLabelled) {
  auto spec = parse_scenario("uniform(0.25)", 30);
  spec.seed = 9;
  auto a = generate_scenario(spec, {1, 1});
  auto b = generate_scenario(spec, {1, 1});
  for (std::size_t t = 0; t < 30; ++t) {
    EXPECT_EQ(a.first[t][0], b.first[t][0]);
    EXPECT_EQ(a.second[t][0], b.second[t][0]);
  }
  EXPECT_EQ(spec.label(), "uniform(0.25)");
  EXPECT_EQ(parse_scenario(spec.label(), 30).amplitude, 0.25);
  EXPECT_THROW(parse_scenario("gaussian(1)", 10), ParseError);
  EXPECT_THROW(parse_scenario("decaying(1,2)", 10), ParseError);
}

TEST(Simulate, BitIdenticalReruns) {
  auto m = make_plant("s4");
  auto spec = parse_scenario("uniform(0.1)", 200);
  spec.seed = 4;
  auto [w, v] = generate_scenario(spec, {m.process_noise_dim, m.meas_noise_dim});
  Seq u(200, m.zero_input());
  Vec x0 = Vec::Constant(m.state_dim, 0.5);
  auto a = simulate(m, x0, u, w, v, 200);
  auto b = simulate(m, x0, u, w, v, 200);
  std::ostringstream sa, sb;
  write_solution_csv(sa, a);
  write_solution_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(WindowOf, KeepsEndpointState) {
  auto m = make_plant("s1");
  auto sol = simulate(m, scalar(1.0), zeros(6), zeros(6), zeros(6), 6);
  sol.x.push_back(m.f(sol.x.back(), sol.u.back(), sol.w.back()));
  auto win = window_of(sol, 2, 3);
  EXPECT_EQ(win.length(), 3u);
  ASSERT_EQ(win.x.size(), 4u);
  EXPECT_EQ(win.x[0][0], 0.25);
  EXPECT_EQ(win.x[3][0], 0.03125);
}
