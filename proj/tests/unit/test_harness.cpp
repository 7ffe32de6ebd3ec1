#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mhe/errors.hpp"
#include "mhe/harness.hpp"

using namespace mhe;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& text = "") {
  std::istringstream is("[experiment]\nplant = s1\nT = 20\n" + text + "[grid]\nper_decade = 12\ns_max = 60\n");
  auto c = parse_config(is);
  c.falsification_pairs = 20;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Config, ParseSetAndEcho) {
  std::istringstream is("[experiment]\nplant = s2\nmode = sum\nscenarios = zero uniform(0.1)\n[solver]\nmultistart = 5\n");
  auto c = parse_config(is);
  EXPECT_EQ(c.plant, "s2");
  EXPECT_EQ(c.mode, PlusMode::Sum);
  ASSERT_EQ(c.scenarios.size(), 2u);
  EXPECT_EQ(c.scenarios[1], "uniform(0.1)");
  EXPECT_EQ(c.solver.multistart, 5);
  EXPECT_EQ(c.certificate_id(), "s2_sum");

  set_config_value(c, "experiment.seed", "17");
  EXPECT_EQ(c.seed, 17u);
  std::istringstream again(echo_config(c));
  auto d = parse_config(again);
  EXPECT_EQ(echo_config(d), echo_config(c));

  EXPECT_THROW(set_config_value(c, "experiment.colour", "red"), ConfigError);
  EXPECT_THROW(set_config_value(c, "experiment.T", "-4"), ConfigError);
  std::istringstream bad("[experiment]\nestimator = kalman\n");
  EXPECT_THROW(parse_config(bad), ConfigError);
}

TEST(Experiment, ZeroNoiseFieRunPasses) {
  auto c = small_config("seeds = 2\n");
  auto out = run_experiment(c, Verb::Run);
  ASSERT_EQ(out.exit_code, 0) << out.message;
  ASSERT_EQ(out.cells.size(), 2u);
  for (const auto& cell : out.cells) {
    EXPECT_EQ(cell.rows.size(), c.T + 1);
    EXPECT_GE(cell.min_margin, 0.0);
    EXPECT_GT(cell.certified_steps, 0u);
  }
}

TEST(Experiment, HorizonOneFailsAnalysis) {
  auto c = small_config("estimator = mhe\nK = 1\n");
  auto out = run_experiment(c, Verb::Run);
  EXPECT_EQ(out.exit_code, 2);
  EXPECT_FALSE(out.analysis.passed);
  EXPECT_FALSE(out.message.empty());
  EXPECT_TRUE(out.cells.empty());
}

TEST(Experiment, MixedModesRejected) {
  auto c = small_config("certificate = s1_sum\n");
  EXPECT_THROW(analyze(c, Verb::Run), ConfigError);
  EXPECT_EQ(run_experiment(c, Verb::Run).exit_code, 2);
}

TEST(Experiment, SweepStartsAtSmallestContractiveHorizon) {
  auto c = small_config("estimator = mhe\nK_min = 1\nK_max = 6\n");
  c.plant = "s2";
  auto a = analyze(c, Verb::Sweep);
  ASSERT_TRUE(a.passed) << a.failure;
  ASSERT_TRUE(a.K0);
  EXPECT_GE(*a.K0, 2u);
  for (std::size_t K = 1; K < *a.K0; ++K) EXPECT_FALSE(a.contraction.at(K).passed) << K;
  for (std::size_t K = *a.K0; K <= 6; ++K) EXPECT_TRUE(a.contraction.at(K).passed) << K;
  ASSERT_TRUE(a.bar);
  EXPECT_TRUE(a.bar->monotone.passed);
}

TEST(Experiment, ProbeMarginsStayAboveTolerance) {
  auto c = small_config("scenarios = uniform(0.1)\nseeds = 2\n");
  auto out = run_experiment(c, Verb::Probe);
  ASSERT_EQ(out.exit_code, 0) << out.message;
  for (const auto& cell : out.cells) {
    ASSERT_TRUE(cell.probe);
    EXPECT_GE(cell.probe->worst_margin, -c.tol_cert);
  }
}

TEST(Experiment, OutputsAreDeterministic) {
  auto c = small_config("estimator = mhe\nK = 3\nscenarios = uniform(0.1) impulse\nseeds = 2\n");
  const fs::path base = fs::temp_directory_path() / "mhe_harness_det";
  fs::remove_all(base);
  write_outputs(run_experiment(c, Verb::Run, 3), (base / "a").string());
  write_outputs(run_experiment(c, Verb::Run, 1), (base / "b").string());
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), base / "a");
    ASSERT_TRUE(fs::exists(base / "b" / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(base / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_GE(files, 6u);
  EXPECT_TRUE(fs::exists(base / "a" / "report.json"));
  fs::remove_all(base);
}
