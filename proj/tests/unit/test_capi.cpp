#include <gtest/gtest.h>

#include <string>

#include "mhe/mhe.h"

namespace {

std::string echo(const mhe_config* c) {
  size_t needed = 0;
  EXPECT_EQ(mhe_config_echo(c, nullptr, 0, &needed), MHE_ERR_BUFFER);
  std::string buf(needed, '\0');
  EXPECT_EQ(mhe_config_echo(c, buf.data(), buf.size(), &needed), MHE_OK);
  buf.resize(needed - 1);
  return buf;
}

}  // namespace

TEST(CApi, KFunctions) {
  mhe_k* f = nullptr;
  ASSERT_EQ(mhe_k_parse("linear(2)", &f), MHE_OK);
  double y = 0;
  EXPECT_EQ(mhe_k_eval(f, 1.5, &y), MHE_OK);
  EXPECT_EQ(y, 3.0);
  EXPECT_EQ(mhe_k_inverse(f, 3.0, &y), MHE_OK);
  EXPECT_EQ(y, 1.5);
  EXPECT_EQ(mhe_k_eval(f, -1.0, &y), MHE_ERR_DOMAIN);
  EXPECT_STRNE(mhe_last_error(), "");
  mhe_k_free(f);

  ASSERT_EQ(mhe_k_parse("section(table([0,1,2],[0,1,1]),0)", &f), MHE_OK);
  EXPECT_EQ(mhe_k_inverse(f, 5.0, &y), MHE_ERR_CAPABILITY);
  mhe_k_free(f);

  EXPECT_EQ(mhe_k_parse("linear(", &f), MHE_ERR_PARSE);
  EXPECT_EQ(mhe_k_parse(nullptr, &f), MHE_ERR_NULL);
  EXPECT_STREQ(mhe_status_name(MHE_ERR_PARSE), "parse error");
}

TEST(CApi, KlFunctionsAndBuffers) {
  mhe_kl* f = nullptr;
  ASSERT_EQ(mhe_kl_parse("geom(2,1,0.5)", &f), MHE_OK);
  double y = 0;
  EXPECT_EQ(mhe_kl_eval(f, 1.0, 3, &y), MHE_OK);
  EXPECT_EQ(y, 0.25);
  EXPECT_EQ(mhe_kl_eval(f, 1.0, -1, &y), MHE_ERR_DOMAIN);

  size_t needed = 0;
  char tiny[4];
  EXPECT_EQ(mhe_kl_to_string(f, tiny, sizeof tiny, &needed), MHE_ERR_BUFFER);
  std::string buf(needed, '\0');
  ASSERT_EQ(mhe_kl_to_string(f, buf.data(), buf.size(), &needed), MHE_OK);
  EXPECT_STREQ(buf.c_str(), "geom(2,1,0.5)");
  mhe_kl_free(f);
  mhe_kl_free(nullptr);
}

TEST(CApi, ConfigRoundTrip) {
  mhe_config* c = nullptr;
  ASSERT_EQ(mhe_config_parse("[experiment]\nplant = s3\n", &c), MHE_OK);
  EXPECT_EQ(mhe_config_set(c, "experiment.seed", "5"), MHE_OK);
  EXPECT_EQ(mhe_config_set(c, "nope.key", "1"), MHE_ERR_CONFIG);
  const std::string text = echo(c);
  EXPECT_NE(text.find("plant = s3"), std::string::npos);
  EXPECT_NE(text.find("seed = 5"), std::string::npos);
  mhe_config* d = nullptr;
  ASSERT_EQ(mhe_config_parse(text.c_str(), &d), MHE_OK);
  EXPECT_EQ(echo(d), text);
  mhe_config_free(c);
  mhe_config_free(d);
  EXPECT_EQ(mhe_config_load("/nonexistent/file.ini", &c), MHE_ERR_CONFIG);
}

TEST(CApi, ExperimentExitCodes) {
  mhe_config* c = nullptr;
  ASSERT_EQ(mhe_config_parse("[experiment]\nplant = s1\nT = 15\n[grid]\nper_decade = 12\ns_max = 40\n"
                             "[falsification]\npairs = 10\n",
                             &c),
            MHE_OK);
  mhe_experiment* e = nullptr;
  ASSERT_EQ(mhe_experiment_run(c, MHE_VERB_RUN, 1, &e), MHE_OK);
  EXPECT_EQ(mhe_experiment_exit_code(e), 0);
  size_t needed = 0;
  EXPECT_EQ(mhe_experiment_report(e, nullptr, 0, &needed), MHE_ERR_BUFFER);
  std::string report(needed, '\0');
  ASSERT_EQ(mhe_experiment_report(e, report.data(), report.size(), &needed), MHE_OK);
  EXPECT_EQ(report.front(), '{');
  EXPECT_EQ(mhe_experiment_summary(e, nullptr, 0, &needed), MHE_ERR_BUFFER);
  EXPECT_GT(needed, 1u);
  mhe_experiment_free(e);

  ASSERT_EQ(mhe_config_set(c, "experiment.estimator", "mhe"), MHE_OK);
  ASSERT_EQ(mhe_config_set(c, "experiment.K", "1"), MHE_OK);
  ASSERT_EQ(mhe_experiment_run(c, MHE_VERB_ANALYZE, 1, &e), MHE_OK);
  EXPECT_EQ(mhe_experiment_exit_code(e), 2);
  mhe_experiment_free(e);
  mhe_config_free(c);
}

TEST(CApi, NullArguments) {
  double y = 0;
  EXPECT_EQ(mhe_k_eval(nullptr, 1.0, &y), MHE_ERR_NULL);
  EXPECT_EQ(mhe_kl_eval(nullptr, 1.0, 0, &y), MHE_ERR_NULL);
  EXPECT_EQ(mhe_config_parse(nullptr, nullptr), MHE_ERR_NULL);
  EXPECT_EQ(mhe_experiment_run(nullptr, MHE_VERB_RUN, 1, nullptr), MHE_ERR_NULL);
  EXPECT_EQ(mhe_experiment_exit_code(nullptr), -1);
  EXPECT_NE(mhe_version(), nullptr);
}
