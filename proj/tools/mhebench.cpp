// mhebench: command-line front end for experiments (analyze, run, sweep, probe).
#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "mhe/mhe.h"

namespace {

int fail(const char* what) {
  std::fprintf(stderr, "mhebench: %s: %s\n", what, mhe_last_error());
  return 2;
}

std::string fetch(mhe_status (*fn)(const mhe_experiment*, char*, size_t, size_t*), const mhe_experiment* exp) {
  size_t needed = 0;
  fn(exp, nullptr, 0, &needed);
  std::vector<char> buf(needed);
  if (fn(exp, buf.data(), buf.size(), &needed) != MHE_OK) return {};
  return std::string(buf.data());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimator stability experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::string seed;
  int jobs = 1;
  const std::vector<std::pair<const char*, mhe_verb>> verbs = {
      {"analyze", MHE_VERB_ANALYZE}, {"run", MHE_VERB_RUN}, {"sweep", MHE_VERB_SWEEP}, {"probe", MHE_VERB_PROBE}};
  const char* help[] = {"certificate, cost and contraction analysis only", "single experiment",
                        "horizon sweep with bar bounds", "deviant-output probe"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    auto* sub = app.add_subcommand(verbs[i].first, help[i]);
    sub->add_option("--config", config_path, "experiment configuration (INI)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "base seed (overrides experiment.seed)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  mhe_verb verb = MHE_VERB_RUN;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) verb = verbs[i].second;

  mhe_config* cfg = nullptr;
  if (mhe_config_load(config_path.c_str(), &cfg) != MHE_OK) return fail("configuration");
  if (!seed.empty() && mhe_config_set(cfg, "experiment.seed", seed.c_str()) != MHE_OK) {
    mhe_config_free(cfg);
    return fail("--seed");
  }
  mhe_experiment* exp = nullptr;
  mhe_status st = mhe_experiment_run(cfg, verb, jobs, &exp);
  mhe_config_free(cfg);
  if (st != MHE_OK) return fail("experiment");

  std::fputs(fetch(mhe_experiment_summary, exp).c_str(), stdout);
  if (!out_dir.empty() && mhe_experiment_write(exp, out_dir.c_str()) != MHE_OK) {
    mhe_experiment_free(exp);
    return fail("writing outputs");
  }
  int code = mhe_experiment_exit_code(exp);
  mhe_experiment_free(exp);
  return code;
}
