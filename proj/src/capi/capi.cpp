#include <cstring>
#include <sstream>
#include <string>

#include "mhe/errors.hpp"
#include "mhe/harness.hpp"
#include "mhe/mhe.h"

struct mhe_k {
  mhe::ScalarKFn f;
};
struct mhe_kl {
  mhe::KLFn f;
};
struct mhe_config {
  mhe::ExperimentConfig c;
};
struct mhe_experiment {
  mhe::ExperimentOutcome o;
};

namespace {

thread_local std::string last_error;

template <class Fn>
mhe_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return MHE_OK;
  } catch (const mhe::ParseError& e) {
    last_error = e.what();
    return MHE_ERR_PARSE;
  } catch (const mhe::ConfigError& e) {
    last_error = e.what();
    return MHE_ERR_CONFIG;
  } catch (const mhe::CapabilityError& e) {
    last_error = e.what();
    return MHE_ERR_CAPABILITY;
  } catch (const mhe::InfeasibleError& e) {
    last_error = e.what();
    return MHE_ERR_INFEASIBLE;
  } catch (const mhe::DivergenceError& e) {
    last_error = e.what();
    return MHE_ERR_DIVERGENCE;
  } catch (const mhe::DomainError& e) {
    last_error = e.what();
    return MHE_ERR_DOMAIN;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MHE_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MHE_ERR_INTERNAL;
  }
}

mhe_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return MHE_ERR_NULL;
}

mhe_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || cap < s.size() + 1) {
    last_error = "buffer too small";
    return MHE_ERR_BUFFER;
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return MHE_OK;
}

}  // namespace

extern "C" {

const char* mhe_version(void) { return "1.0.0"; }

const char* mhe_last_error(void) { return last_error.c_str(); }

const char* mhe_status_name(mhe_status status) {
  switch (status) {
    case MHE_OK:
      return "ok";
    case MHE_ERR_NULL:
      return "null argument";
    case MHE_ERR_DOMAIN:
      return "domain error";
    case MHE_ERR_PARSE:
      return "parse error";
    case MHE_ERR_CONFIG:
      return "configuration error";
    case MHE_ERR_CAPABILITY:
      return "capability error";
    case MHE_ERR_INFEASIBLE:
      return "infeasible";
    case MHE_ERR_DIVERGENCE:
      return "divergence";
    case MHE_ERR_BUFFER:
      return "buffer too small";
    case MHE_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

mhe_status mhe_k_parse(const char* text, mhe_k** out) {
  if (!text || !out) return null_arg("text/out");
  return guarded([&] { *out = new mhe_k{mhe::parse_k(text)}; });
}

mhe_status mhe_k_eval(const mhe_k* f, double r, double* out) {
  if (!f || !out) return null_arg("f/out");
  return guarded([&] {
    if (!(r >= 0.0)) throw mhe::DomainError("K-function argument must be nonnegative");
    *out = f->f(r);
  });
}

mhe_status mhe_k_inverse(const mhe_k* f, double y, double* out) {
  if (!f || !out) return null_arg("f/out");
  return guarded([&] { *out = f->f.inverse_at(y); });
}

void mhe_k_free(mhe_k* f) { delete f; }

mhe_status mhe_kl_parse(const char* text, mhe_kl** out) {
  if (!text || !out) return null_arg("text/out");
  return guarded([&] { *out = new mhe_kl{mhe::parse_kl(text)}; });
}

mhe_status mhe_kl_eval(const mhe_kl* f, double r, int64_t s, double* out) {
  if (!f || !out) return null_arg("f/out");
  return guarded([&] { *out = f->f(r, s); });
}

mhe_status mhe_kl_to_string(const mhe_kl* f, char* buf, size_t cap, size_t* needed) {
  if (!f) return null_arg("f");
  return copy_out(f->f.to_string(), buf, cap, needed);
}

void mhe_kl_free(mhe_kl* f) { delete f; }

mhe_status mhe_config_load(const char* path, mhe_config** out) {
  if (!path || !out) return null_arg("path/out");
  return guarded([&] { *out = new mhe_config{mhe::load_config(path)}; });
}

mhe_status mhe_config_parse(const char* text, mhe_config** out) {
  if (!text || !out) return null_arg("text/out");
  return guarded([&] {
    std::istringstream is(text);
    *out = new mhe_config{mhe::parse_config(is)};
  });
}

mhe_status mhe_config_set(mhe_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return null_arg("config/key/value");
  return guarded([&] { mhe::set_config_value(config->c, key, value); });
}

mhe_status mhe_config_echo(const mhe_config* config, char* buf, size_t cap, size_t* needed) {
  if (!config) return null_arg("config");
  return copy_out(mhe::echo_config(config->c), buf, cap, needed);
}

void mhe_config_free(mhe_config* config) { delete config; }

mhe_status mhe_experiment_run(const mhe_config* config, mhe_verb verb, int jobs, mhe_experiment** out) {
  if (!config || !out) return null_arg("config/out");
  if (verb < MHE_VERB_ANALYZE || verb > MHE_VERB_PROBE) {
    last_error = "unknown verb";
    return MHE_ERR_DOMAIN;
  }
  return guarded([&] {
    auto v = static_cast<mhe::Verb>(static_cast<int>(verb));
    *out = new mhe_experiment{mhe::run_experiment(config->c, v, jobs)};
  });
}

int mhe_experiment_exit_code(const mhe_experiment* exp) { return exp ? exp->o.exit_code : -1; }

mhe_status mhe_experiment_summary(const mhe_experiment* exp, char* buf, size_t cap, size_t* needed) {
  if (!exp) return null_arg("exp");
  return copy_out(mhe::summary_text(exp->o), buf, cap, needed);
}

mhe_status mhe_experiment_report(const mhe_experiment* exp, char* buf, size_t cap, size_t* needed) {
  if (!exp) return null_arg("exp");
  std::string text;
  mhe_status st = guarded([&] { text = mhe::report_json(exp->o); });
  if (st != MHE_OK) return st;
  return copy_out(text, buf, cap, needed);
}

mhe_status mhe_experiment_write(const mhe_experiment* exp, const char* dir) {
  if (!exp || !dir) return null_arg("exp/dir");
  return guarded([&] { mhe::write_outputs(exp->o, dir); });
}

void mhe_experiment_free(mhe_experiment* exp) { delete exp; }

}  // extern "C"
