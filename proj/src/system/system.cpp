#include <cmath>
#include <ostream>

#include "mhe/errors.hpp"
#include "mhe/system.hpp"
#include "util/format.hpp"

namespace mhe {

namespace {

void check_dims(const Seq& s, int dim, std::size_t len, const char* what) {
  if (s.size() != len) throw DomainError(std::string(what) + ": sequence length mismatch");
  for (const auto& e : s)
    if (e.size() != dim) throw DomainError(std::string(what) + ": element dimension mismatch");
}

void check_finite(const Vec& x, std::size_t t) {
  if (!x.allFinite()) throw DivergenceError("simulation diverged at t = " + std::to_string(t), t);
}

}  // namespace

SolutionTuple simulate(const SystemModel& model, const Vec& x0, const Seq& u, const Seq& w, const Seq& v,
                       std::size_t T) {
  if (x0.size() != model.state_dim) throw DomainError("simulate: initial state dimension mismatch");
  check_dims(u, model.input_dim, T, "simulate u");
  check_dims(w, model.process_noise_dim, T, "simulate w");
  check_dims(v, model.meas_noise_dim, T, "simulate v");
  SolutionTuple sol;
  sol.u = u;
  sol.w = w;
  sol.v = v;
  sol.x.reserve(T);
  sol.y.reserve(T);
  Vec x = x0;
  for (std::size_t t = 0; t < T; ++t) {
    check_finite(x, t);
    sol.x.push_back(x);
    sol.y.push_back(model.h(x, u[t], v[t]));
    if (t + 1 < T) x = model.f(x, u[t], w[t]);
  }
  return sol;
}

SolutionTuple simulate_closed_loop(const SystemModel& model, const Vec& x0, const Seq& w, const Seq& v,
                                   std::size_t T) {
  if (x0.size() != model.state_dim) throw DomainError("simulate: initial state dimension mismatch");
  check_dims(w, model.process_noise_dim, T, "simulate w");
  check_dims(v, model.meas_noise_dim, T, "simulate v");
  SolutionTuple sol;
  sol.w = w;
  sol.v = v;
  Vec x = x0;
  const Vec u0 = model.zero_input();
  for (std::size_t t = 0; t < T; ++t) {
    check_finite(x, t);
    Vec u = model.output_feedback ? model.output_feedback(model.h(x, u0, v[t])) : u0;
    sol.x.push_back(x);
    sol.u.push_back(u);
    sol.y.push_back(model.h(x, u, v[t]));
    if (t + 1 < T) x = model.f(x, u, w[t]);
  }
  return sol;
}

VerifyResult verify_solution(const SystemModel& model, const SolutionTuple& tuple, double tol_dyn) {
  VerifyResult res;
  const std::size_t K = tuple.length();
  if (tuple.w.size() != K || tuple.v.size() != K || tuple.y.size() != K ||
      (tuple.x.size() != K && tuple.x.size() != K + 1))
    throw DomainError("verify_solution: sequence lengths differ");
  auto note = [&](double r, std::size_t t) {
    if (!(r <= res.worst_residual)) {
      res.worst_residual = r;
      res.worst_t = t;
    }
  };
  for (std::size_t t = 0; t < K; ++t) {
    note(model.output_metric(tuple.y[t], model.h(tuple.x[t], tuple.u[t], tuple.v[t])), t);
    if (t + 1 < tuple.x.size()) note(model.state_metric(tuple.x[t + 1], model.f(tuple.x[t], tuple.u[t], tuple.w[t])), t);
  }
  res.passed = res.worst_residual <= tol_dyn;
  return res;
}

SolutionTuple window_of(const SolutionTuple& tuple, std::size_t begin, std::size_t len) {
  if (begin + len > tuple.length()) throw DomainError("window_of: range exceeds tuple");
  auto slice = [&](const Seq& s, std::size_t n) { return Seq(s.begin() + begin, s.begin() + begin + n); };
  SolutionTuple out;
  out.u = slice(tuple.u, len);
  out.w = slice(tuple.w, len);
  out.v = slice(tuple.v, len);
  out.y = slice(tuple.y, len);
  out.x = slice(tuple.x, std::min(len + 1, tuple.x.size() - begin));
  return out;
}

void write_solution_csv(std::ostream& os, const SolutionTuple& tuple) {
  using util::format_number;
  const std::size_t K = tuple.length();
  auto dim = [](const Seq& s) { return s.empty() ? 0 : s.front().size(); };
  os << "t";
  auto header = [&](const char* name, const Seq& s) {
    for (Eigen::Index i = 0; i < dim(s); ++i) os << ',' << name << i + 1;
  };
  header("x", tuple.x);
  header("u", tuple.u);
  header("w", tuple.w);
  header("v", tuple.v);
  header("y", tuple.y);
  os << '\n';
  auto row = [&](const Seq& s, std::size_t t) {
    for (Eigen::Index i = 0; i < dim(s); ++i) os << ',' << format_number(s[t][i]);
  };
  for (std::size_t t = 0; t < K; ++t) {
    os << t;
    row(tuple.x, t);
    row(tuple.u, t);
    row(tuple.w, t);
    row(tuple.v, t);
    row(tuple.y, t);
    os << '\n';
  }
}

}  // namespace mhe
