#include <algorithm>
#include <string>

#include "mhe/errors.hpp"
#include "mhe/estimator.hpp"

namespace mhe {

namespace {

EstimateResult initial_estimate(const Vec& prior0) {
  EstimateResult r;
  r.x = {prior0};
  r.status = SolveStatus::Initial;
  r.start_costs = {0.0};
  return r;
}

/// Previous window trajectory shifted to the new window and extended by one
/// undisturbed step.
Seq warm_from(const SystemModel& model, const EstimateResult& prev, std::size_t drop, const Vec& u_last,
              std::size_t K) {
  Seq warm(prev.x.begin() + static_cast<std::ptrdiff_t>(std::min(drop, prev.x.size() - 1)), prev.x.end());
  while (warm.size() < K + 1) warm.push_back(model.f(warm.back(), u_last, model.zero_w()));
  warm.resize(K + 1);
  return warm;
}

void check_data(const SystemModel& model, const SolutionTuple& data, const Vec& prior0) {
  if (data.y.size() != data.u.size()) throw DomainError("estimator data: u and y lengths differ");
  if (prior0.size() != model.state_dim) throw DomainError("estimator data: prior dimension mismatch");
}

}  // namespace

std::vector<EstimateResult> run_fie(const SystemModel& model, const CostSpec& cost, const Vec& prior0,
                                    const SolutionTuple& data, double A, const SolverConfig& solver,
                                    std::size_t T_max) {
  check_data(model, data, prior0);
  const std::size_t T = data.length();
  if (T > T_max)
    throw DomainError("full information horizon " + std::to_string(T) + " exceeds T_max = " + std::to_string(T_max));
  std::vector<EstimateResult> out;
  out.reserve(T + 1);
  out.push_back(initial_estimate(prior0));
  for (std::size_t t = 1; t <= T; ++t) {
    EstimationProblem p;
    p.model = &model;
    p.cost = &cost;
    p.prior = prior0;
    p.u.assign(data.u.begin(), data.u.begin() + static_cast<std::ptrdiff_t>(t));
    p.y.assign(data.y.begin(), data.y.begin() + static_cast<std::ptrdiff_t>(t));
    p.A = A;
    Seq warm = warm_from(model, out.back(), 0, p.u.back(), t);
    out.push_back(solve_window(p, solver, &warm));
  }
  return out;
}

std::vector<EstimateResult> run_mhe(const SystemModel& model, const CostSpec& cost, const Vec& prior0,
                                    const SolutionTuple& data, std::size_t K, double A, const SolverConfig& solver) {
  if (K < 1) throw DomainError("moving horizon length must be at least 1");
  check_data(model, data, prior0);
  const std::size_t T = data.length();
  std::vector<EstimateResult> out;
  out.reserve(T + 1);
  out.push_back(initial_estimate(prior0));
  for (std::size_t t = 1; t <= T; ++t) {
    const std::size_t len = std::min(t, K);
    const std::size_t begin = t - len;
    EstimationProblem p;
    p.model = &model;
    p.cost = &cost;
    p.prior = begin == 0 ? prior0 : out[begin].estimate();
    p.u.assign(data.u.begin() + static_cast<std::ptrdiff_t>(begin), data.u.begin() + static_cast<std::ptrdiff_t>(t));
    p.y.assign(data.y.begin() + static_cast<std::ptrdiff_t>(begin), data.y.begin() + static_cast<std::ptrdiff_t>(t));
    p.A = A;
    Seq warm = warm_from(model, out.back(), t > K ? 1 : 0, p.u.back(), len);
    out.push_back(solve_window(p, solver, &warm));
  }
  return out;
}

}  // namespace mhe
