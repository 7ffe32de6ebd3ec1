#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/estimator.hpp"

namespace mhe {

bool Box::contains(const Vec& z, double tol) const {
  return ((z - lower).array() >= -tol).all() && ((upper - z).array() >= -tol).all();
}

Vec Box::project(const Vec& z) const { return z.cwiseMax(lower).cwiseMin(upper); }

double Box::violation(const Vec& z) const { return (z - project(z)).norm(); }

const char* to_string(SolverConfig::Method method) {
  return method == SolverConfig::Method::GaussNewtonPenalty ? "gauss_newton_penalty" : "multistart_local_search";
}

SolverConfig::Method parse_solver_method(const std::string& text) {
  if (text == "gauss_newton_penalty") return SolverConfig::Method::GaussNewtonPenalty;
  if (text == "multistart_local_search") return SolverConfig::Method::MultiStartLocalSearch;
  throw ParseError("unknown solver method '" + text + "'");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::Diverged:
      return "diverged";
    case SolveStatus::PenaltyResidual:
      return "penalty_residual";
    case SolveStatus::Initial:
      return "initial";
  }
  return "?";
}

double eval_cost(const CostSpec& cost, const SystemModel& model, const Vec& prior, const Vec& chi0, const Seq& omega,
                 const Seq& nu, std::size_t K) {
  if (omega.size() != K || nu.size() != K) throw DomainError("eval_cost: sequence lengths differ from K");
  if (prior.size() != chi0.size()) throw DomainError("eval_cost: prior and chi0 dimensions differ");
  const auto k = static_cast<std::int64_t>(K);
  double acc = cost.beta_hat(model.state_metric(chi0, prior), k);
  for (std::size_t i = 0; i < K; ++i) {
    const std::int64_t tau = k - static_cast<std::int64_t>(i);
    double term = plus(cost.mode, cost.gamma_hat(model.process_metric.norm(omega[i]), tau),
                       cost.delta_hat(model.meas_metric.norm(nu[i]), tau));
    acc = plus(cost.mode, acc, term);
  }
  return acc;
}

double eval_cost(const CostSpec& cost, const Vec& prior, const Vec& chi0, const Seq& omega, const Seq& nu,
                 std::size_t K) {
  static const SystemModel euclidean;
  return eval_cost(cost, euclidean, prior, chi0, omega, nu, K);
}

Certification certify_suboptimality(const EstimationProblem& problem, const EstimateResult& result,
                                    const SolutionTuple& reference, double tol_cert) {
  const SystemModel& model = *problem.model;
  const std::size_t K = problem.horizon();
  if (reference.length() != K || reference.x.size() < K)
    throw DomainError("certify_suboptimality: reference window length differs from the problem");
  double scale = 1.0;
  for (const auto& x : reference.x) scale = std::max(scale, x.norm());
  auto check = verify_solution(model, reference, 1e-9 * scale);
  if (!check.passed)
    throw DomainError("certify_suboptimality: reference is not a solution (residual " +
                      std::to_string(check.worst_residual) + ")");
  for (std::size_t i = 0; i < K; ++i) {
    if ((reference.y[i] - problem.y[i]).norm() > 1e-12 * (1.0 + problem.y[i].norm()) ||
        (reference.u[i] - problem.u[i]).norm() > 1e-12 * (1.0 + problem.u[i].norm()))
      throw DomainError("certify_suboptimality: reference has different inputs or outputs");
  }
  Certification c;
  c.cost_reference = eval_cost(*problem.cost, model, problem.prior, reference.x.front(), reference.w, reference.v, K);
  c.cost_result = result.cost;
  c.ratio = c.cost_reference > 0.0 ? c.cost_result / c.cost_reference : (c.cost_result > 0.0 ? INFINITY : 0.0);
  c.passed = c.cost_result <= problem.A * c.cost_reference + tol_cert;
  return c;
}

}  // namespace mhe
