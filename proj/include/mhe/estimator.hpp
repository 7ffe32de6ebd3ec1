#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhe/certificate.hpp"
#include "mhe/system.hpp"

namespace mhe {

/// Componentwise bounds lower <= z <= upper.
struct Box {
  Vec lower, upper;

  bool contains(const Vec& z, double tol = 0.0) const;
  Vec project(const Vec& z) const;
  /// Euclidean distance from z to the box.
  double violation(const Vec& z) const;
};

/// One estimation window: find chi(0..K), omega, nu with chi(i+1) = f(chi(i), u(i), omega(i))
/// and y(i) = h(chi(i), u(i), nu(i)), minimizing the window cost relative to the prior.
struct EstimationProblem {
  const SystemModel* model = nullptr;
  const CostSpec* cost = nullptr;
  Vec prior;
  Seq u, y;
  double A = 1.0;
  std::optional<Box> state_box, process_box, meas_box;

  std::size_t horizon() const { return u.size(); }
};

struct SolverConfig {
  enum class Method { GaussNewtonPenalty, MultiStartLocalSearch };
  Method method = Method::GaussNewtonPenalty;
  /// Number of initializations tried; the list is prefix-stable, so raising
  /// the count can only lower the achieved cost.
  int multistart = 3;
  /// Iteration cap per continuation stage.
  int max_iterations = 100;
  /// Quadratic penalty weight on non-eliminated constraint defects: initial
  /// value, growth factor per stage, number of stages.
  double penalty_initial = 1e2;
  double penalty_growth = 10.0;
  int penalty_stages = 8;
  /// Relative stopping tolerance on the smoothed objective.
  double tol_objective = 1e-12;
  double tol_dyn = 1e-9;
  /// Compass-search polish on the exact cost for decision vectors up to this size.
  int polish_max_dim = 8;
  std::uint64_t seed = 0;
};

const char* to_string(SolverConfig::Method method);
SolverConfig::Method parse_solver_method(const std::string& text);

enum class SolveStatus { Converged, MaxIterations, Diverged, PenaltyResidual, Initial };
const char* to_string(SolveStatus status);

struct EstimateResult {
  /// Window trajectory chi(0..K); the last entry is the published estimate.
  Seq x;
  Seq w, v;
  double cost = 0.0;
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  /// Largest constraint defect of the returned trajectory.
  double residual = 0.0;
  int start_index = 0;
  std::vector<double> start_costs;

  const Vec& estimate() const { return x.back(); }
};

/// Window cost with Euclidean distances.
double eval_cost(const CostSpec& cost, const Vec& prior, const Vec& chi0, const Seq& omega, const Seq& nu,
                 std::size_t K);
/// Window cost with the model's metrics.
double eval_cost(const CostSpec& cost, const SystemModel& model, const Vec& prior, const Vec& chi0, const Seq& omega,
                 const Seq& nu, std::size_t K);

/// Minimizes the window cost. `warm` (length K + 1) is tried as an extra
/// initialization when given.
EstimateResult solve_window(const EstimationProblem& problem, const SolverConfig& solver, const Seq* warm = nullptr);

/// Full information estimation; entry t (t = 0..T, T = data length) solves the
/// window over data [0, t) with the fixed prior. Refuses horizons beyond T_max.
std::vector<EstimateResult> run_fie(const SystemModel& model, const CostSpec& cost, const Vec& prior0,
                                    const SolutionTuple& data, double A, const SolverConfig& solver,
                                    std::size_t T_max = 200);

/// Moving horizon estimation with window K and the filtering prior x_hat(t - K).
std::vector<EstimateResult> run_mhe(const SystemModel& model, const CostSpec& cost, const Vec& prior0,
                                    const SolutionTuple& data, std::size_t K, double A, const SolverConfig& solver);

struct Certification {
  bool passed = false;
  double ratio = 0.0;  // J(result) / J(reference); 0 when both vanish
  double cost_result = 0.0;
  double cost_reference = 0.0;
};

/// J(result) <= A J(reference) + tol_cert, where the reference is a feasible
/// solution of the same window (same u, y) evaluated against the same prior.
Certification certify_suboptimality(const EstimationProblem& problem, const EstimateResult& result,
                                    const SolutionTuple& reference, double tol_cert = 1e-9);

}  // namespace mhe
