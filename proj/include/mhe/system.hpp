#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mhe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Seq = std::vector<Vec>;

/// Distance evaluator for one space. The default is Euclidean.
struct Metric {
  std::function<double(const Vec&, const Vec&)> fn;

  double operator()(const Vec& a, const Vec& b) const { return fn ? fn(a, b) : (a - b).norm(); }
  double norm(const Vec& a) const { return fn ? fn(a, Vec::Zero(a.size())) : a.norm(); }
  bool euclidean() const { return !fn; }
};

/// x+ = f(x, u, w), y = h(x, u, v) on real vector spaces.
struct SystemModel {
  std::string id;
  int state_dim = 1;
  int input_dim = 1;
  int process_noise_dim = 1;
  int meas_noise_dim = 1;
  int output_dim = 1;

  std::function<Vec(const Vec& x, const Vec& u, const Vec& w)> f;
  std::function<Vec(const Vec& x, const Vec& u, const Vec& v)> h;

  // Optional capabilities. When present the estimator eliminates the
  // corresponding disturbance instead of treating it as a decision variable.
  /// w such that f(x, u, w) = x_next.
  std::function<Vec(const Vec& x, const Vec& u, const Vec& x_next)> w_from_transition;
  /// v such that h(x, u, v) = y.
  std::function<Vec(const Vec& x, const Vec& u, const Vec& y)> v_from_output;
  /// Derivatives of w_from_transition with respect to x and x_next.
  std::function<void(const Vec& x, const Vec& u, const Vec& x_next, Mat& d_x, Mat& d_next)> w_from_transition_jacobian;
  /// Derivative of v_from_output with respect to x.
  std::function<void(const Vec& x, const Vec& u, const Vec& y, Mat& d_x)> v_from_output_jacobian;
  /// A state consistent with (or close to) a single measurement; used to seed solves.
  std::function<Vec(const Vec& u, const Vec& y)> state_from_output;
  /// Known output feedback u(t) = k(y(t)) applied during closed-loop simulation.
  /// Evaluated on h(x, 0, v), which is y(t) whenever h does not depend on u.
  std::function<Vec(const Vec& y)> output_feedback;

  Metric state_metric, input_metric, process_metric, meas_metric, output_metric;

  Vec zero_input() const { return Vec::Zero(input_dim); }
  Vec zero_w() const { return Vec::Zero(process_noise_dim); }
  Vec zero_v() const { return Vec::Zero(meas_noise_dim); }
};

/// Sequences satisfying the dynamics. x has either the same length as the
/// other sequences or one more element (a trailing endpoint state).
struct SolutionTuple {
  Seq x, u, w, v, y;

  std::size_t length() const { return u.size(); }
};

struct VerifyResult {
  bool passed = true;
  double worst_residual = 0.0;
  std::size_t worst_t = 0;
};

/// Open-loop forward iteration of T steps; x has length T.
SolutionTuple simulate(const SystemModel& model, const Vec& x0, const Seq& u, const Seq& w, const Seq& v,
                       std::size_t T);

/// Forward iteration where u(t) comes from the model's output feedback (zero if none).
SolutionTuple simulate_closed_loop(const SystemModel& model, const Vec& x0, const Seq& w, const Seq& v,
                                   std::size_t T);

VerifyResult verify_solution(const SystemModel& model, const SolutionTuple& tuple, double tol_dyn = 1e-9);

/// Slice [begin, begin + len) of all sequences; x keeps one extra state when available.
SolutionTuple window_of(const SolutionTuple& tuple, std::size_t begin, std::size_t len);

struct DisturbanceScenario {
  enum class Kind { Zero, BoundedUniform, DecayingGeometric, Impulse };
  Kind kind = Kind::Zero;
  double amplitude = 0.0;  // BoundedUniform, DecayingGeometric
  double rate = 0.0;       // DecayingGeometric
  std::size_t time = 0;    // Impulse
  double magnitude = 0.0;  // Impulse
  std::uint64_t seed = 0;
  std::size_t horizon = 0;

  std::string label() const;
};

DisturbanceScenario parse_scenario(const std::string& text, std::size_t horizon);

struct DisturbanceDims {
  int process_noise_dim = 1;
  int meas_noise_dim = 1;
};

/// Deterministic (w, v) sequences of length spec.horizon.
std::pair<Seq, Seq> generate_scenario(const DisturbanceScenario& spec, const DisturbanceDims& dims);

/// Columns: t, x..., u..., w..., v..., y...
void write_solution_csv(std::ostream& os, const SolutionTuple& tuple);

}  // namespace mhe
