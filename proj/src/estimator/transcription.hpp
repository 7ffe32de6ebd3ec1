#pragma once

#include <optional>
#include <vector>

#include "mhe/estimator.hpp"

namespace mhe::detail {

/// rho -> f(rho, s) with first and second derivatives.
struct Slice {
  const KLFn* f = nullptr;
  std::int64_t s = 0;
  std::optional<double> lin;

  double value(double rho) const { return lin ? *lin * rho : (*f)(rho, s); }
  void derivatives(double rho, double& d1, double& d2) const;
};

/// A residual vector with its Jacobian over a few decision variables.
struct ResidualEval {
  Vec r;
  Mat J;                  // r.size() x vars.size()
  std::vector<int> vars;  // global decision indices
};

/// Full-state transcription of one window. The decision vector is grouped in
/// per-time blocks [x(i), omega(i)?, nu(i)?], so every residual touches at
/// most two neighbouring blocks and the Gauss-Newton matrix is block
/// tridiagonal. Disturbances are eliminated through the model's inverse maps
/// when available and become decision variables (with penalized defects) otherwise.
class Transcription {
 public:
  explicit Transcription(const EstimationProblem& problem);

  int size() const { return nz_; }
  int num_blocks() const { return static_cast<int>(block_start_.size()); }
  int block_start(int b) const { return block_start_[static_cast<std::size_t>(b)]; }
  int block_size(int b) const;
  int block_of(int var) const { return block_of_[static_cast<std::size_t>(var)]; }
  bool has_penalties() const { return !w_elim_ || !v_elim_ || problem_.process_box || problem_.meas_box; }
  PlusMode mode() const { return problem_.cost->mode; }

  int num_terms() const { return static_cast<int>(slices_.size()); }
  const Slice& slice(int term) const { return slices_[static_cast<std::size_t>(term)]; }

  /// Cost residuals (prior, process, measurement) and penalty residuals
  /// (dynamics defects, output defects, box excess). Jacobians only when asked.
  void evaluate(const Vec& z, bool jacobian, std::vector<ResidualEval>& terms,
                std::vector<ResidualEval>& penalties) const;

  double exact_cost(const Vec& z) const;
  /// Largest constraint defect (zero when both disturbances are eliminated).
  double defect(const Vec& z) const;
  void project(Vec& z) const;

  Vec pack_states(const Seq& x) const;
  void unpack(const Vec& z, Seq& x, Seq& w, Seq& v) const;

  /// Prefix-stable initialization list of the requested length.
  std::vector<Vec> starts(const SolverConfig& config, const Seq* warm) const;

 private:
  int x_off(std::size_t i) const { return block_start_[i]; }
  int w_off(std::size_t i) const { return block_start_[i] + n_; }
  int v_off(std::size_t i) const { return block_start_[i] + n_ + (w_elim_ ? 0 : nw_); }
  Vec seg(const Vec& z, int off, int len) const { return z.segment(off, len); }

  void residual_w(const Vec& z, std::size_t i, bool jac, ResidualEval& out) const;
  void residual_v(const Vec& z, std::size_t i, bool jac, ResidualEval& out) const;

  const EstimationProblem& problem_;
  const SystemModel& model_;
  std::size_t K_;
  int n_, nw_, nv_;
  bool w_elim_, v_elim_;
  int nz_ = 0;
  std::vector<int> block_start_;
  std::vector<int> block_of_;
  std::vector<Slice> slices_;  // 0: prior, 1..K: process, K+1..2K: measurement
};

}  // namespace mhe::detail
