#include <cmath>
#include <limits>

#include "estimator/transcription.hpp"
#include "mhe/errors.hpp"

namespace mhe {

using detail::ResidualEval;
using detail::Slice;
using detail::Transcription;

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();
/// Smoothing continuation: eps shrinks by 100 and the hinge weight grows by 100 per stage.
constexpr int kSmoothingStages = 4;
/// Damping increases tried before a stage is declared stalled.
constexpr int kMaxRejections = 10;

/// sqrt(rho^2 + eps^2) - eps in a cancellation-free form.
double smooth_norm(double rho, double eps) {
  if (eps == 0.0) return rho;
  return rho * rho / (std::sqrt(rho * rho + eps * eps) + eps);
}

struct Stage {
  double eps = 0.0;  // norm smoothing
  double mu = 0.0;   // epigraph hinge weight (Max mode)
  double rho = 0.0;  // constraint defect weight
};

/// Gauss-Newton / Levenberg-Marquardt on the smoothed window objective
///   Sum: sum_i g_i(psi(r_i)) + rho/2 |p|^2
///   Max: s + mu/2 sum_i (g_i(psi(r_i)) - s)_+^2 + rho/2 |p|^2
/// with a block tridiagonal Newton matrix bordered by the epigraph variable s.
class Engine {
 public:
  explicit Engine(const Transcription& tr) : tr_(tr), max_mode_(tr.mode() == PlusMode::Max) {
    const int nb = tr.num_blocks();
    D_.resize(static_cast<std::size_t>(nb));
    L_.resize(static_cast<std::size_t>(std::max(nb - 1, 0)));
    g_.resize(static_cast<std::size_t>(nb));
    border_.resize(static_cast<std::size_t>(nb));
  }

  double objective(const Vec& z, double s, const Stage& st) {
    tr_.evaluate(z, false, terms_, pens_);
    double acc = max_mode_ ? s : 0.0;
    for (int i = 0; i < tr_.num_terms(); ++i) {
      double phi = tr_.slice(i).value(smooth_norm(terms_[static_cast<std::size_t>(i)].r.norm(), st.eps));
      if (max_mode_) {
        double q = phi - s;
        if (q > 0.0) acc += 0.5 * st.mu * q * q;
      } else {
        acc += phi;
      }
    }
    for (const auto& p : pens_) acc += 0.5 * st.rho * p.r.squaredNorm();
    return std::isfinite(acc) ? acc : std::numeric_limits<double>::infinity();
  }

  double max_term(const Vec& z, double eps) {
    tr_.evaluate(z, false, terms_, pens_);
    double m = 0.0;
    for (int i = 0; i < tr_.num_terms(); ++i)
      m = std::max(m, tr_.slice(i).value(smooth_norm(terms_[static_cast<std::size_t>(i)].r.norm(), eps)));
    return m;
  }

  double residual_scale(const Vec& z) {
    tr_.evaluate(z, false, terms_, pens_);
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, t.r.norm());
    return m;
  }

  void assemble(const Vec& z, double s, const Stage& st) {
    tr_.evaluate(z, true, terms_, pens_);
    for (int b = 0; b < tr_.num_blocks(); ++b) {
      auto i = static_cast<std::size_t>(b);
      const int sb = tr_.block_size(b);
      D_[i].setZero(sb, sb);
      g_[i].setZero(sb);
      border_[i].setZero(sb);
      if (b + 1 < tr_.num_blocks()) L_[i].setZero(tr_.block_size(b + 1), sb);
    }
    corner_ = 0.0;
    gs_ = max_mode_ ? 1.0 : 0.0;
    Vec gr, gv;
    Mat Hr, Hv;
    for (int k = 0; k < tr_.num_terms(); ++k) {
      const auto& t = terms_[static_cast<std::size_t>(k)];
      const Slice& sl = tr_.slice(k);
      const double rho = t.r.norm();
      const double root = std::sqrt(rho * rho + st.eps * st.eps);
      const double psi = smooth_norm(rho, st.eps);
      double d1 = 0.0, d2 = 0.0;
      sl.derivatives(psi, d1, d2);
      d2 = std::max(d2, 0.0);
      const double phi = sl.value(psi);
      const Eigen::Index m = t.r.size();
      if (root > 0.0) {
        Vec u = t.r / root;
        gr = d1 * u;
        Hr = d2 * u * u.transpose() + (d1 / root) * (Mat::Identity(m, m) - u * u.transpose());
      } else {
        gr.setZero(m);
        Hr.setZero(m, m);
      }
      gv = t.J.transpose() * gr;
      Hv = t.J.transpose() * Hr * t.J;
      if (!max_mode_) {
        add(t.vars, gv, Hv);
        continue;
      }
      const double q = phi - s;
      if (q < 0.0) continue;
      Hv = st.mu * (gv * gv.transpose() + q * Hv);
      gv *= st.mu * q;
      add(t.vars, gv, Hv);
      gs_ -= st.mu * q;
      corner_ += st.mu;
      const Vec col = -st.mu * (t.J.transpose() * gr);
      for (std::size_t a = 0; a < t.vars.size(); ++a) {
        int var = t.vars[a];
        int b = tr_.block_of(var);
        border_[static_cast<std::size_t>(b)][var - tr_.block_start(b)] += col[static_cast<Eigen::Index>(a)];
      }
    }
    for (const auto& p : pens_) {
      gv = st.rho * (p.J.transpose() * p.r);
      Hv = st.rho * (p.J.transpose() * p.J);
      add(p.vars, gv, Hv);
    }
  }

  /// Solve the damped Newton system; false if a pivot block is not positive definite.
  bool solve(double lambda, Vec& dz, double& ds) {
    const int nb = tr_.num_blocks();
    const int ncol = max_mode_ ? 2 : 1;
    fac_.resize(static_cast<std::size_t>(nb));
    Y_.resize(static_cast<std::size_t>(nb));
    double max_diag = 0.0;
    for (const auto& d : D_) max_diag = std::max(max_diag, d.diagonal().maxCoeff());
    const double floor = 1e-14 * std::max(max_diag, 1e-300);
    for (int bi = 0; bi < nb; ++bi) {
      auto b = static_cast<std::size_t>(bi);
      S_ = D_[b];
      S_.diagonal().array() += lambda * D_[b].diagonal().array() + (lambda * floor + floor);
      Mat& R = Y_[b];
      R.resize(g_[b].size(), ncol);
      R.col(0) = -g_[b];
      if (max_mode_) R.col(1) = border_[b];
      if (bi > 0) {
        const Mat& L = L_[b - 1];
        tmp_ = L.transpose();
        fac_[b - 1].solveInPlace(tmp_);
        S_ -= L.lazyProduct(tmp_);
        tmp_ = Y_[b - 1];
        fac_[b - 1].solveInPlace(tmp_);
        R -= L.lazyProduct(tmp_);
      }
      fac_[b].compute(S_);
      if (fac_[b].info() != Eigen::Success) return false;
    }
    // Back substitution overwrites Y_ with the block solutions.
    for (int bi = nb - 1; bi >= 0; --bi) {
      auto b = static_cast<std::size_t>(bi);
      if (bi + 1 < nb) Y_[b] -= L_[b].transpose().lazyProduct(Y_[b + 1]);
      fac_[b].solveInPlace(Y_[b]);
    }
    dz.resize(tr_.size());
    ds = 0.0;
    if (max_mode_) {
      double btp = 0.0, btq = 0.0;
      for (int bi = 0; bi < nb; ++bi) {
        auto b = static_cast<std::size_t>(bi);
        btp += border_[b].dot(Y_[b].col(0));
        btq += border_[b].dot(Y_[b].col(1));
      }
      const double c = corner_ * (1.0 + lambda) + lambda * floor + floor;
      const double denom = c - btq;
      if (!(denom > 0.0)) return false;
      ds = (-gs_ - btp) / denom;
      for (int bi = 0; bi < nb; ++bi) {
        auto b = static_cast<std::size_t>(bi);
        dz.segment(tr_.block_start(bi), Y_[b].rows()) = Y_[b].col(0) - Y_[b].col(1) * ds;
      }
    } else {
      for (int bi = 0; bi < nb; ++bi) {
        auto b = static_cast<std::size_t>(bi);
        dz.segment(tr_.block_start(bi), Y_[b].rows()) = Y_[b].col(0);
      }
    }
    return dz.allFinite() && std::isfinite(ds);
  }

 private:
  void add(const std::vector<int>& vars, const Vec& gv, const Mat& Hv) {
    for (std::size_t a = 0; a < vars.size(); ++a) {
      const int va = vars[a];
      const int ba = tr_.block_of(va);
      const int la = va - tr_.block_start(ba);
      g_[static_cast<std::size_t>(ba)][la] += gv[static_cast<Eigen::Index>(a)];
      for (std::size_t c = 0; c < vars.size(); ++c) {
        const int vb = vars[c];
        const int bb = tr_.block_of(vb);
        const int lb = vb - tr_.block_start(bb);
        const double h = Hv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        if (ba == bb)
          D_[static_cast<std::size_t>(ba)](la, lb) += h;
        else if (ba == bb + 1)
          L_[static_cast<std::size_t>(bb)](la, lb) += h;
      }
    }
  }

  const Transcription& tr_;
  bool max_mode_;
  std::vector<ResidualEval> terms_, pens_;
  std::vector<Mat> D_, L_;
  std::vector<Vec> g_, border_;
  double corner_ = 0.0, gs_ = 0.0;
  std::vector<Eigen::LLT<Mat>> fac_;
  std::vector<Mat> Y_;
  Mat S_, tmp_;
};

struct LocalResult {
  Vec z;
  double cost = std::numeric_limits<double>::infinity();
  double defect = 0.0;
  int iterations = 0;
  bool hit_cap = false;
  bool finite = true;
};

/// Exact cost plus an exact penalty on constraint defects; used to compare
/// iterates when disturbances are decision variables.
double merit(const Transcription& tr, const Vec& z, double& cost, double& defect) {
  cost = tr.exact_cost(z);
  defect = tr.defect(z);
  return cost + 1e8 * defect;
}

LocalResult gauss_newton(const Transcription& tr, Vec z, const SolverConfig& cfg) {
  LocalResult best;
  best.z = z;
  double best_merit = merit(tr, z, best.cost, best.defect);
  if (!std::isfinite(best_merit)) {
    best.finite = false;
    return best;
  }
  if (best.cost == 0.0 && best.defect == 0.0) return best;

  Engine eng(tr);
  const bool max_mode = tr.mode() == PlusMode::Max;
  const int stages = tr.has_penalties() ? std::max(kSmoothingStages, cfg.penalty_stages) : kSmoothingStages;
  double rho = cfg.penalty_initial;
  for (int k = 0; k < stages; ++k) {
    double jref = std::max(tr.exact_cost(z), 1e-300);
    double rscale = std::max(eng.residual_scale(z), 1e-300);
    Stage st;
    st.eps = rscale * 1e-2 * std::pow(1e-2, k);
    st.mu = std::pow(10.0, 1 + 2 * k) / jref;
    st.rho = rho * jref / (rscale * rscale);
    double s = max_mode ? eng.max_term(z, st.eps) : 0.0;
    double F = eng.objective(z, s, st);
    double lambda = 1e-4;
    bool capped = true;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      ++best.iterations;
      eng.assemble(z, s, st);
      bool accepted = false;
      double Fn = F;
      Vec zn;
      double sn = s;
      double step = 0.0;
      for (int trial = 0; trial < kMaxRejections && lambda < 1e16; ++trial) {
        Vec dz;
        double ds = 0.0;
        if (eng.solve(lambda, dz, ds)) {
          step = dz.lpNorm<Eigen::Infinity>();
          zn = z + dz;
          tr.project(zn);
          sn = s + ds;
          Fn = eng.objective(zn, sn, st);
          if (Fn < F) {
            accepted = true;
            break;
          }
        }
        lambda *= 4.0;
      }
      if (!accepted) {
        capped = false;
        break;
      }
      lambda = std::max(lambda / 3.0, 1e-12);
      const double drop = F - Fn;
      z = std::move(zn);
      s = sn;
      F = Fn;
      if (drop <= cfg.tol_objective * std::abs(F) + kTiny || step <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
        capped = false;
        break;
      }
    }
    best.hit_cap = capped;
    double c = 0.0, d = 0.0;
    double m = merit(tr, z, c, d);
    if (std::isfinite(m) && m < best_merit) {
      best_merit = m;
      best.z = z;
      best.cost = c;
      best.defect = d;
    }
    if (best.cost == 0.0 && best.defect == 0.0) break;
    rho *= cfg.penalty_growth;
  }
  return best;
}

/// Opportunistic compass search on the merit function.
void compass(const Transcription& tr, LocalResult& res, int max_evals) {
  Vec z = res.z;
  double cost = res.cost, defect = res.defect;
  double m = cost + 1e8 * defect;
  double scale = 1.0 + z.lpNorm<Eigen::Infinity>();
  double h = 1e-2 * scale;
  int evals = 0;
  while (h > 1e-15 * scale && evals < max_evals) {
    bool improved = false;
    for (Eigen::Index j = 0; j < z.size() && !improved; ++j) {
      for (double sign : {1.0, -1.0}) {
        Vec trial = z;
        trial[j] += sign * h;
        tr.project(trial);
        double c = 0.0, d = 0.0;
        double mt = merit(tr, trial, c, d);
        ++evals;
        if (mt < m) {
          z = std::move(trial);
          m = mt;
          cost = c;
          defect = d;
          improved = true;
          break;
        }
      }
    }
    if (improved)
      h *= 2.0;
    else
      h *= 0.5;
    ++res.iterations;
  }
  if (m < res.cost + 1e8 * res.defect) {
    res.z = z;
    res.cost = cost;
    res.defect = defect;
  }
}

}  // namespace

EstimateResult solve_window(const EstimationProblem& problem, const SolverConfig& solver, const Seq* warm) {
  if (!problem.model || !problem.cost) throw DomainError("solve_window: problem lacks a model or a cost");
  Transcription tr(problem);
  auto starts = tr.starts(solver, warm);
  EstimateResult out;
  LocalResult best;
  int best_index = -1;
  int total_iterations = 0;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    LocalResult local;
    if (solver.method == SolverConfig::Method::GaussNewtonPenalty) {
      local = gauss_newton(tr, starts[j], solver);
      if (local.finite && tr.size() <= solver.polish_max_dim) compass(tr, local, 4000);
    } else {
      local.z = starts[j];
      double m = merit(tr, local.z, local.cost, local.defect);
      local.finite = std::isfinite(m);
      if (local.finite) compass(tr, local, 20000);
    }
    total_iterations += local.iterations;
    out.start_costs.push_back(local.cost);
    if (!local.finite) continue;
    const double m = local.cost + 1e8 * local.defect;
    const double mb = best.cost + 1e8 * best.defect;
    // Ties within relative 1e-12 keep the earlier start.
    if (best_index < 0 || m < mb - 1e-12 * std::abs(mb)) {
      best = std::move(local);
      best_index = static_cast<int>(j);
    }
  }
  out.iterations = total_iterations;
  if (best_index < 0) {
    best.z = starts.front();
    best.cost = tr.exact_cost(best.z);
    best.defect = tr.defect(best.z);
    out.status = SolveStatus::Diverged;
    best_index = 0;
  }
  tr.unpack(best.z, out.x, out.w, out.v);
  out.cost = best.cost;
  out.start_index = best_index;
  out.residual = best.defect;
  if (out.status != SolveStatus::Diverged) {
    if (best.defect > solver.tol_dyn)
      out.status = SolveStatus::PenaltyResidual;
    else if (best.hit_cap)
      out.status = SolveStatus::MaxIterations;
    else
      out.status = SolveStatus::Converged;
  }
  auto check_box = [&](const std::optional<Box>& box, const Seq& seq, const char* what) {
    if (!box) return;
    for (std::size_t i = 0; i < seq.size(); ++i)
      if (box->violation(seq[i]) > solver.tol_dyn)
        throw InfeasibleError(std::string("no window trajectory keeps ") + what + " inside its box (index " +
                              std::to_string(i) + ", excess " + std::to_string(box->violation(seq[i])) + ")");
  };
  check_box(problem.process_box, out.w, "the process disturbance");
  check_box(problem.meas_box, out.v, "the measurement disturbance");
  return out;
}

}  // namespace mhe
