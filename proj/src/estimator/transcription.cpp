#include "estimator/transcription.hpp"

#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/rng.hpp"

namespace mhe::detail {

namespace {

template <class Fn>
Mat central_difference(Fn&& fn, const Vec& p, Eigen::Index rows) {
  Mat J(rows, p.size());
  Vec q = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = 6e-6 * std::max(1.0, std::abs(p[j]));
    q[j] = p[j] + h;
    Vec fp = fn(q);
    q[j] = p[j] - h;
    Vec fm = fn(q);
    q[j] = p[j];
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

void append_range(std::vector<int>& vars, int off, int len) {
  for (int k = 0; k < len; ++k) vars.push_back(off + k);
}

}  // namespace

void Slice::derivatives(double rho, double& d1, double& d2) const {
  if (lin) {
    d1 = *lin;
    d2 = 0.0;
    return;
  }
  const double h = 1e-5 * std::max(rho, 1e-8);
  const double lo = std::max(rho - h, 0.0);
  const double hi = rho + h;
  const double f0 = (*f)(rho, s), fl = (*f)(lo, s), fh = (*f)(hi, s);
  d1 = (fh - fl) / (hi - lo);
  d2 = lo > 0.0 ? (fh - 2.0 * f0 + fl) / (h * h) : 0.0;
}

Transcription::Transcription(const EstimationProblem& p)
    : problem_(p),
      model_(*p.model),
      K_(p.horizon()),
      n_(p.model->state_dim),
      nw_(p.model->process_noise_dim),
      nv_(p.model->meas_noise_dim),
      w_elim_(static_cast<bool>(p.model->w_from_transition)),
      v_elim_(static_cast<bool>(p.model->v_from_output)) {
  if (K_ < 1) throw DomainError("estimation window must have K >= 1");
  if (p.y.size() != K_) throw DomainError("estimation window: u and y lengths differ");
  if (p.prior.size() != n_) throw DomainError("estimation window: prior dimension mismatch");
  if (!p.cost) throw DomainError("estimation window: no cost");
  for (std::size_t i = 0; i <= K_; ++i) {
    block_start_.push_back(nz_);
    int size = n_;
    if (i < K_) size += (w_elim_ ? 0 : nw_) + (v_elim_ ? 0 : nv_);
    for (int k = 0; k < size; ++k) block_of_.push_back(static_cast<int>(i));
    nz_ += size;
  }
  const auto k = static_cast<std::int64_t>(K_);
  const CostSpec& c = *p.cost;
  slices_.push_back({&c.beta_hat, k, c.beta_hat.slice_linear_coefficient(k)});
  for (std::size_t i = 0; i < K_; ++i) {
    auto tau = k - static_cast<std::int64_t>(i);
    slices_.push_back({&c.gamma_hat, tau, c.gamma_hat.slice_linear_coefficient(tau)});
  }
  for (std::size_t i = 0; i < K_; ++i) {
    auto tau = k - static_cast<std::int64_t>(i);
    slices_.push_back({&c.delta_hat, tau, c.delta_hat.slice_linear_coefficient(tau)});
  }
}

int Transcription::block_size(int b) const {
  auto i = static_cast<std::size_t>(b);
  return (i + 1 < block_start_.size() ? block_start_[i + 1] : nz_) - block_start_[i];
}

void Transcription::residual_w(const Vec& z, std::size_t i, bool jac, ResidualEval& out) const {
  out.vars.clear();
  if (!w_elim_) {
    out.r = seg(z, w_off(i), nw_);
    if (jac) {
      out.J.setIdentity(nw_, nw_);
      append_range(out.vars, w_off(i), nw_);
    }
    return;
  }
  const Vec xi = seg(z, x_off(i), n_);
  const Vec xn = seg(z, x_off(i + 1), n_);
  const Vec& u = problem_.u[i];
  out.r = model_.w_from_transition(xi, u, xn);
  if (!jac) return;
  append_range(out.vars, x_off(i), n_);
  append_range(out.vars, x_off(i + 1), n_);
  out.J.resize(out.r.size(), 2 * n_);
  if (model_.w_from_transition_jacobian) {
    Mat dx, dn;
    model_.w_from_transition_jacobian(xi, u, xn, dx, dn);
    out.J << dx, dn;
  } else {
    Vec p(2 * n_);
    p << xi, xn;
    out.J = central_difference(
        [&](const Vec& q) { return model_.w_from_transition(q.head(n_), u, q.tail(n_)); }, p, out.r.size());
  }
}

void Transcription::residual_v(const Vec& z, std::size_t i, bool jac, ResidualEval& out) const {
  out.vars.clear();
  if (!v_elim_) {
    out.r = seg(z, v_off(i), nv_);
    if (jac) {
      out.J.setIdentity(nv_, nv_);
      append_range(out.vars, v_off(i), nv_);
    }
    return;
  }
  const Vec xi = seg(z, x_off(i), n_);
  const Vec& u = problem_.u[i];
  const Vec& y = problem_.y[i];
  out.r = model_.v_from_output(xi, u, y);
  if (!jac) return;
  append_range(out.vars, x_off(i), n_);
  if (model_.v_from_output_jacobian) {
    model_.v_from_output_jacobian(xi, u, y, out.J);
  } else {
    out.J = central_difference([&](const Vec& q) { return model_.v_from_output(q, u, y); }, xi, out.r.size());
  }
}

void Transcription::evaluate(const Vec& z, bool jac, std::vector<ResidualEval>& terms,
                             std::vector<ResidualEval>& penalties) const {
  terms.resize(1 + 2 * K_);
  auto& prior = terms[0];
  prior.r = seg(z, x_off(0), n_) - problem_.prior;
  prior.vars.clear();
  if (jac) {
    prior.J.setIdentity(n_, n_);
    append_range(prior.vars, x_off(0), n_);
  }
  for (std::size_t i = 0; i < K_; ++i) {
    residual_w(z, i, jac, terms[1 + i]);
    residual_v(z, i, jac, terms[1 + K_ + i]);
  }

  std::size_t np = 0;
  auto next = [&]() -> ResidualEval& {
    if (penalties.size() <= np) penalties.resize(np + 1);
    auto& e = penalties[np++];
    e.vars.clear();
    return e;
  };
  if (!w_elim_) {
    for (std::size_t i = 0; i < K_; ++i) {
      auto& e = next();
      const Vec xi = seg(z, x_off(i), n_), wi = seg(z, w_off(i), nw_), xn = seg(z, x_off(i + 1), n_);
      const Vec& u = problem_.u[i];
      e.r = xn - model_.f(xi, u, wi);
      if (jac) {
        Vec p(n_ + nw_);
        p << xi, wi;
        Mat df = central_difference([&](const Vec& q) { return model_.f(q.head(n_), u, q.tail(nw_)); }, p, n_);
        e.J.resize(n_, 2 * n_ + nw_);
        e.J << -df, Mat::Identity(n_, n_);
        append_range(e.vars, x_off(i), n_);
        append_range(e.vars, w_off(i), nw_);
        append_range(e.vars, x_off(i + 1), n_);
      }
    }
  }
  if (!v_elim_) {
    for (std::size_t i = 0; i < K_; ++i) {
      auto& e = next();
      const Vec xi = seg(z, x_off(i), n_), vi = seg(z, v_off(i), nv_);
      const Vec& u = problem_.u[i];
      e.r = problem_.y[i] - model_.h(xi, u, vi);
      if (jac) {
        Vec p(n_ + nv_);
        p << xi, vi;
        e.J = -central_difference([&](const Vec& q) { return model_.h(q.head(n_), u, q.tail(nv_)); }, p,
                                  e.r.size());
        append_range(e.vars, x_off(i), n_);
        append_range(e.vars, v_off(i), nv_);
      }
    }
  }
  auto box_excess = [&](const Box& box, std::size_t first) {
    for (std::size_t i = 0; i < K_; ++i) {
      const auto& t = terms[first + i];
      auto& e = next();
      Vec proj = box.project(t.r);
      e.r = t.r - proj;
      if (jac) {
        e.J = t.J;
        for (Eigen::Index k = 0; k < e.r.size(); ++k)
          if (e.r[k] == 0.0) e.J.row(k).setZero();
        e.vars = t.vars;
      }
    }
  };
  if (problem_.process_box) box_excess(*problem_.process_box, 1);
  if (problem_.meas_box) box_excess(*problem_.meas_box, 1 + K_);
  penalties.resize(np);
}

void Transcription::unpack(const Vec& z, Seq& x, Seq& w, Seq& v) const {
  x.resize(K_ + 1);
  w.resize(K_);
  v.resize(K_);
  for (std::size_t i = 0; i <= K_; ++i) x[i] = seg(z, x_off(i), n_);
  for (std::size_t i = 0; i < K_; ++i) {
    w[i] = w_elim_ ? model_.w_from_transition(x[i], problem_.u[i], x[i + 1]) : seg(z, w_off(i), nw_);
    v[i] = v_elim_ ? model_.v_from_output(x[i], problem_.u[i], problem_.y[i]) : seg(z, v_off(i), nv_);
  }
}

double Transcription::exact_cost(const Vec& z) const {
  Seq x, w, v;
  unpack(z, x, w, v);
  return eval_cost(*problem_.cost, model_, problem_.prior, x[0], w, v, K_);
}

double Transcription::defect(const Vec& z) const {
  if (w_elim_ && v_elim_) return 0.0;
  Seq x, w, v;
  unpack(z, x, w, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < K_; ++i) {
    if (!w_elim_) worst = std::max(worst, model_.state_metric(x[i + 1], model_.f(x[i], problem_.u[i], w[i])));
    if (!v_elim_) worst = std::max(worst, model_.output_metric(problem_.y[i], model_.h(x[i], problem_.u[i], v[i])));
  }
  return worst;
}

void Transcription::project(Vec& z) const {
  if (!problem_.state_box) return;
  for (std::size_t i = 0; i <= K_; ++i) z.segment(x_off(i), n_) = problem_.state_box->project(seg(z, x_off(i), n_));
}

Vec Transcription::pack_states(const Seq& x) const {
  Vec z = Vec::Zero(nz_);
  for (std::size_t i = 0; i <= K_; ++i) z.segment(x_off(i), n_) = x[i];
  return z;
}

std::vector<Vec> Transcription::starts(const SolverConfig& config, const Seq* warm) const {
  std::vector<Vec> det;
  const Vec zero_w = model_.zero_w();
  auto open_loop_from = [&](Seq& x, std::size_t from) {
    for (std::size_t i = from; i < K_; ++i) x[i + 1] = model_.f(x[i], problem_.u[i], zero_w);
  };
  {
    Seq x(K_ + 1);
    x[0] = problem_.prior;
    if (problem_.state_box) x[0] = problem_.state_box->project(x[0]);
    open_loop_from(x, 0);
    det.push_back(pack_states(x));
  }
  if (model_.state_from_output) {
    Seq x(K_ + 1);
    for (std::size_t i = 0; i < K_; ++i) x[i] = model_.state_from_output(problem_.u[i], problem_.y[i]);
    open_loop_from(x, K_ - 1);
    det.push_back(pack_states(x));
  }
  for (auto& z : det) project(z);

  const auto count = static_cast<std::size_t>(std::max(1, config.multistart));
  std::vector<Vec> out;
  for (std::size_t j = 0; j < count; ++j) {
    if (j < det.size()) {
      out.push_back(det[j]);
      continue;
    }
    const Vec& base = det[(j - det.size()) % det.size()];
    CounterRng rng(config.seed, j);
    const double scale = 0.5 * (1.0 + base.lpNorm<Eigen::Infinity>());
    Vec z = base;
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] += scale * rng.uniform(-1.0, 1.0);
    project(z);
    out.push_back(std::move(z));
  }
  // The warm start is extra, so the list above stays prefix-stable in the count.
  if (warm && warm->size() == K_ + 1) {
    out.push_back(pack_states(*warm));
    project(out.back());
  }
  return out;
}

}  // namespace mhe::detail
