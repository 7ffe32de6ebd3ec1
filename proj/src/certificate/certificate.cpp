#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mhe/certificate.hpp"
#include "mhe/errors.hpp"
#include "mhe/rng.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

namespace {

SummabilityEvidence summability_of(const std::string& name, const KLFn& f, const ScalarKFn* sigma,
                                   const LogGrid& grid) {
  if (!f.has_tail_bound())
    throw CapabilityError(name + " has no analytic tail bound, so its summability cannot be checked: " + f.to_string());
  ScalarKFn s = sigma ? *sigma : ScalarKFn::series(f);
  auto ev = check_summable(f, s, grid);
  if (!ev.passed)
    throw DomainError(name + " is not bounded by its declared sum bound " + s.to_string() + " (worst margin " +
                      format_number(ev.grid.worst_margin) + ")");
  return ev;
}

KLFn grow(const KLFn& f, const TriangleGrowth& n) {
  bool identity = std::all_of(n.values.begin(), n.values.end(), [](double v) { return v == 1.0; });
  if (identity && !n.values.empty()) return f;
  return KLFn::scaled_shift(f, 1.0, n.values.empty() ? std::vector<double>{2.0} : n.values, 0);
}

KLFn combine(PlusMode mode, std::vector<KLFn> terms) {
  return mode == PlusMode::Max ? KLFn::pointwise_max(std::move(terms)) : KLFn::pointwise_sum(std::move(terms));
}

void require_same_mode(PlusMode a, PlusMode b, const char* what) {
  if (a != b)
    throw DomainError(std::string(what) + ": plus modes differ (" + to_string(a) + " vs " + to_string(b) + ")");
}

}  // namespace

IossCertificate make_certificate(std::string id, std::string plant, PlusMode mode, CertificateGains gains,
                                 Provenance provenance, const LogGrid& grid) {
  if (!gains.alpha.is_unbounded())
    throw CapabilityError("certificate " + id + ": alpha must be K-infinity: " + gains.alpha.to_string());
  IossCertificate c;
  c.id = std::move(id);
  c.plant = std::move(plant);
  c.mode = mode;
  c.alpha = gains.alpha;
  c.beta = gains.beta;
  c.gamma = gains.gamma;
  c.delta = gains.delta;
  c.epsilon = gains.epsilon;
  c.phi = gains.phi;
  c.sigma = gains.sigma;
  c.provenance = provenance;
  if (mode == PlusMode::Sum) {
    const std::pair<const char*, const KLFn*> named[] = {
        {"gamma", &c.gamma}, {"delta", &c.delta}, {"epsilon", &c.epsilon}, {"phi", &c.phi}};
    for (auto [name, f] : named) {
      auto it = c.sigma.find(name);
      c.summability[name] = summability_of(c.id + "." + name, *f, it == c.sigma.end() ? nullptr : &it->second, grid);
    }
  }
  return c;
}

CostSpec make_cost(std::string id, PlusMode mode, KLFn beta_hat, KLFn gamma_hat, KLFn delta_hat,
                   const LogGrid& grid) {
  CostSpec c;
  c.id = std::move(id);
  c.mode = mode;
  c.beta_hat = std::move(beta_hat);
  c.gamma_hat = std::move(gamma_hat);
  c.delta_hat = std::move(delta_hat);
  if (mode == PlusMode::Sum) {
    c.summability["gamma_hat"] = summability_of(c.id + ".gamma_hat", c.gamma_hat, nullptr, grid);
    c.summability["delta_hat"] = summability_of(c.id + ".delta_hat", c.delta_hat, nullptr, grid);
  }
  return c;
}

GrowthSet triangle_growths(const IossCertificate& cert, std::int64_t s_max, const LogGrid& grid) {
  return {triangle_constant(cert.beta, cert.mode, s_max, grid), triangle_constant(cert.gamma, cert.mode, s_max, grid),
          triangle_constant(cert.delta, cert.mode, s_max, grid)};
}

CostSpec default_cost_from_certificate(const IossCertificate& cert, const GrowthSet& n, const LogGrid& grid) {
  require_same_mode(cert.mode, n.beta.mode, "default cost");
  return make_cost(cert.id + "/default", cert.mode, grow(cert.beta, n.beta), grow(cert.gamma, n.gamma),
                   grow(cert.delta, n.delta), grid);
}

CompatibilityWitness check_compatibility(const IossCertificate& cert, const CostSpec& cost, const GrowthSet& n,
                                         const LogGrid& grid, std::int64_t s_max, std::vector<double> candidates) {
  require_same_mode(cert.mode, cost.mode, "compatibility");
  std::sort(candidates.begin(), candidates.end());
  CompatibilityWitness w;
  w.n = n;
  w.candidates = candidates;
  const auto pts = grid.points();
  const std::string range = grid.describe() + ", s in [0, " + std::to_string(s_max) + "]";

  struct Pair {
    const KLFn* gain;
    const KLFn* hat;
    const TriangleGrowth* growth;
    GridEvidence* ev;
    const char* name;
  };
  Pair pairs[] = {{&cert.beta, &cost.beta_hat, &n.beta, &w.beta, "beta"},
                  {&cert.gamma, &cost.gamma_hat, &n.gamma, &w.gamma, "gamma"},
                  {&cert.delta, &cost.delta_hat, &n.delta, &w.delta, "delta"}};

  // Ratios first; the smallest candidate dominating all of them wins.
  double worst = 0.0;
  for (auto& p : pairs) {
    for (std::int64_t s = 0; s <= s_max; ++s) {
      double ns = p.growth->at(s);
      for (double r : pts) {
        double lhs = (*p.gain)(ns * r, s);
        double rhs = (*p.hat)(r, s);
        double ratio = lhs == 0.0 ? 0.0 : (rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity());
        worst = std::max(worst, ratio);
      }
    }
  }
  w.worst_ratio = worst;
  w.B = candidates.back();
  for (double b : candidates) {
    if (worst <= b * (1.0 + 1e-12)) {
      w.B = b;
      break;
    }
  }
  for (auto& p : pairs) {
    p.ev->check = std::string("compatible_") + p.name;
    p.ev->range = range;
    for (std::int64_t s = 0; s <= s_max; ++s) {
      double ns = p.growth->at(s);
      for (double r : pts) {
        double lhs = (*p.gain)(ns * r, s);
        double rhs = w.B * (*p.hat)(r, s);
        p.ev->record(rhs - lhs, {r, static_cast<double>(s)}, 1e-12 * rhs);
      }
    }
  }
  w.passed = w.beta.passed && w.gamma.passed && w.delta.passed;
  return w;
}

DerivedBounds derive_bcd(const IossCertificate& cert, const CostSpec& cost, const CompatibilityWitness& witness,
                         double A) {
  require_same_mode(cert.mode, cost.mode, "derive_bcd");
  if (!(A >= 1.0)) throw DomainError("suboptimality factor A must be >= 1");
  if (!witness.passed) throw DomainError("derive_bcd: compatibility witness did not pass");
  DerivedBounds d;
  d.mode = cert.mode;
  d.A = A;
  d.B = witness.B;
  d.certificate_id = cert.id;
  d.cost_id = cost.id;
  const double ab = A * witness.B;
  d.b = combine(cert.mode, {grow(cert.beta, witness.n.beta), KLFn::scaled_shift(cost.beta_hat, ab, {}, 0)});
  d.c = combine(cert.mode, {grow(cert.gamma, witness.n.gamma), KLFn::scaled_shift(cost.gamma_hat, ab, {}, 0)});
  d.d = combine(cert.mode, {grow(cert.delta, witness.n.delta), KLFn::scaled_shift(cost.delta_hat, ab, {}, 0)});
  return d;
}

GridEvidence check_bound_envelopes(const DerivedBounds& bounds, const CostSpec& cost, const LogGrid& grid,
                                   std::int64_t s_max) {
  require_same_mode(bounds.mode, cost.mode, "bound envelopes");
  GridEvidence ev;
  ev.check = "bound_envelopes";
  ev.range = grid.describe() + ", s in [0, " + std::to_string(s_max) + "]";
  const double factor = plus(bounds.mode, 1.0, bounds.A) * bounds.B;
  const auto pts = grid.points();
  const std::pair<const KLFn*, const KLFn*> pairs[] = {
      {&bounds.b, &cost.beta_hat}, {&bounds.c, &cost.gamma_hat}, {&bounds.d, &cost.delta_hat}};
  for (auto [f, hat] : pairs)
    for (std::int64_t s = 0; s <= s_max; ++s)
      for (double r : pts) {
        double rhs = factor * (*hat)(r, s);
        ev.record(rhs - (*f)(r, s), {r, static_cast<double>(s)}, 1e-12 * rhs);
      }
  return ev;
}

double eval_rgas_rhs(const DerivedBounds& bounds, double init_dist, std::span<const double> w_norms,
                     std::span<const double> v_norms, std::int64_t t) {
  if (t < 0) throw DomainError("eval_rgas_rhs: negative time");
  const auto tt = static_cast<std::size_t>(t);
  if (w_norms.size() < tt || v_norms.size() < tt) throw DomainError("eval_rgas_rhs: sequences do not cover 0..t-1");
  double acc = bounds.b(init_dist, t);
  for (std::int64_t tau = 1; tau <= t; ++tau) {
    auto i = static_cast<std::size_t>(t - tau);
    acc = plus(bounds.mode, acc, plus(bounds.mode, bounds.c(w_norms[i], tau), bounds.d(v_norms[i], tau)));
  }
  return acc;
}

MarginRecord check_ioss_on_pair(const IossCertificate& cert, const SystemModel& model, const SolutionTuple& a,
                                const SolutionTuple& b, double tol_cert) {
  if (!cert.plant.empty() && !model.id.empty() && cert.plant != model.id)
    throw DomainError("certificate " + cert.id + " belongs to plant " + cert.plant + ", not " + model.id);
  const std::size_t K = a.length();
  if (b.length() != K) throw DomainError("check_ioss_on_pair: tuples have different lengths");
  for (const auto* sol : {&a, &b}) {
    if (!sol->x.empty() && sol->x.front().size() != model.state_dim)
      throw DomainError("check_ioss_on_pair: state dimension does not match the model");
  }
  const std::size_t n = std::min(a.x.size(), b.x.size());
  std::vector<double> dw(K), dv(K), du(K), dy(K);
  for (std::size_t i = 0; i < K; ++i) {
    dw[i] = model.process_metric(a.w[i], b.w[i]);
    dv[i] = model.meas_metric(a.v[i], b.v[i]);
    du[i] = model.input_metric(a.u[i], b.u[i]);
    dy[i] = model.output_metric(a.y[i], b.y[i]);
  }
  const double dx0 = n ? model.state_metric(a.x[0], b.x[0]) : 0.0;
  const PlusMode m = cert.mode;
  MarginRecord rec;
  for (std::size_t t = 0; t < n; ++t) {
    const auto tt = static_cast<std::int64_t>(t);
    double lhs = cert.alpha(model.state_metric(a.x[t], b.x[t]));
    double rhs = cert.beta(dx0, tt);
    for (std::int64_t tau = 1; tau <= tt; ++tau) {
      auto i = static_cast<std::size_t>(tt - tau);
      double term = plus(m, plus(m, cert.gamma(dw[i], tau), cert.delta(dv[i], tau)),
                         plus(m, cert.epsilon(du[i], tau), cert.phi(dy[i], tau)));
      rhs = plus(m, rhs, term);
    }
    rec.lhs.push_back(lhs);
    rec.rhs.push_back(rhs);
    double margin = rhs - lhs;
    if (t == 0 || margin < rec.worst_margin) {
      rec.worst_margin = margin;
      rec.worst_t = t;
    }
  }
  rec.passed = n == 0 || rec.worst_margin >= -tol_cert;
  return rec;
}

namespace {

Seq random_seq(CounterRng& rng, int dim, std::size_t T, double amp, int pattern) {
  Seq s;
  s.reserve(T);
  std::size_t spike = static_cast<std::size_t>(rng.uniform() * static_cast<double>(T));
  for (std::size_t t = 0; t < T; ++t) {
    Vec e = Vec::Zero(dim);
    for (int i = 0; i < dim; ++i) {
      double u = rng.uniform(-1.0, 1.0);
      switch (pattern) {
        case 0:  // dense uniform
          e[i] = amp * u;
          break;
        case 1:  // single spike
          e[i] = t == spike ? amp * (u >= 0 ? 1.0 : -1.0) : 0.0;
          break;
        default:  // geometric decay
          e[i] = amp * u * std::pow(0.8, static_cast<double>(t));
      }
    }
    s.push_back(std::move(e));
  }
  return s;
}

double log_uniform(CounterRng& rng, double lo, double hi) {
  return lo * std::pow(hi / lo, rng.uniform());
}

}  // namespace

FalsificationReport falsify_certificate(const IossCertificate& cert, const SystemModel& model, std::size_t pairs,
                                        std::uint64_t seed, std::size_t T, double tol_cert) {
  FalsificationReport rep;
  rep.pairs = pairs;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::uint64_t pair_seed = CounterRng::mix(seed * 0x9e3779b97f4a7c15ULL + p);
    CounterRng rng(pair_seed);
    auto draw_state = [&](double scale) {
      Vec x(model.state_dim);
      for (int i = 0; i < model.state_dim; ++i) x[i] = scale * rng.uniform(-1.0, 1.0);
      return x;
    };
    const double xs = log_uniform(rng, 1e-3, 10.0);
    Vec x0 = draw_state(xs);
    // Half the pairs share the initial state so that disturbance terms dominate.
    Vec chi0 = rng.uniform() < 0.5 ? x0 : draw_state(xs);
    SolutionTuple sols[2];
    for (int k = 0; k < 2; ++k) {
      int pattern = static_cast<int>(rng.uniform() * 3.0);
      Seq w = random_seq(rng, model.process_noise_dim, T, log_uniform(rng, 1e-3, 1.0), pattern);
      Seq v = random_seq(rng, model.meas_noise_dim, T, log_uniform(rng, 1e-3, 1.0), pattern);
      const Vec& init = k == 0 ? x0 : chi0;
      if (model.output_feedback) {
        sols[k] = simulate_closed_loop(model, init, w, v, T);
      } else {
        Seq u = random_seq(rng, model.input_dim, T, log_uniform(rng, 1e-3, 1.0), pattern);
        sols[k] = simulate(model, init, u, w, v, T);
      }
    }
    auto rec = check_ioss_on_pair(cert, model, sols[0], sols[1], tol_cert);
    rep.rows.push_back({pair_seed, rec.worst_t, rec.worst_margin});
    rep.worst_margin = std::min(rep.worst_margin, rec.worst_margin);
    if (!rec.passed) ++rep.violations;
  }
  if (pairs == 0) rep.worst_margin = 0.0;
  return rep;
}

void write_falsification_csv(std::ostream& os, const FalsificationReport& report) {
  os << "pair_seed,worst_t,margin\n";
  for (const auto& r : report.rows) os << r.pair_seed << ',' << r.worst_t << ',' << format_number(r.margin) << '\n';
}

}  // namespace mhe
