#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mhe/errors.hpp"
#include "mhe/harness.hpp"
#include "mhe/plants.hpp"
#include "mhe/rng.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

namespace {

std::vector<std::size_t> horizons_for(const ExperimentConfig& c, Verb verb) {
  std::vector<std::size_t> Ks;
  if (verb == Verb::Sweep) {
    for (std::size_t K = c.K_min; K <= c.K_max; ++K) Ks.push_back(K);
  } else if (c.estimator == ExperimentConfig::Estimator::MHE) {
    Ks.push_back(c.K);
  }
  return Ks;
}

std::string scenario_key(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (ch == '(' || ch == ',') out += '_';
    else if (ch != ')' && ch != ' ') out += ch;
  }
  return out;
}

std::vector<double> norms(const Seq& s, const Metric& m) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& e : s) out.push_back(m.norm(e));
  return out;
}

}  // namespace

Analysis analyze(const ExperimentConfig& config, Verb verb) {
  Analysis a;
  try {
    a.model = make_plant(config.plant);
    a.certificate = certificate_fixture(config.certificate_id(), config.grid);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (a.certificate.plant != config.plant)
    throw ConfigError("certificate " + a.certificate.id + " belongs to plant " + a.certificate.plant);
  if (a.certificate.mode != config.mode)
    throw ConfigError("mixed modes: experiment uses " + std::string(to_string(config.mode)) + " but certificate " +
                      a.certificate.id + " uses " + to_string(a.certificate.mode));

  a.growth = triangle_growths(a.certificate, config.s_max, config.grid);
  if (config.cost == "explicit") {
    try {
      a.cost = make_cost("explicit", config.mode, parse_kl(config.beta_hat), parse_kl(config.gamma_hat),
                         parse_kl(config.delta_hat), config.grid);
    } catch (const ParseError& e) {
      throw ConfigError(std::string("explicit cost: ") + e.what());
    } catch (const DomainError& e) {
      throw ConfigError(std::string("explicit cost: ") + e.what());
    }
  } else {
    a.cost = default_cost_from_certificate(a.certificate, a.growth, config.grid);
  }
  a.compatibility = check_compatibility(a.certificate, a.cost, a.growth, config.grid, config.s_max);
  if (!a.compatibility.passed) {
    a.passed = false;
    a.failure = "cost is not compatible with the certificate (worst ratio " +
                format_number(a.compatibility.worst_ratio) + ")";
    return a;
  }
  a.bounds = derive_bcd(a.certificate, a.cost, a.compatibility, config.A);
  a.envelopes = check_bound_envelopes(a.bounds, a.cost, config.grid, config.s_max);
  if (!a.envelopes.passed) {
    a.passed = false;
    a.failure = "derived bounds exceed their envelopes";
  }
  if (a.certificate.provenance == Provenance::Sampled) {
    a.falsification = falsify_certificate(a.certificate, a.model, config.falsification_pairs, config.seed);
    if (a.falsification->violations > 0) {
      a.passed = false;
      a.failure = "sampled certificate falsified on " + std::to_string(a.falsification->violations) + " pairs";
    }
  }
  a.exponential = check_eventually_exponential(a.bounds.b, config.grid, 0, std::min<std::int64_t>(config.s_max, 60));

  const auto Ks = horizons_for(config, verb);
  for (std::size_t K : Ks) {
    auto ca = find_contraction(a.bounds, a.certificate.alpha, K, config.grid);
    if (ca.passed) {
      const auto t_max = static_cast<std::int64_t>(10 * K);
      auto hat = build_hat_bounds(ca, a.bounds, config.grid, t_max);
      if (ca.cls == ContractionAnalysis::Class::Linear)
        a.rges.emplace(K, classify_rges(ca, hat, a.bounds, config.grid, t_max));
      a.hats.emplace(K, std::move(hat));
    } else {
      a.excluded_K.push_back(K);
    }
    a.contraction.emplace(K, std::move(ca));
  }
  if (verb == Verb::Sweep) {
    // The bar bounds need every horizon from K0 upward.
    std::size_t K0 = config.K_min;
    for (std::size_t K : a.excluded_K) K0 = std::max(K0, K + 1);
    if (K0 > config.K_max) {
      a.passed = false;
      a.failure = "no horizon in [" + std::to_string(config.K_min) + ", " + std::to_string(config.K_max) +
                  "] admits a contraction";
      return a;
    }
    a.K0 = K0;
    a.bar = build_bar_bounds(a.contraction, a.hats, a.bounds, K0, config.K_max, config.grid,
                             static_cast<std::int64_t>(4 * config.K_max));
  } else if (!Ks.empty() && !a.excluded_K.empty()) {
    a.passed = false;
    a.failure = a.contraction.at(Ks.front()).failure;
  }
  return a;
}

CellResult run_cell(const ExperimentConfig& config, const Analysis& analysis, const std::string& scenario,
                    std::uint64_t seed, std::optional<std::size_t> K, bool probe) {
  const SystemModel& model = analysis.model;
  CellResult cell;
  auto spec = parse_scenario(scenario, config.T);
  spec.seed = seed;
  cell.scenario = spec.label();
  cell.seed = seed;
  cell.K = K;
  cell.key = scenario_key(cell.scenario) + "_seed" + std::to_string(seed);
  if (K) cell.key += "_K" + std::to_string(*K);

  auto [w, v] = generate_scenario(spec, {model.process_noise_dim, model.meas_noise_dim});
  CounterRng rng(seed, 7);
  Vec x0(model.state_dim), dir(model.state_dim);
  for (int i = 0; i < model.state_dim; ++i) x0[i] = rng.uniform(-config.x0_range, config.x0_range);
  for (int i = 0; i < model.state_dim; ++i) dir[i] = rng.uniform(-1.0, 1.0);
  if (dir.norm() == 0.0) dir.setOnes();
  const Vec prior = x0 + config.prior_offset * dir / dir.norm();

  const std::size_t T = config.T;
  if (model.output_feedback) {
    cell.truth = simulate_closed_loop(model, x0, w, v, T);
  } else {
    Seq u(T, model.zero_input());
    for (std::size_t t = 0; t < T; ++t) u[t].setConstant(config.input_amplitude * std::sin(0.5 * static_cast<double>(t)));
    cell.truth = simulate(model, x0, u, w, v, T);
  }
  SolutionTuple& truth = cell.truth;
  if (truth.x.size() == T) truth.x.push_back(model.f(truth.x[T - 1], truth.u[T - 1], truth.w[T - 1]));

  // The estimator sees the data; in a probe one output sample is shifted and
  // the shift is booked as extra measurement noise of the reference.
  SolutionTuple data = truth;
  if (probe && config.probe_time < T) {
    ProbeResult pr;
    pr.perturbation = config.probe_magnitude;
    pr.out_of_range = config.probe_magnitude > config.grid.r_max;
    Vec dy = Vec::Constant(model.output_dim, config.probe_magnitude / std::sqrt(static_cast<double>(model.output_dim)));
    data.y[config.probe_time] += dy;
    if (model.v_from_output)
      data.v[config.probe_time] = model.v_from_output(data.x[config.probe_time], data.u[config.probe_time],
                                                      data.y[config.probe_time]);
    cell.probe = pr;
  }

  std::vector<EstimateResult> est;
  try {
    if (K)
      est = run_mhe(model, analysis.cost, prior, data, *K, config.A, config.solver);
    else
      est = run_fie(model, analysis.cost, prior, data, config.A, config.solver, config.T_max);
  } catch (const InfeasibleError& e) {
    cell.error = e.what();
    cell.exit_code = 3;
    cell.passed = false;
    return cell;
  } catch (const DivergenceError& e) {
    cell.error = e.what();
    cell.exit_code = 3;
    cell.passed = false;
    return cell;
  }

  const auto w_norms = norms(data.w, model.process_metric);
  const auto v_norms = norms(data.v, model.meas_metric);
  const double init = model.state_metric(x0, prior);
  const HatBounds* hat = K ? &analysis.hats.at(*K) : nullptr;
  const ContractionAnalysis* ca = K ? &analysis.contraction.at(*K) : nullptr;
  const bool reference_ok = !probe || static_cast<bool>(model.v_from_output);

  cell.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= T; ++t) {
    TraceRow row;
    row.t = t;
    row.x = truth.x[t];
    row.xhat = est[t].estimate();
    row.error = analysis.certificate.alpha(model.state_metric(row.x, row.xhat));
    const auto tt = static_cast<std::int64_t>(t);
    row.fie_rhs = eval_rgas_rhs(analysis.bounds, init, w_norms, v_norms, tt);
    if (hat) row.mhe_rhs = eval_mhe_bound(*hat, init, w_norms, v_norms, tt);
    row.cost = est[t].cost;
    row.status = to_string(est[t].status);
    if (t == 0) {
      row.certified = true;
    } else if (reference_ok) {
      const std::size_t begin = (K && t > *K) ? t - *K : 0;
      EstimationProblem p;
      p.model = &model;
      p.cost = &analysis.cost;
      p.prior = begin == 0 ? prior : est[begin].estimate();
      p.u.assign(data.u.begin() + static_cast<std::ptrdiff_t>(begin), data.u.begin() + static_cast<std::ptrdiff_t>(t));
      p.y.assign(data.y.begin() + static_cast<std::ptrdiff_t>(begin), data.y.begin() + static_cast<std::ptrdiff_t>(t));
      p.A = config.A;
      auto cert = certify_suboptimality(p, est[t], window_of(data, begin, t - begin), config.tol_cert);
      row.certified = cert.passed;
      row.ratio = cert.ratio;
    }
    if (ca && tt >= static_cast<std::int64_t>(*K))
      row.step_rhs = window_step_rhs(*ca, analysis.bounds, cell.rows[t - *K].error, w_norms, v_norms, tt);
    const double rhs = row.mhe_rhs ? *row.mhe_rhs : row.fie_rhs;
    row.margin = rhs - row.error;
    if (row.certified) {
      ++cell.certified_steps;
      double m = row.margin;
      if (row.step_rhs) m = std::min(m, *row.step_rhs - row.error);
      if (m < cell.min_margin) {
        cell.min_margin = m;
        cell.worst_t = t;
      }
      if (m < -config.tol_cert) cell.passed = false;
    }
    cell.rows.push_back(std::move(row));
  }
  if (!std::isfinite(cell.min_margin)) cell.min_margin = 0.0;

  if (cell.probe) {
    // Certificate inequality between the true window and the estimated
    // window, which reproduces the shifted outputs.
    auto& pr = *cell.probe;
    pr.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= T; ++t) {
      const std::size_t begin = (K && t > *K) ? t - *K : 0;
      SolutionTuple a = window_of(truth, begin, t - begin);
      SolutionTuple b = window_of(data, begin, t - begin);
      b.x = est[t].x;
      b.w = est[t].w;
      b.v = est[t].v;
      auto rec = check_ioss_on_pair(analysis.certificate, model, a, b, config.tol_cert);
      if (rec.worst_margin < pr.worst_margin) {
        pr.worst_margin = rec.worst_margin;
        pr.worst_t = t;
      }
      pr.passed = pr.passed && rec.passed;
    }
    if (!pr.passed) cell.passed = false;
  }
  cell.exit_code = cell.passed ? 0 : 4;
  return cell;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, Verb verb, int jobs) {
  ExperimentOutcome out;
  out.verb = verb;
  out.config = config;
  try {
    out.analysis = analyze(config, verb);
  } catch (const Error& e) {
    out.exit_code = 2;
    out.message = e.what();
    return out;
  }
  if (!out.analysis.passed) {
    out.exit_code = 2;
    out.message = out.analysis.failure;
    return out;
  }
  if (verb == Verb::Analyze) {
    out.message = "analysis passed";
    return out;
  }

  struct Job {
    std::string scenario;
    std::uint64_t seed;
    std::optional<std::size_t> K;
  };
  std::vector<Job> work;
  std::vector<std::optional<std::size_t>> Ks;
  if (verb == Verb::Sweep) {
    for (std::size_t K = *out.analysis.K0; K <= config.K_max; ++K) Ks.push_back(K);
  } else if (config.estimator == ExperimentConfig::Estimator::MHE) {
    Ks.push_back(config.K);
  } else {
    Ks.push_back(std::nullopt);
  }
  for (const auto& K : Ks)
    for (const auto& s : config.scenarios)
      for (std::size_t i = 0; i < config.seeds; ++i) work.push_back({s, config.seed + i, K});

  std::vector<CellResult> results(work.size());
  std::vector<std::string> errors(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        results[i] = run_cell(config, out.analysis, work[i].scenario, work[i].seed, work[i].K, verb == Verb::Probe);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < work.size(); ++i)
    if (!errors[i].empty()) throw Error("cell " + work[i].scenario + " seed " + std::to_string(work[i].seed) + ": " +
                                        errors[i]);

  std::sort(results.begin(), results.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.K, a.scenario, a.seed) < std::tie(b.K, b.scenario, b.seed);
  });
  out.cells = std::move(results);
  bool infeasible = false, violated = false;
  for (const auto& c : out.cells) {
    infeasible = infeasible || c.exit_code == 3;
    violated = violated || c.exit_code == 4;
  }
  out.exit_code = infeasible ? 3 : violated ? 4 : 0;
  if (infeasible)
    out.message = "solver infeasibility in at least one cell";
  else if (violated)
    out.message = "bound violation in at least one cell";
  else
    out.message = "all certified steps satisfy their bounds";
  return out;
}

}  // namespace mhe
