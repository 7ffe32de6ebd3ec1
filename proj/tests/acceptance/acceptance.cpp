// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mhe/certificate.hpp"
#include "mhe/comparison.hpp"
#include "mhe/errors.hpp"
#include "mhe/estimator.hpp"
#include "mhe/harness.hpp"
#include "mhe/plants.hpp"
#include "mhe/rng.hpp"
#include "mhe/stability.hpp"

using namespace mhe;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

int g_jobs = 1;
fs::path g_out;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

const char* mode_name(PlusMode m) { return m == PlusMode::Max ? "max" : "sum"; }

const std::vector<std::string> kScenarios = {"zero", "uniform(0.1)", "decaying(1,0.8)", "impulse"};

ExperimentConfig base_config(const std::string& plant, PlusMode mode) {
  ExperimentConfig c;
  c.plant = plant;
  c.mode = mode;
  c.A = 1.05;
  c.T = 60;
  c.scenarios = kScenarios;
  c.seeds = 50;
  return c;
}

DerivedBounds s1_bounds(PlusMode mode, double A, const LogGrid& grid) {
  auto cert = certificate_fixture(mode == PlusMode::Max ? "s1_max" : "s1_sum", grid);
  auto n = triangle_growths(cert, 200, grid);
  auto cost = default_cost_from_certificate(cert, n, grid);
  return derive_bcd(cert, cost, check_compatibility(cert, cost, n, grid, 200), A);
}

/// Counts certified rows whose error exceeds the chosen bound.
struct RowTally {
  std::size_t rows = 0, certified = 0, violations = 0, cells = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::string bad;

  void add(const ExperimentOutcome& out, bool mhe_bound) {
    for (const auto& cell : out.cells) {
      ++cells;
      for (const auto& row : cell.rows) {
        ++rows;
        if (!row.certified) continue;
        ++certified;
        const double rhs = mhe_bound ? row.mhe_rhs.value_or(-1.0) : row.fie_rhs;
        const double margin = rhs + 1e-9 - row.error;
        worst = std::min(worst, rhs - row.error);
        if (!(margin >= 0.0)) {
          ++violations;
          if (bad.empty()) bad = cell.key + " t=" + std::to_string(row.t);
        }
      }
    }
  }
  std::string summary() const {
    std::string s = std::to_string(cells) + " cells, " + std::to_string(certified) + "/" + std::to_string(rows) +
                    " steps certified, " + std::to_string(violations) + " violations, min margin " + fmt(worst);
    if (!bad.empty()) s += ", first at " + bad;
    return s;
  }
};

// ---------------------------------------------------------------------------

Verdict fie_rgas() {
  RowTally tally;
  std::string notes;
  bool ok = true;
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum})
    for (const char* plant : {"s1", "s2", "s3"}) {
      auto c = base_config(plant, mode);
      auto out = run_experiment(c, Verb::Run, g_jobs);
      if (out.exit_code == 2 || out.exit_code == 3) {
        ok = false;
        notes += std::string(" ") + plant + "_" + mode_name(mode) + ": " + out.message + ";";
      }
      tally.add(out, false);
      write_outputs(out, (g_out / "run1" / "fie" / (std::string(plant) + "_" + mode_name(mode))).string());
    }
  return {ok && tally.violations == 0 && tally.certified > 0, tally.summary() + notes};
}

Verdict scan_oracle() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum}) {
    auto c = base_config("s1", mode);
    auto an = analyze(c, Verb::Analyze);
    const CostSpec& cost = an.cost;
    CounterRng rng(2024, mode == PlusMode::Max ? 1 : 2);
    for (int i = 0; i < 20; ++i) {
      const double prior = rng.uniform(-1.0, 1.0), y0 = rng.uniform(-1.5, 1.5);
      EstimationProblem p;
      p.model = &an.model;
      p.cost = &cost;
      p.prior = Vec::Constant(1, prior);
      p.u = {an.model.zero_input()};
      p.y = {Vec::Constant(1, y0)};
      auto res = solve_window(p, c.solver);
      // omega(0) only moves chi(1), which no measurement sees, so it is zero at the optimum.
      double best = std::numeric_limits<double>::infinity();
      for (long k = -20000; k <= 20000; ++k) {
        const double chi = 1e-4 * static_cast<double>(k);
        const double J = plus(mode, cost.beta_hat(std::abs(chi - prior), 1), cost.delta_hat(std::abs(y0 - chi), 1));
        best = std::min(best, J);
      }
      worst = std::max(worst, std::abs(res.cost - best));
      ++cases;
    }
  }
  return {worst <= 1e-3, std::to_string(cases) + " windows, worst |J_solver - J_scan| " + fmt(worst)};
}

Verdict mhe_rgas() {
  RowTally tally;
  std::string notes;
  bool ok = true;
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum})
    for (std::size_t K : {2u, 4u, 8u}) {
      auto c = base_config("s1", mode);
      c.estimator = ExperimentConfig::Estimator::MHE;
      c.K = K;
      auto out = run_experiment(c, Verb::Run, g_jobs);
      if (out.exit_code == 2 || out.exit_code == 3) {
        ok = false;
        notes += " K=" + std::to_string(K) + " " + mode_name(mode) + ": " + out.message + ";";
      }
      tally.add(out, true);
      write_outputs(out, (g_out / "run1" / "mhe" / (std::string("s1_") + mode_name(mode) + "_K" + std::to_string(K)))
                             .string());
    }
  return {ok && tally.violations == 0 && tally.certified > 0, tally.summary() + notes};
}

Verdict contraction_thresholds() {
  const LogGrid grid = ExperimentConfig{}.grid;
  auto b = s1_bounds(PlusMode::Max, 1.0, grid);
  const auto pts = grid.points();
  std::size_t mismatches = 0;
  // Hand algebra: b(r, s) = max{beta(2 r, s), 2 beta(r, s)} = 2 * 0.5^s r.
  for (double r : pts)
    for (std::int64_t s = 0; s <= 12; ++s)
      if (b.b(r, s) != 2.0 * std::ldexp(1.0, static_cast<int>(-s)) * r) ++mismatches;
  auto k1 = find_contraction_max(b, ScalarKFn::linear(1.0), 1, grid);
  bool ok = !k1.passed && mismatches == 0;
  std::string detail = std::string("K=1 ") + (k1.passed ? "passed" : "fails");
  for (std::size_t K = 2; K <= 12; ++K) {
    auto a = find_contraction_max(b, ScalarKFn::linear(1.0), K, grid);
    const double eta = std::ldexp(1.0, 1 - static_cast<int>(K));
    bool exact = a.passed && a.cls == ContractionAnalysis::Class::Linear && a.eta == eta;
    for (double r : pts) exact = exact && a.kappa(r) == eta * r;
    if (!exact) {
      ok = false;
      detail += ", K=" + std::to_string(K) + " mismatch";
    }
  }
  return {ok, detail + "; K=2..12 pass with kappa = 2^(1-K) r, Linear; " + std::to_string(mismatches) +
                  " mismatches of b against 2*0.5^s r"};
}

/// Direct evaluation of the hat formulas from b, c, d and the contraction data.
struct HatOracle {
  const DerivedBounds& d;
  const ContractionAnalysis& a;
  int K;

  /// Bisection for g(x) = y on a bracket scaled to y, so the resolution is relative.
  template <class G>
  static double solve(const G& g, double y) {
    if (y == 0.0) return 0.0;
    double lo = y, hi = y;
    while (g(hi) < y) hi *= 2.0;
    while (lo > 0.0 && g(lo) >= y) lo *= 0.5;
    for (;;) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) return hi;
      (g(mid) < y ? lo : hi) = mid;
    }
  }
  double alpha_inv(double r) const {
    return solve([&](double x) { return a.alpha(x); }, r);
  }
  double bK(double r) const { return d.b(alpha_inv(r), K); }
  double rho(double r) const { return a.theta * (r - bK(r)); }
  double kappa(double r) const { return d.mode == PlusMode::Max ? bK(r) : bK(r) + rho(r); }
  double kappa_iter(int n, double r) const {
    for (int i = 0; i < n; ++i) r = kappa(r);
    return r;
  }
  double rho_inv(double y) const {
    return solve([&](double x) { return rho(x); }, y);
  }
  double zeta(double r) const { return r + kappa(rho_inv(r)); }

  double iterated(const KLFn& th, double pre, double r, std::int64_t t) const {
    const int k = static_cast<int>(t / K), l = static_cast<int>(t % K);
    return std::max(kappa_iter(k, pre * th(r, l)), kappa_iter(k + 1, pre * th(r, 0)));
  }
  double summed(const KLFn& th, double r, std::int64_t t) const {
    double s = 0.0;
    for (int tau = 1; tau <= K; ++tau) s += th(r, tau);
    return kappa_iter(static_cast<int>(t / K), zeta(2.0 * s));
  }
  double b(double r, std::int64_t t) const { return iterated(d.b, d.mode == PlusMode::Max ? 1.0 : 2.0, r, t); }
  double c(double r, std::int64_t t) const { return d.mode == PlusMode::Max ? iterated(d.c, 1.0, r, t) : summed(d.c, r, t); }
  double dd(double r, std::int64_t t) const { return d.mode == PlusMode::Max ? iterated(d.d, 1.0, r, t) : summed(d.d, r, t); }
};

Verdict hat_fidelity() {
  std::size_t setups = 0, probes = 0, bad = 0;
  double worst = 0.0;
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum})
    for (const char* plant : {"s1", "s2", "s3"}) {
      auto c = base_config(plant, mode);
      c.falsification_pairs = 0;
      auto an = analyze(c, Verb::Analyze);
      for (std::size_t K = 2; K <= 6; ++K) {
        auto a = find_contraction(an.bounds, an.certificate.alpha, K, c.grid);
        if (!a.passed) continue;
        auto hat = build_hat_bounds(a, an.bounds, c.grid);
        HatOracle o{an.bounds, a, static_cast<int>(K)};
        CounterRng rng(77, setups);
        ++setups;
        for (int i = 0; i < 1000; ++i) {
          const double r = std::pow(10.0, rng.uniform(-6.0, 3.0));
          const auto t = static_cast<std::int64_t>(rng.uniform(0.0, 201.0));
          const std::pair<double, double> pairs[] = {
              {hat.b(r, t), o.b(r, t)}, {hat.c(r, t), o.c(r, t)}, {hat.d(r, t), o.dd(r, t)}};
          for (auto [lib, ref] : pairs) {
            ++probes;
            const double rel = std::abs(lib - ref) / std::max(std::abs(ref), 1e-300);
            if (lib != ref) worst = std::max(worst, rel);
            if (lib != ref && !(rel <= 1e-12)) ++bad;
          }
        }
      }
    }
  return {bad == 0 && setups > 0, std::to_string(setups) + " (plant, mode, K) setups, " + std::to_string(probes) +
                                      " probes, worst relative deviation " + fmt(worst) + ", " + std::to_string(bad) +
                                      " beyond 1e-12"};
}

Verdict improving_gains() {
  const LogGrid grid = ExperimentConfig{}.grid;
  auto b = s1_bounds(PlusMode::Max, 1.0, grid);
  std::map<std::size_t, ContractionAnalysis> an;
  std::map<std::size_t, HatBounds> hats;
  for (std::size_t K = 2; K <= 10; ++K) {
    an[K] = find_contraction_max(b, ScalarKFn::linear(1.0), K, grid);
    hats[K] = build_hat_bounds(an[K], b, grid);
  }
  const std::int64_t t_max = 40;
  auto bar = build_bar_bounds(an, hats, b, 2, 10, grid, t_max);
  std::size_t mono = 0, eq = 0, checked = 0, missing = 0;
  std::size_t max_threshold = 0;
  for (double r : grid.points()) {
    for (std::int64_t t = 0; t <= t_max; ++t)
      for (std::size_t K = 2; K < 10; ++K)
        if (bar.eval_b(K, r, t) < bar.eval_b(K + 1, r, t)) ++mono;
    for (std::int64_t t = 0; t <= 3; ++t) {
      auto th = bar_equality_threshold(bar, b, r, t);
      if (!th) {
        ++missing;
        continue;
      }
      max_threshold = std::max(max_threshold, *th);
      for (std::size_t K = *th; K <= 10; ++K) {
        ++checked;
        if (bar.eval_b(K, r, t) != b.b(r, t)) ++eq;
      }
    }
  }
  const bool ok = mono == 0 && eq == 0 && missing == 0 && bar.monotone.passed && bar.above_fie.passed;
  return {ok, std::to_string(mono) + " monotonicity violations, " + std::to_string(eq) + " equality violations in " +
                  std::to_string(checked) + " (r, t <= 3, K >= threshold) checks, largest threshold " +
                  std::to_string(max_threshold) + ", " + std::to_string(missing) + " points without threshold"};
}

Verdict sum_to_max() {
  bool ok = true;
  std::string detail;
  for (const char* plant : {"s1", "s2", "s3"}) {
    auto c = base_config(plant, PlusMode::Sum);
    c.falsification_pairs = 0;
    auto an = analyze(c, Verb::Analyze);
    std::optional<ContractionAnalysis> a;
    for (std::size_t K = 1; K <= 10 && !a; ++K) {
      auto x = find_contraction(an.bounds, an.certificate.alpha, K, c.grid);
      if (x.passed) a = x;
    }
    if (!a) {
      ok = false;
      detail += std::string(plant) + ": no contraction; ";
      continue;
    }
    auto rep = check_sum_to_max_lemma(a->kappa, *a->rho, *a->zeta, an.bounds.c, 100000, 1000, 11, 1e-12);
    ok = ok && rep.passed && rep.pointwise.violations == 0 && rep.sequences.violations == 0 &&
         rep.pointwise.samples >= 100000 && rep.sequences.samples >= 1000;
    detail += std::string(plant) + " K=" + std::to_string(a->K) + ": " + std::to_string(rep.pointwise.samples) + "/" +
              std::to_string(rep.sequences.samples) + " samples, " +
              std::to_string(rep.pointwise.violations + rep.sequences.violations) + " violations; ";
  }
  return {ok, detail};
}

Verdict decaying_convergence() {
  bool ok = true;
  std::size_t traces = 0, fails = 0;
  double worst_ratio = 0.0, worst_decay = 0.0;
  auto check = [&](const ExperimentOutcome& out, bool mhe_bound) {
    if (out.exit_code == 2 || out.exit_code == 3) ok = false;
    for (const auto& cell : out.cells) {
      ++traces;
      const auto& rows = cell.rows;
      const std::size_t T = rows.size() - 1, q = (3 * T) / 4;
      auto rhs = [&](std::size_t t) { return mhe_bound ? rows[t].mhe_rhs.value_or(-1.0) : rows[t].fie_rhs; };
      double err = 0.0;
      bool certified = true;
      for (std::size_t t = q; t <= T; ++t) {
        err = std::max(err, rows[t].error);
        certified = certified && rows[t].certified;
      }
      const double decay = rhs(T) / rhs(0);
      worst_ratio = std::max(worst_ratio, err / rhs(q));
      worst_decay = std::max(worst_decay, decay);
      if (!certified || !(err <= rhs(q)) || !(decay <= 1e-2)) ++fails;
    }
  };
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum}) {
    auto c = base_config("s1", mode);
    c.T = 120;
    c.scenarios = {"decaying(1,0.8)"};
    c.seeds = 5;
    check(run_experiment(c, Verb::Run, g_jobs), false);
    c.estimator = ExperimentConfig::Estimator::MHE;
    c.K = 4;
    c.seeds = 20;
    check(run_experiment(c, Verb::Run, g_jobs), true);
  }
  return {ok && fails == 0, std::to_string(traces) + " traces (FIE and MHE K=4, both modes), " +
                                std::to_string(fails) + " failures, worst final-quarter error / bound " +
                                fmt(worst_ratio) + ", worst bound(T) / bound(0) " + fmt(worst_decay)};
}

Verdict algebra_invariants() {
  std::size_t checks = 0, failures = 0;
  std::string first;
  auto note = [&](bool passed, const std::string& what) {
    ++checks;
    if (!passed) {
      ++failures;
      if (first.empty()) first = what;
    }
  };
  CounterRng rng(9);
  auto rand_r = [&] { return std::pow(10.0, rng.uniform(-6.0, 3.0)); };
  auto distrib = [&](const ScalarKFn& f, const std::string& what) {
    bool exact = true, dk = true;
    for (int i = 0; i < 200; ++i) {
      const double a = rand_r(), b = rand_r();
      exact = exact && f(std::max(a, b)) == std::max(f(a), f(b));
      const int n = 1 + static_cast<int>(rng.uniform(0.0, 10.0));
      std::vector<double> xs(n);
      double sum = 0.0, mx = 0.0, sm = 0.0;
      for (auto& x : xs) {
        x = rand_r();
        sum += x;
      }
      for (double x : xs) {
        mx = std::max(mx, f(n * x));
        sm += f(n * x);
      }
      const double lhs = f(sum);
      dk = dk && lhs <= mx * (1 + 1e-12) && mx <= sm * (1 + 1e-12);
    }
    note(exact, what + " max distributivity");
    note(dk, what + " list distribution");
  };

  for (const LogGrid& grid : {LogGrid{}, ExperimentConfig{}.grid}) {
    for (const auto& id : certificate_ids()) {
      auto cert = certificate_fixture(id, grid);
      note(check_k_invariants(cert.alpha, grid).passed, id + ".alpha");
      const std::pair<const char*, const KLFn*> gains[] = {{"beta", &cert.beta},   {"gamma", &cert.gamma},
                                                           {"delta", &cert.delta}, {"epsilon", &cert.epsilon},
                                                           {"phi", &cert.phi}};
      for (auto [name, f] : gains) {
        note(check_kl_invariants(*f, grid, 200).passed, id + "." + name + " KL");
        for (std::int64_t s : {0, 1, 5, 30}) distrib(ScalarKFn::section(*f, s), id + "." + name);
        auto n = triangle_constant(*f, cert.mode, 60, grid);
        note(check_triangle(*f, cert.mode, n, 60, grid).passed, id + "." + name + " triangle");
      }
      if (cert.mode == PlusMode::Sum) {
        for (const auto& [name, ev] : cert.summability) note(ev.passed, id + "." + name + " summability");
        for (auto [name, f] : gains) {
          if (std::string(name) == "beta") continue;
          note(check_summable(*f, cert.sigma.count(name) ? cert.sigma.at(name) : ScalarKFn::series(*f), grid).passed,
               id + "." + name + " summable");
        }
      }
      auto growth = triangle_growths(cert, 200, grid);
      note(check_triangle(cert.beta, cert.mode, growth.beta, 200, grid).passed, id + " growth beta");
      note(check_triangle(cert.gamma, cert.mode, growth.gamma, 200, grid).passed, id + " growth gamma");
      note(check_triangle(cert.delta, cert.mode, growth.delta, 200, grid).passed, id + " growth delta");
      auto cost = default_cost_from_certificate(cert, growth, grid);
      for (const auto& [name, ev] : cost.summability) note(ev.passed, id + " cost." + name + " summability");
      auto w = check_compatibility(cert, cost, growth, grid, 200);
      note(w.passed, id + " compatibility");
      auto d = derive_bcd(cert, cost, w, 1.05);
      for (const KLFn* f : {&d.b, &d.c, &d.d}) note(check_kl_invariants(*f, grid, 200).passed, id + " derived KL");
      note(check_bound_envelopes(d, cost, grid, 200).passed, id + " envelopes");
      for (std::size_t K = 2; K <= 6; ++K) {
        auto a = find_contraction(d, cert.alpha, K, grid);
        if (!a.passed) continue;
        note(check_k_invariants(a.kappa, grid).passed, id + " kappa");
        distrib(a.kappa, id + " kappa");
        if (a.rho) note(check_k_invariants(*a.rho, grid).passed, id + " rho");
        if (a.zeta) note(check_k_invariants(*a.zeta, grid).passed, id + " zeta");
      }
    }
  }
  return {failures == 0, std::to_string(checks) + " invariant checks over 8 certificates and 2 grids, " +
                             std::to_string(failures) + " failures" + (first.empty() ? "" : ", first: " + first)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Compares every CSV of the second run with the file of the same name from the first.
void compare_csv(const fs::path& a, const fs::path& b, std::size_t& files, std::size_t& diffs, std::string& first) {
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), b);
    ++files;
    if (!fs::exists(a / rel) || slurp(a / rel) != slurp(e.path())) {
      ++diffs;
      if (first.empty()) first = rel.string();
    }
  }
}

Verdict determinism() {
  std::size_t files = 0, diffs = 0;
  std::string first;
  const fs::path run1 = g_out / "run1", run2 = g_out / "run2";
  // FIE: rerun a seed prefix serially and compare against the parallel full run.
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum})
    for (const char* plant : {"s1", "s2", "s3"}) {
      auto c = base_config(plant, mode);
      c.seeds = 3;
      const std::string name = std::string(plant) + "_" + mode_name(mode);
      write_outputs(run_experiment(c, Verb::Run, 1), (run2 / "fie" / name).string());
      compare_csv(run1 / "fie" / name, run2 / "fie" / name, files, diffs, first);
    }
  for (PlusMode mode : {PlusMode::Max, PlusMode::Sum})
    for (std::size_t K : {2u, 4u, 8u}) {
      auto c = base_config("s1", mode);
      c.estimator = ExperimentConfig::Estimator::MHE;
      c.K = K;
      const std::string name = std::string("s1_") + mode_name(mode) + "_K" + std::to_string(K);
      write_outputs(run_experiment(c, Verb::Run, 1), (run2 / "mhe" / name).string());
      compare_csv(run1 / "mhe" / name, run2 / "mhe" / name, files, diffs, first);
    }
  // Sweep and probe verbs, run twice with different worker counts.
  auto sweep = base_config("s2", PlusMode::Max);
  sweep.estimator = ExperimentConfig::Estimator::MHE;
  sweep.K_min = 1;
  sweep.K_max = 6;
  sweep.seeds = 3;
  auto probe = base_config("s1", PlusMode::Sum);
  probe.seeds = 3;
  const std::pair<ExperimentConfig, Verb> extra[] = {{sweep, Verb::Sweep}, {probe, Verb::Probe}};
  for (const auto& [c, verb] : extra) {
    const std::string name = std::string(to_string(verb)) + "_" + c.plant;
    write_outputs(run_experiment(c, verb, g_jobs + 1), (run1 / name).string());
    write_outputs(run_experiment(c, verb, 1), (run2 / name).string());
    compare_csv(run1 / name, run2 / name, files, diffs, first);
  }
  return {diffs == 0 && files > 0, std::to_string(files) + " CSV files compared, " + std::to_string(diffs) +
                                       " differ" + (first.empty() ? "" : ", first: " + first)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_artifacts";
  g_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--out", out, "artifact directory");
  app.add_option("--jobs", g_jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  g_out = out;
  fs::remove_all(g_out);
  fs::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"fie-rgas-inequality", fie_rgas},
      {"k1-scan-oracle", scan_oracle},
      {"mhe-rgas-inequality", mhe_rgas},
      {"contraction-thresholds", contraction_thresholds},
      {"hat-bound-fidelity", hat_fidelity},
      {"improving-gains", improving_gains},
      {"sum-to-max-lemma", sum_to_max},
      {"decaying-convergence", decaying_convergence},
      {"algebra-invariants", algebra_invariants},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu %-24s %s  (%.1f s) %s\n", i + 1, criteria[i].first, v.passed ? "PASS" : "FAIL", secs,
                v.detail.c_str());
    std::fflush(stdout);
    if (!v.passed) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
