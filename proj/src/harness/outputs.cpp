#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mhe/errors.hpp"
#include "mhe/harness.hpp"
#include "util/format.hpp"

namespace mhe {

using nlohmann::ordered_json;
using util::format_number;

namespace fs = std::filesystem;

namespace {

ordered_json num(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return v;
}

ordered_json evidence_json(const GridEvidence& ev) {
  ordered_json j;
  j["check"] = ev.check;
  j["passed"] = ev.passed;
  j["worst_margin"] = num(ev.worst_margin);
  ordered_json pt = ordered_json::array();
  for (double p : ev.worst_point) pt.push_back(num(p));
  j["worst_point"] = pt;
  j["points"] = ev.points;
  j["range"] = ev.range;
  return j;
}

const char* class_name(ContractionAnalysis::Class c) {
  return c == ContractionAnalysis::Class::Linear ? "linear" : "nonlinear";
}

ordered_json contraction_json(const ContractionAnalysis& a) {
  ordered_json j;
  j["K"] = a.K;
  j["passed"] = a.passed;
  j["kappa"] = a.kappa.to_string();
  if (a.rho) j["rho"] = a.rho->to_string();
  if (a.zeta) j["zeta"] = a.zeta->to_string();
  if (a.mode == PlusMode::Sum) j["theta"] = num(a.theta);
  j["class"] = class_name(a.cls);
  if (a.cls == ContractionAnalysis::Class::Linear) j["eta"] = num(a.eta);
  j["strict_contraction"] = evidence_json(a.strict);
  j["dominance"] = evidence_json(a.dominance);
  if (a.mode == PlusMode::Max) j["subdistributivity"] = evidence_json(a.subdistributivity);
  if (a.zeta) j["zeta_above_2r"] = evidence_json(a.zeta_growth);
  if (a.first_violation) j["first_violation"] = num(*a.first_violation);
  if (!a.failure.empty()) j["failure"] = a.failure;
  return j;
}

ordered_json analysis_json(const Analysis& a) {
  ordered_json j;
  j["passed"] = a.passed;
  if (!a.failure.empty()) j["failure"] = a.failure;
  const auto& c = a.certificate;
  j["certificate"] = {{"id", c.id},
                      {"plant", c.plant},
                      {"mode", to_string(c.mode)},
                      {"provenance", c.provenance == Provenance::Analytic ? "analytic" : "sampled"},
                      {"alpha", c.alpha.to_string()},
                      {"beta", c.beta.to_string()},
                      {"gamma", c.gamma.to_string()},
                      {"delta", c.delta.to_string()},
                      {"epsilon", c.epsilon.to_string()},
                      {"phi", c.phi.to_string()}};
  ordered_json summ = ordered_json::object();
  for (const auto& [name, ev] : c.summability)
    summ[name] = {{"passed", ev.passed}, {"sigma", ev.sigma}, {"grid", evidence_json(ev.grid)}};
  j["certificate"]["summability"] = summ;
  j["triangle_growth"] = {{"beta", a.growth.beta.to_string()},
                          {"gamma", a.growth.gamma.to_string()},
                          {"delta", a.growth.delta.to_string()}};
  j["cost"] = {{"id", a.cost.id},
               {"beta_hat", a.cost.beta_hat.to_string()},
               {"gamma_hat", a.cost.gamma_hat.to_string()},
               {"delta_hat", a.cost.delta_hat.to_string()}};
  const auto& w = a.compatibility;
  ordered_json cands = ordered_json::array();
  for (double x : w.candidates) cands.push_back(num(x));
  j["compatibility"] = {{"passed", w.passed},
                        {"B", num(w.B)},
                        {"worst_ratio", num(w.worst_ratio)},
                        {"candidates", cands},
                        {"beta", evidence_json(w.beta)},
                        {"gamma", evidence_json(w.gamma)},
                        {"delta", evidence_json(w.delta)}};
  if (!w.passed) return j;
  j["bounds"] = {{"b", a.bounds.b.to_string()},
                 {"c", a.bounds.c.to_string()},
                 {"d", a.bounds.d.to_string()},
                 {"A", num(a.bounds.A)},
                 {"B", num(a.bounds.B)}};
  j["bound_envelopes"] = evidence_json(a.envelopes);
  if (a.falsification)
    j["falsification"] = {{"pairs", a.falsification->pairs},
                          {"violations", a.falsification->violations},
                          {"worst_margin", num(a.falsification->worst_margin)}};
  if (a.exponential) {
    const auto& e = *a.exponential;
    ordered_json ej = {{"passed", e.passed}, {"lambda", num(e.lambda)}, {"L", num(e.L)}, {"range", e.range}};
    if (e.K_contractive) ej["K_contractive"] = *e.K_contractive;
    if (!e.failure.empty()) ej["failure"] = e.failure;
    j["eventually_exponential"] = ej;
  }
  ordered_json cj = ordered_json::array();
  for (const auto& [K, ca] : a.contraction) {
    auto item = contraction_json(ca);
    if (auto h = a.hats.find(K); h != a.hats.end()) {
      item["hat_bounds"] = {{"b", h->second.b.to_string()},
                            {"c", h->second.c.to_string()},
                            {"d", h->second.d.to_string()},
                            {"kl", evidence_json(h->second.kl)}};
    }
    if (auto r = a.rges.find(K); r != a.rges.end())
      item["rges"] = {{"passed", r->second.passed},
                      {"C", num(r->second.C)},
                      {"lambda", num(r->second.lambda)},
                      {"evidence", evidence_json(r->second.evidence)}};
    cj.push_back(item);
  }
  j["contraction"] = cj;
  ordered_json ex = ordered_json::array();
  for (auto K : a.excluded_K) ex.push_back(K);
  j["excluded_K"] = ex;
  if (a.bar) {
    const auto& b = *a.bar;
    ordered_json table = ordered_json::array();
    for (const auto& [K, f] : b.b) table.push_back({{"K", K}, {"b_bar_1_1", num(f(1.0, 1))}});
    j["bar_bounds"] = {{"K0", b.K0},
                       {"K_max", b.K_max},
                       {"truncation", b.truncation},
                       {"monotone", evidence_json(b.monotone)},
                       {"above_hat", evidence_json(b.above_hat)},
                       {"above_fie", evidence_json(b.above_fie)},
                       {"kl", evidence_json(b.kl)},
                       {"gap_b", num(b.gap_b)},
                       {"gap_c", num(b.gap_c)},
                       {"gap_d", num(b.gap_d)},
                       {"table", table}};
  }
  return j;
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

void write_estimates(const fs::path& p, const CellResult& c) {
  auto os = open_out(p);
  const auto n = c.rows.empty() ? 0 : c.rows.front().x.size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",xhat" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",error,cost,ratio,certified,status\n";
  for (const auto& r : c.rows) {
    os << r.t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(r.xhat[i]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(r.x[i]);
    os << ',' << format_number(r.error) << ',' << format_number(r.cost) << ',' << format_number(r.ratio) << ','
       << (r.certified ? 1 : 0) << ',' << r.status << '\n';
  }
}

void write_bounds(const fs::path& p, const CellResult& c) {
  auto os = open_out(p);
  os << "t,error,fie_rhs,mhe_rhs,step_rhs,ratio,certified,margin\n";
  for (const auto& r : c.rows) {
    os << r.t << ',' << format_number(r.error) << ',' << format_number(r.fie_rhs) << ','
       << (r.mhe_rhs ? format_number(*r.mhe_rhs) : "") << ',' << (r.step_rhs ? format_number(*r.step_rhs) : "")
       << ',' << format_number(r.ratio) << ',' << (r.certified ? 1 : 0) << ',' << format_number(r.margin) << '\n';
  }
}

ordered_json plots_json(const ExperimentOutcome& o) {
  ordered_json plots = ordered_json::array();
  std::set<std::pair<std::string, std::optional<std::size_t>>> seen;
  for (const auto& c : o.cells) {
    if (!seen.insert({c.scenario, c.K}).second) continue;
    ordered_json series = ordered_json::array();
    series.push_back({{"column", "error"}, {"label", "estimation error"}});
    series.push_back({{"column", "fie_rhs"}, {"label", "full information bound"}});
    if (c.K) series.push_back({{"column", "mhe_rhs"}, {"label", "moving horizon bound"}});
    plots.push_back({{"title", c.key},
                     {"data", "bounds/" + c.key + ".csv"},
                     {"x", {{"column", "t"}, {"label", "t"}, {"scale", "linear"}}},
                     {"y", {{"label", "error and bounds"}, {"scale", "log"}}},
                     {"series", series}});
  }
  if (o.verb == Verb::Sweep && o.analysis.bar)
    plots.push_back({{"title", "bar bound b_K(1, 1) over the horizon"},
                     {"data", "sweep.csv"},
                     {"x", {{"column", "K"}, {"label", "K"}, {"scale", "linear"}}},
                     {"y", {{"label", "b_bar_K(1, 1)"}, {"scale", "linear"}}},
                     {"series", ordered_json::array({{{"column", "b_bar_1_1"}, {"label", "b_bar_K(1, 1)"}}})}});
  return {{"schema_version", kOutputSchemaVersion}, {"plots", plots}};
}

}  // namespace

std::string report_json(const ExperimentOutcome& o) {
  ordered_json j;
  j["schema_version"] = kOutputSchemaVersion;
  j["verb"] = to_string(o.verb);
  j["exit_code"] = o.exit_code;
  j["message"] = o.message;
  j["config"] = echo_config(o.config);
  j["analysis"] = analysis_json(o.analysis);
  ordered_json cells = ordered_json::array();
  std::size_t steps = 0, certified = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : o.cells) {
    ordered_json cj = {{"key", c.key},
                       {"scenario", c.scenario},
                       {"seed", c.seed},
                       {"passed", c.passed},
                       {"exit_code", c.exit_code},
                       {"steps", c.rows.size()},
                       {"certified_steps", c.certified_steps},
                       {"min_margin", num(c.min_margin)},
                       {"worst_t", c.worst_t}};
    if (c.K) cj["K"] = *c.K;
    if (!c.error.empty()) cj["error"] = c.error;
    if (c.probe)
      cj["probe"] = {{"perturbation", num(c.probe->perturbation)},
                     {"out_of_range", c.probe->out_of_range},
                     {"passed", c.probe->passed},
                     {"worst_margin", num(c.probe->worst_margin)},
                     {"worst_t", c.probe->worst_t}};
    steps += c.rows.size();
    certified += c.certified_steps;
    if (c.certified_steps > 0) worst = std::min(worst, c.min_margin);
    cells.push_back(cj);
  }
  j["totals"] = {{"cells", o.cells.size()},
                 {"steps", steps},
                 {"certified_steps", certified},
                 {"min_margin", std::isfinite(worst) ? num(worst) : ordered_json(nullptr)}};
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string summary_text(const ExperimentOutcome& o) {
  std::ostringstream os;
  os << to_string(o.verb) << ": " << o.message << " (exit " << o.exit_code << ")\n";
  std::size_t certified = 0, steps = 0, failing = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : o.cells) {
    certified += c.certified_steps;
    steps += c.rows.size();
    if (!c.passed) ++failing;
    if (c.certified_steps > 0) worst = std::min(worst, c.min_margin);
  }
  if (!o.cells.empty()) {
    os << "cells " << o.cells.size() << ", steps " << steps << ", certified " << certified << ", failing cells "
       << failing;
    if (std::isfinite(worst)) os << ", min margin " << format_number(worst);
    os << "\n";
  }
  for (const auto& [K, ca] : o.analysis.contraction) {
    os << "K = " << K << ": " << (ca.passed ? "contraction " + ca.kappa.to_string() : ca.failure);
    if (ca.passed && ca.cls == ContractionAnalysis::Class::Linear) os << " (linear, eta " << format_number(ca.eta) << ")";
    os << "\n";
  }
  if (o.analysis.K0) os << "K0 = " << *o.analysis.K0 << "\n";
  return os.str();
}

void write_outputs(const ExperimentOutcome& o, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  for (const auto& c : o.cells) {
    if (c.rows.empty()) continue;
    write_estimates(root / "estimates" / (c.key + ".csv"), c);
    write_bounds(root / "bounds" / (c.key + ".csv"), c);
    auto os = open_out(root / "truth" / (c.key + ".csv"));
    write_solution_csv(os, c.truth);
  }
  if (o.analysis.falsification) {
    auto os = open_out(root / "falsification.csv");
    write_falsification_csv(os, *o.analysis.falsification);
  }
  if (o.analysis.bar) {
    auto os = open_out(root / "sweep.csv");
    os << "K,kappa,class,eta,b_bar_1_1,threshold_1_1\n";
    for (const auto& [K, f] : o.analysis.bar->b) {
      const auto& ca = o.analysis.contraction.at(K);
      auto th = bar_equality_threshold(*o.analysis.bar, o.analysis.bounds, 1.0, 1);
      os << K << ',' << '"' << ca.kappa.to_string() << '"' << ',' << class_name(ca.cls) << ','
         << format_number(ca.eta) << ',' << format_number(f(1.0, 1)) << ',' << (th ? std::to_string(*th) : "") << '\n';
    }
  }
  {
    auto os = open_out(root / "report.json");
    os << report_json(o);
  }
  {
    auto os = open_out(root / "config.ini");
    os << echo_config(o.config);
  }
  if (o.config.plots) {
    auto os = open_out(root / "plots.json");
    os << plots_json(o).dump(2) << "\n";
  }
}

}  // namespace mhe
