#include <cmath>
#include <regex>

#include "mhe/errors.hpp"
#include "mhe/rng.hpp"
#include "mhe/system.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

std::string DisturbanceScenario::label() const {
  switch (kind) {
    case Kind::Zero:
      return "zero";
    case Kind::BoundedUniform:
      return "uniform(" + format_number(amplitude) + ")";
    case Kind::DecayingGeometric:
      return "decaying(" + format_number(amplitude) + "," + format_number(rate) + ")";
    case Kind::Impulse:
      return "impulse(" + std::to_string(time) + "," + format_number(magnitude) + ")";
  }
  return "?";
}

DisturbanceScenario parse_scenario(const std::string& text, std::size_t horizon) {
  static const std::regex form(R"(\s*([a-z]+)\s*(?:\(\s*([^,\)\s]*)\s*(?:,\s*([^,\)\s]*)\s*)?\))?\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, form)) throw ParseError("scenario: cannot parse '" + text + "'");
  DisturbanceScenario s;
  s.horizon = horizon;
  const std::string kind = m[1];
  auto arg = [&](int i, double fallback) {
    if (!m[i].matched || m[i].length() == 0) return fallback;
    try {
      return std::stod(m[i].str());
    } catch (const std::exception&) {
      throw ParseError("scenario: bad number in '" + text + "'");
    }
  };
  if (kind == "zero") {
    s.kind = DisturbanceScenario::Kind::Zero;
  } else if (kind == "uniform") {
    s.kind = DisturbanceScenario::Kind::BoundedUniform;
    s.amplitude = arg(2, 0.1);
  } else if (kind == "decaying") {
    s.kind = DisturbanceScenario::Kind::DecayingGeometric;
    s.amplitude = arg(2, 1.0);
    s.rate = arg(3, 0.8);
  } else if (kind == "impulse") {
    s.kind = DisturbanceScenario::Kind::Impulse;
    double t = arg(2, static_cast<double>(horizon / 4));
    if (t < 0 || t != std::floor(t)) throw ParseError("scenario: impulse time must be a nonnegative integer");
    s.time = static_cast<std::size_t>(t);
    s.magnitude = arg(3, 1.0);
  } else {
    throw ParseError("scenario: unknown kind '" + kind + "'");
  }
  if (s.amplitude < 0 || s.rate < 0 || s.rate > 1 || s.magnitude < 0)
    throw ParseError("scenario: parameters out of range in '" + text + "'");
  return s;
}

namespace {

Vec clipped(Vec e, double bound) {
  double n = e.norm();
  if (n > bound) e *= bound / n;
  return e;
}

Seq draw(const DisturbanceScenario& spec, int dim, std::uint64_t stream, bool is_process) {
  CounterRng rng(spec.seed, stream);
  Seq out;
  out.reserve(spec.horizon);
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    Vec e = Vec::Zero(dim);
    switch (spec.kind) {
      case DisturbanceScenario::Kind::Zero:
        break;
      case DisturbanceScenario::Kind::BoundedUniform:
        for (int i = 0; i < dim; ++i) e[i] = rng.uniform(-spec.amplitude, spec.amplitude);
        e = clipped(e, spec.amplitude);
        break;
      case DisturbanceScenario::Kind::DecayingGeometric: {
        double env = spec.amplitude * std::pow(spec.rate, static_cast<double>(t));
        for (int i = 0; i < dim; ++i) e[i] = env * rng.uniform(-1.0, 1.0);
        e = clipped(e, env);
        break;
      }
      case DisturbanceScenario::Kind::Impulse:
        if (is_process && t == spec.time) e.setConstant(spec.magnitude / std::sqrt(static_cast<double>(dim)));
        break;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::pair<Seq, Seq> generate_scenario(const DisturbanceScenario& spec, const DisturbanceDims& dims) {
  return {draw(spec, dims.process_noise_dim, 1, true), draw(spec, dims.meas_noise_dim, 2, false)};
}

}  // namespace mhe
