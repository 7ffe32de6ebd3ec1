#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mhe/comparison.hpp"

namespace mhe::detail {

struct LinearK {
  double c;
};
struct PowerK {
  double c, p;
};
struct PiecewiseLinearK {
  std::vector<double> x, y;
};
struct CompositionK {
  std::vector<ScalarKFn> stages;
};
struct InverseK {
  ScalarKFn f;
};
struct SectionK {
  KLFn f;
  std::int64_t s;
};
struct SumK {
  std::vector<ScalarKFn> terms;
};
struct GapK {
  double theta;
  ScalarKFn f;
};
struct SeriesK {
  KLFn f;
};

struct ScalarNode {
  std::variant<LinearK, PowerK, PiecewiseLinearK, CompositionK, InverseK, SectionK, SumK, GapK, SeriesK> v;
  std::optional<double> linear;  // cached exact slope, if any

  static ScalarKFn make(ScalarNode node);
};

struct GeometricKL {
  double c, p, lambda;
};
struct TabulatedKL {
  std::vector<double> r;
  std::vector<std::vector<double>> rows;
};
struct ScaledShiftKL {
  KLFn base;
  double out;
  std::vector<double> r_scale;
  std::int64_t shift;

  double scale_at(std::int64_t s) const {
    if (r_scale.empty()) return 1.0;
    auto idx = static_cast<std::size_t>(s);
    return idx < r_scale.size() ? r_scale[idx] : r_scale.back();
  }
};
struct MaxKL {
  std::vector<KLFn> terms;
};
struct SumKL {
  std::vector<KLFn> terms;
};
struct IteratedKL {
  ScalarKFn kappa, sigma;
};
struct WindowIteratedKL {
  ScalarKFn kappa;
  KLFn theta;
  int window;
  double pre;
};
struct WindowSummedKL {
  ScalarKFn kappa, zeta;
  KLFn theta;
  int window;
  double pre;
};
struct InnerDiscountedKL {
  ScalarKFn kappa;
  KLFn gamma;
  int window;
};

struct KLNode {
  std::variant<GeometricKL, TabulatedKL, ScaledShiftKL, MaxKL, SumKL, IteratedKL, WindowIteratedKL, WindowSummedKL,
               InnerDiscountedKL>
      v;

  static KLFn make(KLNode node);
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace mhe::detail
