#include <cmath>

#include "mhe/errors.hpp"
#include "mhe/plants.hpp"

namespace mhe {

namespace {

// Scalar plants with additive disturbances: x+ = a(x) + b u + w, y = x + v.
SystemModel scalar_plant(std::string id, std::function<double(double)> a, std::function<double(double)> da, double b) {
  SystemModel m;
  m.id = std::move(id);
  m.f = [a, b](const Vec& x, const Vec& u, const Vec& w) {
    Vec n(1);
    n[0] = a(x[0]) + b * u[0] + w[0];
    return n;
  };
  m.h = [](const Vec& x, const Vec&, const Vec& v) { return Vec(x + v); };
  m.w_from_transition = [a, b](const Vec& x, const Vec& u, const Vec& xn) {
    Vec w(1);
    w[0] = xn[0] - a(x[0]) - b * u[0];
    return w;
  };
  m.w_from_transition_jacobian = [da](const Vec& x, const Vec&, const Vec&, Mat& d_x, Mat& d_next) {
    d_x.setConstant(1, 1, -da(x[0]));
    d_next.setConstant(1, 1, 1.0);
  };
  m.v_from_output = [](const Vec& x, const Vec&, const Vec& y) { return Vec(y - x); };
  m.v_from_output_jacobian = [](const Vec&, const Vec&, const Vec&, Mat& d_x) { d_x.setConstant(1, 1, -1.0); };
  m.state_from_output = [](const Vec&, const Vec& y) { return y; };
  return m;
}

SystemModel plant_s4() {
  SystemModel m;
  m.id = "s4";
  m.state_dim = 2;
  m.process_noise_dim = 2;
  auto drift = [](const Vec& x, const Vec& u) {
    Vec n(2);
    double th = std::tanh(x[1]);
    n[0] = 0.7 * x[0] + 0.1 * th + u[0];
    n[1] = 0.2 * x[0] + 0.6 * x[1] - 0.1 * th;
    return n;
  };
  m.f = [drift](const Vec& x, const Vec& u, const Vec& w) { return Vec(drift(x, u) + w); };
  m.h = [](const Vec& x, const Vec&, const Vec& v) {
    Vec y(1);
    y[0] = x[0] + v[0];
    return y;
  };
  m.w_from_transition = [drift](const Vec& x, const Vec& u, const Vec& xn) { return Vec(xn - drift(x, u)); };
  m.w_from_transition_jacobian = [](const Vec& x, const Vec&, const Vec&, Mat& d_x, Mat& d_next) {
    double th = std::tanh(x[1]);
    double dth = 1.0 - th * th;
    d_x.resize(2, 2);
    d_x << -0.7, -0.1 * dth, -0.2, -(0.6 - 0.1 * dth);
    d_next.setIdentity(2, 2);
  };
  m.v_from_output = [](const Vec& x, const Vec&, const Vec& y) {
    Vec v(1);
    v[0] = y[0] - x[0];
    return v;
  };
  m.v_from_output_jacobian = [](const Vec&, const Vec&, const Vec&, Mat& d_x) {
    d_x.resize(1, 2);
    d_x << -1.0, 0.0;
  };
  m.state_from_output = [](const Vec&, const Vec& y) {
    Vec x = Vec::Zero(2);
    x[0] = y[0];
    return x;
  };
  return m;
}

}  // namespace

SystemModel make_plant(const std::string& id) {
  if (id == "s1") return scalar_plant("s1", [](double x) { return 0.5 * x; }, [](double) { return 0.5; }, 0.0);
  if (id == "s2") {
    auto m = scalar_plant("s2", [](double x) { return 2.0 * x; }, [](double) { return 2.0; }, 1.0);
    m.output_feedback = [](const Vec& y) { return Vec(-1.5 * y); };
    return m;
  }
  if (id == "s3")
    return scalar_plant("s3", [](double x) { return 0.5 * std::sin(x); }, [](double x) { return 0.5 * std::cos(x); },
                        0.0);
  if (id == "s4") return plant_s4();
  throw ConfigError("unknown plant id '" + id + "'");
}

std::vector<std::string> plant_ids() { return {"s1", "s2", "s3", "s4"}; }

}  // namespace mhe
