#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sones/error.hpp"

namespace sones {

/// Uniformly sampled trajectory: sample k sits at t0 + k * step.
struct Trajectory {
  double t0 = 0.0;
  double step = 0.0;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> outputs;  // optional per-sample measurement, empty when not recorded

  std::size_t size() const { return states.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * step; }
};

/// Number of fixed steps covering [t0, t1]; span must be an integer multiple of dt.
inline std::size_t step_count(double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("integration step must be positive");
  if (!(t1 >= t0)) throw InvalidArgument("integration span must be non-negative");
  const double ratio = (t1 - t0) / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
    throw InvalidArgument("integration span is not a whole number of steps");
  return static_cast<std::size_t>(n);
}

/// One classical fourth-order Runge-Kutta step.
template <class Rhs>
Eigen::VectorXd rk4_step(Rhs& rhs, double t, const Eigen::VectorXd& x, double dt) {
  const Eigen::VectorXd k1 = rhs(t, x);
  const Eigen::VectorXd k2 = rhs(t + 0.5 * dt, Eigen::VectorXd(x + 0.5 * dt * k1));
  const Eigen::VectorXd k3 = rhs(t + 0.5 * dt, Eigen::VectorXd(x + 0.5 * dt * k2));
  const Eigen::VectorXd k4 = rhs(t + dt, Eigen::VectorXd(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 from t0 to t1. observe(k, t, x) runs at every step including k = 0;
/// returning false stops early. Throws DivergenceError on the first non-finite state.
/// Times are t0 + k * dt, never accumulated.
template <class Rhs, class Observer>
Eigen::VectorXd integrate_observed(Rhs&& rhs, Eigen::VectorXd x, double t0, double t1, double dt,
                                   Observer&& observe) {
  const std::size_t n = step_count(t0, t1, dt);
  if (!x.allFinite()) throw DivergenceError("non-finite initial state", t0);
  if (!observe(std::size_t{0}, t0, static_cast<const Eigen::VectorXd&>(x))) return x;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    x = rk4_step(rhs, t, x, dt);
    const double t_next = t0 + static_cast<double>(k + 1) * dt;
    if (!x.allFinite())
      throw DivergenceError("state diverged (non-finite) at t = " + std::to_string(t_next), t_next);
    if (!observe(k + 1, t_next, static_cast<const Eigen::VectorXd&>(x))) break;
  }
  return x;
}

/// Fixed-step RK4 recording every `record_every`-th state. The trajectory step is
/// dt * record_every and holds (span / step) + 1 samples.
template <class Rhs>
Trajectory integrate(Rhs&& rhs, const Eigen::VectorXd& x0, double t0, double t1, double dt,
                     std::size_t record_every = 1,
                     const std::function<double(double, const Eigen::VectorXd&)>& output = {}) {
  if (record_every == 0) throw InvalidArgument("record_every must be positive");
  const std::size_t n = step_count(t0, t1, dt);
  if (n % record_every != 0) throw InvalidArgument("step count is not a multiple of record_every");
  Trajectory traj{t0, dt * static_cast<double>(record_every), {}, {}};
  traj.states.reserve(n / record_every + 1);
  if (output) traj.outputs.reserve(n / record_every + 1);
  integrate_observed(rhs, x0, t0, t1, dt, [&](std::size_t k, double t, const Eigen::VectorXd& x) {
    if (k % record_every == 0) {
      traj.states.push_back(x);
      if (output) traj.outputs.push_back(output(t, x));
    }
    return true;
  });
  return traj;
}

}  // namespace sones
