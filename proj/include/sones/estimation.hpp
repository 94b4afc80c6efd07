#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "sones/error.hpp"
#include "sones/polynomial.hpp"
#include "sones/probing.hpp"

namespace sones {

/// Quadrature for one-period averages (1/Pi) * integral_0^Pi f(t) dt.
struct QuadratureSpec {
  int samples_per_cycle = 64;  // per cycle of the fastest demodulation harmonic, >= 50
  double tolerance = 1e-9;     // absolute, max-norm over components
  int max_doublings = 8;

  /// Even starting interval count for a period holding `cycles` fastest-harmonic cycles.
  std::size_t initial_intervals(std::int64_t cycles) const {
    if (samples_per_cycle < 50) throw InvalidArgument("quadrature needs >= 50 samples per cycle");
    if (cycles < 1) throw InvalidArgument("quadrature needs at least one cycle per period");
    std::size_t n = static_cast<std::size_t>(cycles) * static_cast<std::size_t>(samples_per_cycle);
    return n + (n % 2);
  }
};

namespace detail {

inline double max_abs(double v) { return std::abs(v); }

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// Composite Simpson over a periodic grid, doubled until two successive levels agree.
/// sample(k, n) returns f(k * Pi / n). With periodicity the Simpson weights collapse to
/// 2 on even and 4 on odd nodes, total 3n.
template <class Sample>
auto simpson_periodic(Sample&& sample, std::size_t n0, const QuadratureSpec& spec) {
  using V = std::decay_t<decltype(sample(std::size_t{0}, std::size_t{2}))>;
  if (n0 < 2 || n0 % 2 != 0) throw InvalidArgument("simpson grid needs an even interval count");
  std::size_t n = n0;
  V even = sample(0, n);
  V odd = sample(1, n);
  for (std::size_t k = 2; k < n; ++k) {
    if (k % 2 == 0)
      even += sample(k, n);
    else
      odd += sample(k, n);
  }
  V estimate = (2.0 * even + 4.0 * odd) / (3.0 * static_cast<double>(n));
  for (int level = 0; level < spec.max_doublings; ++level) {
    even += odd;
    n *= 2;
    odd = sample(1, n);
    for (std::size_t k = 3; k < n; k += 2) odd += sample(k, n);
    V refined = (2.0 * even + 4.0 * odd) / (3.0 * static_cast<double>(n));
    const double change = max_abs(V(refined - estimate));
    estimate = std::move(refined);
    if (change < spec.tolerance) return estimate;
  }
  throw QuadratureError("periodic average did not converge to tolerance " + std::to_string(spec.tolerance));
}

}  // namespace detail

/// (1/Pi) * integral over one period of f, f returning double or an Eigen vector/matrix.
/// `cycles` is the number of fastest-harmonic cycles within the period (sets the grid).
template <class F>
auto periodic_average(F&& f, double period, const QuadratureSpec& spec, std::int64_t cycles = 1) {
  if (!(period > 0.0)) throw InvalidArgument("averaging period must be positive");
  return detail::simpson_periodic(
      [&](std::size_t k, std::size_t n) { return f(period * static_cast<double>(k) / static_cast<double>(n)); },
      spec.initial_intervals(cycles), spec);
}

/// Period averages of y * N_m, y * P_m and y for y = h(center + S(t)).
struct DemodulationAverages {
  Eigen::VectorXd n_m;
  Eigen::MatrixXd p_m;
  double y = 0.0;
};

/// Dither and demodulation signals tabulated on a periodic grid, so repeated averages
/// (the averaged closed loop calls this thousands of times) cost only map evaluations.
class DemodulationTable {
 public:
  DemodulationTable(const ProbingConfig& cfg, const QuadratureSpec& spec)
      : cfg_(cfg), spec_(spec), period_(averaging_period(cfg)) {
    n0_ = spec_.initial_intervals(fastest_demod_cycles(cfg_));
    levels_ = n0_ * 2;
    const std::size_t p = cfg_.dim();
    const std::size_t stride = row_size();
    data_.resize(levels_ * stride);
    ProbeSignals sig;
    for (std::size_t k = 0; k < levels_; ++k) {
      probe_signals(cfg_, time(k, levels_), sig);
      double* row = &data_[k * stride];
      for (std::size_t i = 0; i < p; ++i) {
        row[i] = sig.dither(i);
        row[p + i] = sig.n_m(i);
      }
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) row[2 * p + i * p + j] = sig.p_m(i, j);
    }
  }

  const ProbingConfig& config() const { return cfg_; }
  double period() const { return period_; }

  /// Packed averages [y*N_m (p), y*P_m (p*p, row-major), y (1)] for y = map(center + S).
  template <StaticMap Map>
  Eigen::VectorXd packed_averages(const Map& map, const Eigen::Ref<const Eigen::VectorXd>& center) const {
    const std::size_t p = cfg_.dim();
    if (static_cast<std::size_t>(center.size()) != p) throw InvalidArgument("center has wrong dimension");
    const std::size_t width = p + p * p + 1;
    const std::size_t stride = row_size();
    std::vector<double> theta(p);

    // Fast path: Simpson on the n0 and 2 n0 grids straight from the table.
    Eigen::VectorXd coarse = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    Eigen::VectorXd fine = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    for (std::size_t k = 0; k < levels_; ++k) {
      const double* row = &data_[k * stride];
      for (std::size_t i = 0; i < p; ++i) theta[i] = center(i) + row[i];
      const double y = map(std::span<const double>(theta));
      const double wf = (k % 2 == 0) ? 2.0 : 4.0;
      const double wc = (k % 2 != 0) ? 0.0 : ((k / 2) % 2 == 0 ? 2.0 : 4.0);
      for (std::size_t c = 0; c + 1 < width; ++c) {
        const double v = y * row[p + c];
        fine(static_cast<Eigen::Index>(c)) += wf * v;
        coarse(static_cast<Eigen::Index>(c)) += wc * v;
      }
      fine(static_cast<Eigen::Index>(width - 1)) += wf * y;
      coarse(static_cast<Eigen::Index>(width - 1)) += wc * y;
    }
    fine /= 3.0 * static_cast<double>(levels_);
    coarse /= 3.0 * static_cast<double>(n0_);
    if (detail::max_abs(Eigen::VectorXd(fine - coarse)) < spec_.tolerance) return fine;

    ProbeSignals sig;
    auto sample = [&](std::size_t k, std::size_t n) {
      Eigen::VectorXd v(p + p * p + 1);
      const double* row = nullptr;
      if (levels_ % n == 0) {
        row = &data_[k * (levels_ / n) * row_size()];
      } else {
        probe_signals(cfg_, time(k, n), sig);
      }
      for (std::size_t i = 0; i < p; ++i) theta[i] = center(i) + (row ? row[i] : sig.dither(i));
      const double y = map(std::span<const double>(theta));
      for (std::size_t i = 0; i < p; ++i) v(i) = y * (row ? row[p + i] : sig.n_m(i));
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) v(p + i * p + j) = y * (row ? row[2 * p + i * p + j] : sig.p_m(i, j));
      v(p + p * p) = y;
      return v;
    };
    return detail::simpson_periodic(sample, n0_, spec_);
  }

  template <StaticMap Map>
  DemodulationAverages averages(const Map& map, const Eigen::Ref<const Eigen::VectorXd>& center) const {
    const std::size_t p = cfg_.dim();
    const Eigen::VectorXd v = packed_averages(map, center);
    DemodulationAverages out{v.head(p), Eigen::MatrixXd(p, p), v(p + p * p)};
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) out.p_m(i, j) = v(p + i * p + j);
    return out;
  }

 private:
  std::size_t row_size() const { return 2 * cfg_.dim() + cfg_.dim() * cfg_.dim(); }
  double time(std::size_t k, std::size_t n) const {
    return period_ * static_cast<double>(k) / static_cast<double>(n);
  }

  ProbingConfig cfg_;
  QuadratureSpec spec_;
  double period_;
  std::size_t n0_ = 0;
  std::size_t levels_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require_valid(const ProbingConfig& cfg, ValidationLevel level, const char* who) {
  const auto violations = validate_frequencies(cfg.frequencies(), level);
  if (violations.empty()) return;
  std::string msg = std::string(who) + ": probing frequencies violate " + std::to_string(violations.size()) +
                    " condition(s); first: " + violations.front().describe();
  throw PreconditionError(msg);
}

inline Eigen::VectorXd as_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace detail

/// Open-loop Hessian estimate: entry (i, j) = (1/Pi) integral N_ij(t) h(theta_hat + S(t)) dt.
template <StaticMap Map>
Eigen::MatrixXd estimate_hessian(const Map& map, std::span<const double> theta_hat, const ProbingConfig& cfg,
                                 const QuadratureSpec& spec = {}) {
  detail::require_valid(cfg, ValidationLevel::hessian_only, "estimate_hessian");
  const std::size_t p = cfg.dim();
  if (theta_hat.size() != p) throw InvalidArgument("theta_hat has wrong dimension");
  std::vector<double> theta(p);
  auto integrand = [&](double t) {
    for (std::size_t i = 0; i < p; ++i) theta[i] = theta_hat[i] + cfg.amplitude(i) * std::sin(cfg.omega(i) * t);
    const double y = map(std::span<const double>(theta));
    Eigen::MatrixXd n = demod_N_matrix(cfg, t);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(n.data(), n.size()) * y);
  };
  const Eigen::VectorXd flat = periodic_average(integrand, averaging_period(cfg), spec, fastest_demod_cycles(cfg));
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
}

/// Estimate of H_m, the Hessian column along the target axis, via the N_m demodulator.
template <StaticMap Map>
Eigen::VectorXd estimate_hessian_column(const Map& map, std::span<const double> theta_hat,
                                        const ProbingConfig& cfg, const QuadratureSpec& spec = {}) {
  detail::require_valid(cfg, ValidationLevel::hessian_only, "estimate_hessian_column");
  if (theta_hat.size() != cfg.dim()) throw InvalidArgument("theta_hat has wrong dimension");
  return DemodulationTable(cfg, spec).averages(map, detail::as_vector(theta_hat)).n_m;
}

/// Estimate of the third-derivative slice T_m: entry (i, j) = (1/Pi) integral P_{m,i,j} y dt.
template <StaticMap Map>
Eigen::MatrixXd estimate_third_slice(const Map& map, std::span<const double> theta_hat, const ProbingConfig& cfg,
                                     const QuadratureSpec& spec = {}) {
  detail::require_valid(cfg, ValidationLevel::full, "estimate_third_slice");
  if (theta_hat.size() != cfg.dim()) throw InvalidArgument("theta_hat has wrong dimension");
  return DemodulationTable(cfg, spec).averages(map, detail::as_vector(theta_hat)).p_m;
}

}  // namespace sones
