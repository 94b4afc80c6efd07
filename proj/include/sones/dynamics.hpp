#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sones/eigen.hpp"
#include "sones/error.hpp"
#include "sones/estimation.hpp"
#include "sones/filters.hpp"
#include "sones/integrator.hpp"
#include "sones/polynomial.hpp"
#include "sones/probing.hpp"

namespace sones {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Newton loop state. Also used for the error coordinates
/// (theta~, H^_m, Lambda~_m, T~_m, eta~) relative to a known inflection point.
struct SonesState {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd h_hat;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd t_hat;
  double eta = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(theta_hat.size()); }

  static std::size_t flat_size(std::size_t p) { return 2 * p + 2 * p * p + 1; }

  /// [theta_hat, h_hat, lambda (row-major), t_hat (row-major), eta]
  Eigen::VectorXd flatten() const {
    const auto p = static_cast<Eigen::Index>(dim());
    if (h_hat.size() != p || lambda.rows() != p || lambda.cols() != p || t_hat.rows() != p || t_hat.cols() != p)
      throw InvalidArgument("SonesState blocks have inconsistent dimensions");
    Eigen::VectorXd x(static_cast<Eigen::Index>(flat_size(dim())));
    x.segment(0, p) = theta_hat;
    x.segment(p, p) = h_hat;
    Eigen::Map<RowMatrix>(x.data() + 2 * p, p, p) = lambda;
    Eigen::Map<RowMatrix>(x.data() + 2 * p + p * p, p, p) = t_hat;
    x(2 * p + 2 * p * p) = eta;
    return x;
  }

  static SonesState unflatten(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t dim) {
    const auto p = static_cast<Eigen::Index>(dim);
    if (static_cast<std::size_t>(x.size()) != flat_size(dim)) throw InvalidArgument("flat SONES state has wrong length");
    SonesState s;
    s.theta_hat = x.segment(0, p);
    s.h_hat = x.segment(p, p);
    s.lambda = Eigen::Map<const RowMatrix>(x.data() + 2 * p, p, p);
    s.t_hat = Eigen::Map<const RowMatrix>(x.data() + 2 * p + p * p, p, p);
    s.eta = x(2 * p + 2 * p * p);
    return s;
  }
};

/// Adaptation gain K (diagonal, positive) and filter corners. `delta` is the averaging-analysis
/// scale; it is recorded for reports and does not rescale the gains.
struct GainConfig {
  Eigen::VectorXd k;
  FilterGains filters;
  double delta = 1.0;

  void validate(std::size_t p) const {
    if (static_cast<std::size_t>(k.size()) != p) throw InvalidArgument("gain K has wrong dimension");
    if ((k.array() <= 0.0).any()) throw InvalidArgument("gain K must have positive diagonal entries");
    filters.validate();
  }
};

/// Largest admissible fixed step: 40 samples per cycle of the fastest demodulation harmonic.
inline double max_step(const ProbingConfig& cfg) { return (2.0 * std::numbers::pi / (3.0 * cfg.max_omega())) / 40.0; }

/// min(1e-4 s, 2 pi / (120 max omega)).
inline double default_step(const ProbingConfig& cfg) {
  return std::min(1e-4, 2.0 * std::numbers::pi / (120.0 * cfg.max_omega()));
}

/// T^_m(0) = -50 I, Lambda_m(0) = T^_m(0)^{-1}, H^_m(0) = 0, eta(0) = h(theta_hat(0)).
template <StaticMap Map>
SonesState default_initial_state(const Map& map, const Eigen::VectorXd& theta0) {
  const auto p = theta0.size();
  SonesState s;
  s.theta_hat = theta0;
  s.h_hat = Eigen::VectorXd::Zero(p);
  s.t_hat = -50.0 * Eigen::MatrixXd::Identity(p, p);
  s.lambda = s.t_hat.inverse();
  s.eta = map(std::span<const double>(theta0.data(), static_cast<std::size_t>(p)));
  return s;
}

/// Second-order Newton-based extremum seeking loop in measurement coordinates:
///   theta^' = -K Lambda H^
///   H^'     = w_l ((y - eta) N_m(t) - H^)
///   Lambda' = w_r Lambda (I - T^ Lambda)
///   T^'     = w_l ((y - eta) P_m(t) - T^)
///   eta'    = w_h (y - eta)
/// with y = h(theta^ + S(t)). The inflection point never enters.
template <StaticMap Map>
class SonesLoop {
 public:
  SonesLoop(Map map, ProbingConfig cfg, GainConfig gains)
      : map_(std::move(map)), cfg_(std::move(cfg)), gains_(std::move(gains)) {
    gains_.validate(cfg_.dim());
    detail::require_valid(cfg_, ValidationLevel::full, "SONES loop");
  }

  const Map& map() const { return map_; }
  const ProbingConfig& probing() const { return cfg_; }
  const GainConfig& gains() const { return gains_; }
  std::size_t state_size() const { return SonesState::flat_size(cfg_.dim()); }

  /// Measured output y = h(theta_hat + S(t)).
  double output(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const std::size_t p = cfg_.dim();
    std::vector<double> theta(p);
    for (std::size_t i = 0; i < p; ++i)
      theta[i] = x(static_cast<Eigen::Index>(i)) + cfg_.amplitude(i) * std::sin(cfg_.omega(i) * t);
    return map_(std::span<const double>(theta));
  }

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const {
    const std::size_t p = cfg_.dim();
    const auto n = static_cast<Eigen::Index>(p);
    if (static_cast<std::size_t>(x.size()) != state_size()) throw InvalidArgument("SONES state has wrong length");
    ProbeSignals sig;
    probe_signals(cfg_, t, sig);
    std::vector<double> theta(p);
    for (std::size_t i = 0; i < p; ++i) theta[i] = x(static_cast<Eigen::Index>(i)) + sig.dither(static_cast<Eigen::Index>(i));
    const double y = map_(std::span<const double>(theta));
    const double eta = x(2 * n + 2 * n * n);
    const double e = washout_output(y, eta);

    const auto h_hat = x.segment(n, n);
    const Eigen::MatrixXd lambda = Eigen::Map<const RowMatrix>(x.data() + 2 * n, n, n);
    const Eigen::MatrixXd t_hat = Eigen::Map<const RowMatrix>(x.data() + 2 * n + n * n, n, n);
    const FilterGains& f = gains_.filters;

    Eigen::VectorXd dx(x.size());
    dx.segment(0, n) = -(gains_.k.array() * (lambda * h_hat).array()).matrix();
    dx.segment(n, n) = lowpass_rhs(h_hat, e * sig.n_m, f.low_pass);
    Eigen::Map<RowMatrix>(dx.data() + 2 * n, n, n) = riccati_rhs(lambda, t_hat, f.riccati);
    Eigen::Map<RowMatrix>(dx.data() + 2 * n + n * n, n, n) = lowpass_rhs(t_hat, e * sig.p_m, f.low_pass);
    dx(2 * n + 2 * n * n) = washout_rhs(eta, y, f.high_pass);
    return dx;
  }

  SonesState rhs(const SonesState& s, double t) const {
    return SonesState::unflatten((*this)(t, s.flatten()), cfg_.dim());
  }

 private:
  Map map_;
  ProbingConfig cfg_;
  GainConfig gains_;
};

/// One evaluation of the SONES right-hand side (validates its inputs on every call).
template <StaticMap Map>
SonesState sones_rhs(const SonesState& s, double t, const Map& map, const ProbingConfig& cfg, const GainConfig& g) {
  if (s.dim() != cfg.dim()) throw InvalidArgument("state and probing dimensions differ");
  return SonesLoop<const Map&>(map, cfg, g).rhs(s, t);
}

/// Reduced state of the second-order gradient loop.
struct Grad2State {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd h_hat;
  double eta = 0.0;

  static std::size_t flat_size(std::size_t p) { return 2 * p + 1; }

  Eigen::VectorXd flatten() const {
    const auto p = theta_hat.size();
    Eigen::VectorXd x(2 * p + 1);
    x << theta_hat, h_hat, eta;
    return x;
  }

  static Grad2State unflatten(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t dim) {
    const auto p = static_cast<Eigen::Index>(dim);
    if (static_cast<std::size_t>(x.size()) != flat_size(dim)) throw InvalidArgument("flat gradient state has wrong length");
    return {x.segment(0, p), x.segment(p, p), x(2 * p)};
  }
};

/// Second-order gradient-based loop: theta^' = K H^ (stable since T_m < 0),
/// H^' = w_l ((y - eta) N_m - H^), eta' = w_h (y - eta).
template <StaticMap Map>
class Grad2Loop {
 public:
  Grad2Loop(Map map, ProbingConfig cfg, GainConfig gains)
      : map_(std::move(map)), cfg_(std::move(cfg)), gains_(std::move(gains)) {
    gains_.validate(cfg_.dim());
    detail::require_valid(cfg_, ValidationLevel::hessian_only, "gradient loop");
  }

  const ProbingConfig& probing() const { return cfg_; }
  std::size_t state_size() const { return Grad2State::flat_size(cfg_.dim()); }

  double output(double t, const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const std::size_t p = cfg_.dim();
    std::vector<double> theta(p);
    for (std::size_t i = 0; i < p; ++i)
      theta[i] = x(static_cast<Eigen::Index>(i)) + cfg_.amplitude(i) * std::sin(cfg_.omega(i) * t);
    return map_(std::span<const double>(theta));
  }

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(cfg_.dim());
    if (static_cast<std::size_t>(x.size()) != state_size()) throw InvalidArgument("gradient state has wrong length");
    const double y = output(t, x);
    const double eta = x(2 * n);
    const Eigen::VectorXd n_m = demod_N_vector(cfg_, t);
    Eigen::VectorXd dx(x.size());
    dx.segment(0, n) = (gains_.k.array() * x.segment(n, n).array()).matrix();
    dx.segment(n, n) = lowpass_rhs(x.segment(n, n), washout_output(y, eta) * n_m, gains_.filters.low_pass);
    dx(2 * n) = washout_rhs(eta, y, gains_.filters.high_pass);
    return dx;
  }

  Grad2State rhs(const Grad2State& s, double t) const {
    return Grad2State::unflatten((*this)(t, s.flatten()), cfg_.dim());
  }

 private:
  Map map_;
  ProbingConfig cfg_;
  GainConfig gains_;
};

template <StaticMap Map>
Grad2State grad2_rhs(const Grad2State& s, double t, const Map& map, const ProbingConfig& cfg, const GainConfig& g) {
  return Grad2Loop<const Map&>(map, cfg, g).rhs(s, t);
}

/// Runs a closed loop (SonesLoop or Grad2Loop) with fixed-step RK4, recording y alongside the state.
template <class Loop>
Trajectory simulate(const Loop& loop, const Eigen::VectorXd& x0, double duration, double dt,
                    std::size_t record_every = 1) {
  if (dt > max_step(loop.probing()) * (1.0 + 1e-12))
    throw InvalidArgument("step " + std::to_string(dt) + " s does not resolve the fastest demodulation harmonic (max " +
                          std::to_string(max_step(loop.probing())) + " s)");
  return integrate(loop, x0, 0.0, duration, dt, record_every,
                   [&](double t, const Eigen::VectorXd& x) { return loop.output(t, x); });
}

// ---------------------------------------------------------------------------
// Analysis relative to a known inflection point
// ---------------------------------------------------------------------------

/// theta*, h(theta*), T_m = d^2 G_m(theta*) / d theta^2 and its inverse.
struct InflectionReference {
  Eigen::VectorXd theta_star;
  double h_star = 0.0;
  Eigen::MatrixXd t_m;
  Eigen::MatrixXd t_m_inv;
};

inline InflectionReference make_reference(const PolynomialMap& map, std::span<const double> theta_star,
                                          std::size_t axis) {
  if (theta_star.size() != map.dim()) throw InvalidArgument("theta_star has wrong dimension");
  if (axis >= map.dim()) throw InvalidArgument("axis out of range");
  InflectionReference ref;
  ref.theta_star = detail::as_vector(theta_star);
  ref.h_star = map(theta_star);
  ref.t_m = derivative_bundle(map, theta_star).third.slice(axis);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ref.t_m);
  if (!lu.isInvertible()) throw SingularityError("third-derivative slice T_m is singular at theta_star");
  ref.t_m_inv = lu.inverse();
  return ref;
}

inline SonesState to_error_coordinates(const SonesState& s, const InflectionReference& ref) {
  return {s.theta_hat - ref.theta_star, s.h_hat, s.lambda - ref.t_m_inv, s.t_hat - ref.t_m, s.eta - ref.h_star};
}

inline SonesState from_error_coordinates(const SonesState& e, const InflectionReference& ref) {
  return {e.theta_hat + ref.theta_star, e.h_hat, e.lambda + ref.t_m_inv, e.t_hat + ref.t_m, e.eta + ref.h_star};
}

/// The closed loop written directly in error coordinates (theta~, H^, Lambda~, T~, eta~),
/// with Lambda~ + T_m^{-1} in the Riccati row.
template <StaticMap Map>
SonesState sones_error_rhs(const SonesState& err, double t, const Map& map, const ProbingConfig& cfg,
                           const GainConfig& g, const InflectionReference& ref) {
  const auto p = static_cast<Eigen::Index>(cfg.dim());
  const Eigen::VectorXd theta = ref.theta_star + err.theta_hat + dither(cfg, t);
  const double y = map(std::span<const double>(theta.data(), static_cast<std::size_t>(p)));
  const double e = y - ref.h_star - err.eta;
  const Eigen::MatrixXd lambda = err.lambda + ref.t_m_inv;
  const Eigen::MatrixXd t_hat = err.t_hat + ref.t_m;
  const FilterGains& f = g.filters;
  SonesState d;
  d.theta_hat = -(g.k.asDiagonal() * (lambda * err.h_hat));
  d.h_hat = -f.low_pass * err.h_hat + f.low_pass * e * demod_N_vector(cfg, t);
  d.lambda = f.riccati * lambda * (Eigen::MatrixXd::Identity(p, p) - t_hat * lambda);
  d.t_hat = -f.low_pass * t_hat + f.low_pass * e * demod_P_matrix(cfg, t);
  d.eta = -f.high_pass * err.eta + f.high_pass * (y - ref.h_star);
  return d;
}

/// Averaged closed loop in error coordinates:
///   theta~' = -K (Lambda~ + T^-1) H^
///   H^'     = w_l (-H^ + avg[nu(theta~ + S) N_m])
///   Lambda~'= w_r (Lambda~ + T^-1)(I - (T~ + T)(Lambda~ + T^-1))
///   T~'     = w_l (-(T~ + T) + avg[nu(theta~ + S) P_m])
///   eta~'   = w_h (-eta~ + avg[nu(theta~ + S)])
/// with nu(q) = h(theta* + q) - h(theta*) and one-period averages by quadrature.
class AveragedSones {
 public:
  AveragedSones(const PolynomialMap& map, std::span<const double> theta_star, const ProbingConfig& cfg,
                GainConfig gains, const QuadratureSpec& spec = {})
      : nu_(recenter(map, theta_star)),
        ref_(make_reference(map, theta_star, cfg.axis())),
        cfg_(cfg),
        gains_(std::move(gains)),
        table_((detail::require_valid(cfg, ValidationLevel::full, "averaged system"), cfg), spec) {
    if (map.dim() != cfg.dim()) throw InvalidArgument("map and probing dimensions differ");
    gains_.validate(cfg_.dim());
  }

  const InflectionReference& reference() const { return ref_; }
  const PolynomialMap& nu() const { return nu_; }
  const ProbingConfig& probing() const { return cfg_; }
  const GainConfig& gains() const { return gains_; }
  std::size_t state_size() const { return SonesState::flat_size(cfg_.dim()); }

  /// Averages of nu(theta~ + S) against N_m, P_m and 1.
  DemodulationAverages averages(const Eigen::Ref<const Eigen::VectorXd>& theta_tilde) const {
    return table_.averages(nu_, theta_tilde);
  }

  Eigen::VectorXd operator()(double /*t*/, const Eigen::VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(cfg_.dim());
    if (static_cast<std::size_t>(x.size()) != state_size()) throw InvalidArgument("averaged state has wrong length");
    const Eigen::VectorXd packed = table_.packed_averages(nu_, x.segment(0, n));
    const auto h_hat = x.segment(n, n);
    const Eigen::MatrixXd lambda = Eigen::Map<const RowMatrix>(x.data() + 2 * n, n, n) + ref_.t_m_inv;
    const Eigen::MatrixXd t_hat = Eigen::Map<const RowMatrix>(x.data() + 2 * n + n * n, n, n) + ref_.t_m;
    const Eigen::MatrixXd avg_p = Eigen::Map<const RowMatrix>(packed.data() + n, n, n);
    const double eta = x(2 * n + 2 * n * n);
    const FilterGains& f = gains_.filters;

    Eigen::VectorXd dx(x.size());
    dx.segment(0, n) = -(gains_.k.array() * (lambda * h_hat).array()).matrix();
    dx.segment(n, n) = lowpass_rhs(h_hat, packed.head(n), f.low_pass);
    Eigen::Map<RowMatrix>(dx.data() + 2 * n, n, n) = riccati_rhs(lambda, t_hat, f.riccati);
    Eigen::Map<RowMatrix>(dx.data() + 2 * n + n * n, n, n) = lowpass_rhs(t_hat, avg_p, f.low_pass);
    dx(2 * n + 2 * n * n) = washout_rhs(eta, packed(n + n * n), f.high_pass);
    return dx;
  }

  SonesState rhs(const SonesState& err) const { return SonesState::unflatten((*this)(0.0, err.flatten()), cfg_.dim()); }

 private:
  PolynomialMap nu_;
  InflectionReference ref_;
  ProbingConfig cfg_;
  GainConfig gains_;
  DemodulationTable table_;
};

inline SonesState averaged_rhs(const SonesState& err, const PolynomialMap& map, std::span<const double> theta_star,
                               const ProbingConfig& cfg, const GainConfig& g, const QuadratureSpec& spec = {}) {
  return AveragedSones(map, theta_star, cfg, g, spec).rhs(err);
}

/// Reference start in error coordinates: theta^(0) = 0, T^(0) = -50 I, Lambda(0) = T^(0)^-1,
/// H^(0) = 0, eta~(0) = 0.
inline SonesState default_averaged_start(const AveragedSones& sys) {
  const auto p = static_cast<Eigen::Index>(sys.probing().dim());
  SonesState s;
  s.theta_hat = -sys.reference().theta_star;
  s.h_hat = Eigen::VectorXd::Zero(p);
  const Eigen::MatrixXd t0 = -50.0 * Eigen::MatrixXd::Identity(p, p);
  s.t_hat = t0 - sys.reference().t_m;
  s.lambda = t0.inverse() - sys.reference().t_m_inv;
  s.eta = 0.0;
  return s;
}

struct EquilibriumOptions {
  double dt = 0.0;  // 0: 0.2 / max filter corner
  double t_max = 20000.0;
  double tolerance = 1e-9;  // on the max-norm of the right-hand side
};

struct Equilibrium {
  SonesState state;  // error coordinates
  double residual = 0.0;
  double time = 0.0;
};

/// Integrates the averaged system until ||rhs||_inf < tolerance.
inline Equilibrium averaged_equilibrium(const AveragedSones& sys, const SonesState& start,
                                        const EquilibriumOptions& opt = {}) {
  const FilterGains& f = sys.gains().filters;
  const double fastest = std::max({f.low_pass, f.high_pass, f.riccati, sys.gains().k.maxCoeff()});
  const double dt = opt.dt > 0.0 ? opt.dt : 0.2 / fastest;
  const double t_end = std::ceil(opt.t_max / dt) * dt;
  Equilibrium eq;
  bool converged = false;
  Eigen::VectorXd last;
  integrate_observed(sys, start.flatten(), 0.0, t_end, dt, [&](std::size_t, double t, const Eigen::VectorXd& x) {
    eq.residual = sys(t, x).cwiseAbs().maxCoeff();
    eq.time = t;
    last = x;
    converged = eq.residual < opt.tolerance;
    return !converged;
  });
  if (!converged)
    throw ConvergenceError("averaged system did not settle within t = " + std::to_string(opt.t_max) +
                           " s (residual " + std::to_string(eq.residual) + ")");
  eq.state = SonesState::unflatten(last, sys.probing().dim());
  return eq;
}

inline Equilibrium averaged_equilibrium(const AveragedSones& sys, const EquilibriumOptions& opt = {}) {
  return averaged_equilibrium(sys, default_averaged_start(sys), opt);
}

/// Jacobian of the averaged system at an equilibrium and its spectrum.
struct StabilityReport {
  Eigen::MatrixXd jacobian;
  HurwitzReport hurwitz;
};

inline StabilityReport averaged_stability(const AveragedSones& sys, const SonesState& equilibrium,
                                          double rel_step = 1e-6) {
  const Eigen::VectorXd x = equilibrium.flatten();
  const double residual = sys(0.0, x).cwiseAbs().maxCoeff();
  if (residual >= 1e-6)
    throw PreconditionError("state is not an equilibrium of the averaged system (residual " +
                            std::to_string(residual) + ")");
  StabilityReport rep;
  rep.jacobian = jacobian_at([&](const Eigen::VectorXd& z) { return sys(0.0, z); }, x, rel_step);
  rep.hurwitz = is_hurwitz(rep.jacobian);
  return rep;
}

/// Predicted steady-state offsets of the averaged equilibrium:
///   theta~_i = sum_j c_j^i a_j^2,  c_j = -1/2 T_m^-1 d^4 nu(0) / (dq dq_j^2 dq_m)
///   eta~     = sum_i dnu(0)/dq_i theta~_i + 1/4 sum_i d^2 nu(0)/dq_i^2 a_i^2
struct TheoremBias {
  Eigen::VectorXd theta;
  double eta = 0.0;
};

inline TheoremBias theorem_bias(const PolynomialMap& map, std::span<const double> theta_star,
                                const ProbingConfig& cfg) {
  const std::size_t p = map.dim();
  if (cfg.dim() != p) throw InvalidArgument("map and probing dimensions differ");
  const InflectionReference ref = make_reference(map, theta_star, cfg.axis());
  const PolynomialMap nu = recenter(map, theta_star);
  const std::vector<double> origin(p, 0.0);
  const std::size_t m = cfg.axis();

  TheoremBias out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)), 0.0};
  for (std::size_t j = 0; j < p; ++j) {
    Eigen::VectorXd d4(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i)
      d4(static_cast<Eigen::Index>(i)) = partial(nu, unit_index(p, {i, j, j, m}))(origin);
    const double aj = cfg.amplitude(j);
    out.theta += (-0.5 * ref.t_m_inv * d4) * (aj * aj);
  }
  const DerivativeBundle b = derivative_bundle(nu, origin);
  out.eta = b.gradient.dot(out.theta);
  for (std::size_t i = 0; i < p; ++i) {
    const double ai = cfg.amplitude(i);
    out.eta += 0.25 * b.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) * ai * ai;
  }
  return out;
}

}  // namespace sones
