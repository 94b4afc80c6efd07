#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "sones/error.hpp"

namespace sones {

/// Corner frequencies (rad/s) of the low-pass, washout and Riccati filters.
struct FilterGains {
  double low_pass = 1.0;
  double high_pass = 1.0;
  double riccati = 1.0;

  void validate() const {
    if (!(low_pass > 0.0) || !(high_pass > 0.0) || !(riccati > 0.0))
      throw InvalidArgument("filter corner frequencies must be positive");
  }
};

/// First-order low-pass: xdot = omega_l (u - x), elementwise on vectors or matrices.
template <class DerivedX, class DerivedU>
auto lowpass_rhs(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u, double omega_l) {
  if (x.rows() != u.rows() || x.cols() != u.cols()) throw InvalidArgument("low-pass state and input shapes differ");
  using Plain = typename DerivedX::PlainObject;
  return Plain(omega_l * (u - x));
}

inline double lowpass_rhs(double x, double u, double omega_l) { return omega_l * (u - x); }

/// Washout state: etadot = omega_h (y - eta). The high-passed signal is washout_output().
inline double washout_rhs(double eta, double y, double omega_h) { return omega_h * (y - eta); }

inline double washout_output(double y, double eta) { return y - eta; }

namespace detail {

template <class Derived>
bool exactly_symmetric(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

}  // namespace detail

/// Differential Riccati inverse filter: Lambdadot = omega_r Lambda (I - T Lambda).
/// Equilibrium Lambda = T^{-1} for invertible T. For exactly symmetric inputs only the
/// upper triangle of Lambda T Lambda is formed and mirrored, so the result is exactly symmetric.
inline Eigen::MatrixXd riccati_rhs(const Eigen::Ref<const Eigen::MatrixXd>& lambda,
                                   const Eigen::Ref<const Eigen::MatrixXd>& t_hat, double omega_r) {
  if (lambda.rows() != lambda.cols() || t_hat.rows() != t_hat.cols() || lambda.rows() != t_hat.rows())
    throw InvalidArgument("Riccati filter needs square matrices of equal size");
  const Eigen::MatrixXd tl = t_hat * lambda;
  Eigen::MatrixXd ltl(lambda.rows(), lambda.cols());
  if (detail::exactly_symmetric(lambda) && detail::exactly_symmetric(t_hat)) {
    for (Eigen::Index i = 0; i < lambda.rows(); ++i)
      for (Eigen::Index j = i; j < lambda.cols(); ++j) ltl(i, j) = ltl(j, i) = lambda.row(i).dot(tl.col(j));
  } else {
    ltl.noalias() = lambda * tl;
  }
  return omega_r * (lambda - ltl);
}

}  // namespace sones
