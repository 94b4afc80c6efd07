#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "sones/error.hpp"

namespace sones {

/// Householder reduction to upper Hessenberg form (similarity transform, eigenvalues preserved).
inline Eigen::MatrixXd hessenberg(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw InvalidArgument("hessenberg: matrix must be square");
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    Eigen::VectorXd v = a.block(k + 1, k, len, 1);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    const double alpha = v(0) > 0 ? -norm : norm;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    a.block(k + 1, k, len, n - k) -= 2.0 * v * (v.transpose() * a.block(k + 1, k, len, n - k));
    a.block(0, k + 1, n, len) -= 2.0 * (a.block(0, k + 1, n, len) * v) * v.transpose();
    a.block(k + 2, k, len - 1, 1).setZero();
    a(k + 1, k) = alpha;
  }
  return a;
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR iteration
/// with exceptional shifts at iterations 10 and 20 (after EISPACK hqr).
inline std::vector<std::complex<double>> hessenberg_eigenvalues(Eigen::MatrixXd h) {
  const int n = static_cast<int>(h.rows());
  std::vector<std::complex<double>> eig(static_cast<std::size_t>(n));
  if (n == 0) return eig;

  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) norm += std::abs(h(i, j));

  int en = n - 1;
  double shift_total = 0.0;
  int iterations_left = 30 * n;
  while (en >= 0) {
    int its = 0;
    const int na = en - 1;
    const int enm2 = na - 1;
    while (true) {
      int l = en;
      for (; l > 0; --l) {
        double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        if (s == 0.0) s = norm;
        if (s + std::abs(h(l, l - 1)) == s) break;
      }
      double x = h(en, en);
      if (l == en) {  // one root
        eig[static_cast<std::size_t>(en)] = {x + shift_total, 0.0};
        en = na;
        break;
      }
      double y = h(na, na);
      double w = h(en, na) * h(na, en);
      if (l == na) {  // two roots
        const double p = (y - x) / 2.0;
        const double q = p * p + w;
        const double zz = std::sqrt(std::abs(q));
        x += shift_total;
        if (q >= 0.0) {
          const double z = p + std::copysign(zz, p);
          const double r1 = x + z;
          const double r2 = z != 0.0 ? x - w / z : r1;
          eig[static_cast<std::size_t>(na)] = {r1, 0.0};
          eig[static_cast<std::size_t>(en)] = {r2, 0.0};
        } else {
          eig[static_cast<std::size_t>(na)] = {x + p, zz};
          eig[static_cast<std::size_t>(en)] = {x + p, -zz};
        }
        en = enm2;
        break;
      }
      if (iterations_left == 0) throw NumericError("QR iteration did not converge");
      if (its == 10 || its == 20) {  // exceptional shift
        shift_total += x;
        for (int i = 0; i <= en; ++i) h(i, i) -= x;
        const double s = std::abs(h(en, na)) + std::abs(h(na, enm2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      ++its;
      --iterations_left;

      // Look for two consecutive small sub-diagonal elements.
      int m = enm2;
      double p = 0.0, q = 0.0, r = 0.0;
      for (; m >= l; --m) {
        const double zz = h(m, m);
        r = x - zz;
        const double s0 = y - zz;
        p = (r * s0 - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - zz - r - s0;
        r = h(m + 2, m + 1);
        const double s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        const double tst1 = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(zz) + std::abs(h(m + 1, m + 1)));
        if (tst1 + std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) == tst1) break;
      }
      for (int i = m + 2; i <= en; ++i) {
        h(i, i - 2) = 0.0;
        if (i != m + 2) h(i, i - 3) = 0.0;
      }

      // Double QR step on rows l..en, columns m..en.
      for (int k = m; k <= na; ++k) {
        const bool notlast = k != na;
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
        if (k != m)
          h(k, k - 1) = -s * x;
        else if (l != m)
          h(k, k - 1) = -h(k, k - 1);
        p += s;
        x = p / s;
        y = q / s;
        const double zz = r / s;
        q /= p;
        r /= p;
        const int jmax = std::min(en, k + 3);
        for (int j = k; j <= en; ++j) {
          double t = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            t += r * h(k + 2, j);
            h(k + 2, j) -= t * zz;
          }
          h(k + 1, j) -= t * y;
          h(k, j) -= t * x;
        }
        for (int i = l; i <= jmax; ++i) {
          double t = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            t += zz * h(i, k + 2);
            h(i, k + 2) -= t * r;
          }
          h(i, k + 1) -= t * q;
          h(i, k) -= t;
        }
      }
    }
  }
  return eig;
}

/// Eigenvalues of a general real square matrix.
inline std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a) {
  return hessenberg_eigenvalues(hessenberg(a));
}

/// Central finite-difference Jacobian of f at x, step rel_step * max(1, |x_i|).
template <class F>
Eigen::MatrixXd jacobian_at(F&& f, const Eigen::VectorXd& x, double rel_step = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(i) = x(i) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(i) = x(i);
    j.col(i) = (fp - fm) / (2.0 * h);
  }
  return j;
}

struct HurwitzReport {
  bool hurwitz = false;
  double max_real = 0.0;
  std::vector<std::complex<double>> spectrum;
};

/// Hurwitz iff every eigenvalue has real part below -margin.
inline HurwitzReport is_hurwitz(const Eigen::MatrixXd& j, double margin = 1e-9) {
  HurwitzReport rep;
  rep.spectrum = eigenvalues(j);
  std::sort(rep.spectrum.begin(), rep.spectrum.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  rep.max_real = rep.spectrum.empty() ? -INFINITY : rep.spectrum.front().real();
  rep.hurwitz = rep.max_real < -margin;
  return rep;
}

}  // namespace sones
