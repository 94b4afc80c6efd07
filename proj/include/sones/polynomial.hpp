#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sones/error.hpp"

namespace sones {

/// Anything callable as `double(std::span<const double>)` can be probed as a static map.
template <class M>
concept StaticMap = requires(const M& map, std::span<const double> theta) {
  { map(theta) } -> std::convertible_to<double>;
};

using MultiIndex = std::vector<int>;

struct Term {
  MultiIndex exponents;
  double coeff = 0.0;

  friend bool operator==(const Term&, const Term&) = default;
};

namespace detail {

inline int total_degree(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

/// Graded lexicographic: lower total degree first, then larger theta_1 exponent first.
inline bool grlex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = total_degree(a);
  const int db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// Exact multivariable polynomial y = sum_k c_k * prod_i theta_i^{alpha_ki}.
///
/// Terms are kept in canonical form: duplicates merged, zero coefficients dropped,
/// graded lexicographic order. Two maps compare equal iff their canonical term lists do.
class PolynomialMap {
 public:
  PolynomialMap() = default;

  explicit PolynomialMap(std::size_t dimension, std::vector<Term> terms = {}) : dim_(dimension) {
    if (dimension == 0) throw InvalidArgument("polynomial map dimension must be positive");
    for (const Term& t : terms) {
      if (t.exponents.size() != dim_)
        throw InvalidArgument("term exponent length does not match map dimension");
      if (std::any_of(t.exponents.begin(), t.exponents.end(), [](int e) { return e < 0; }))
        throw InvalidArgument("negative exponent in polynomial term");
    }
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return detail::grlex_less(a.exponents, b.exponents); });
    for (Term& t : terms) {
      if (!terms_.empty() && terms_.back().exponents == t.exponents)
        terms_.back().coeff += t.coeff;
      else
        terms_.push_back(std::move(t));
    }
    std::erase_if(terms_, [](const Term& t) { return t.coeff == 0.0; });
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const Term& t : terms_) d = std::max(d, detail::total_degree(t.exponents));
    return d;
  }

  double operator()(std::span<const double> theta) const {
    if (theta.size() != dim_) throw InvalidArgument("evaluation point has wrong dimension");
    // Expanded coefficients cancel heavily away from the origin; accumulate in extended precision.
    long double y = 0.0L;
    for (const Term& t : terms_) {
      long double m = t.coeff;
      for (std::size_t i = 0; i < dim_; ++i)
        for (int e = 0; e < t.exponents[i]; ++e) m *= theta[i];
      y += m;
    }
    return static_cast<double>(y);
  }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    return (*this)(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
  }

  friend bool operator==(const PolynomialMap&, const PolynomialMap&) = default;

 private:
  std::size_t dim_ = 1;
  std::vector<Term> terms_;
};

inline double eval(const PolynomialMap& map, std::span<const double> theta) { return map(theta); }

inline double eval(const PolynomialMap& map, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return map(theta);
}

/// Exact partial derivative d^|alpha| / (d theta_1^alpha_1 ... d theta_p^alpha_p).
inline PolynomialMap partial(const PolynomialMap& map, const MultiIndex& alpha) {
  if (alpha.size() != map.dim()) throw InvalidArgument("derivative multi-index has wrong length");
  if (std::any_of(alpha.begin(), alpha.end(), [](int a) { return a < 0; }))
    throw InvalidArgument("negative derivative order");
  std::vector<Term> out;
  for (const Term& t : map.terms()) {
    double factor = 1.0;  // integer falling factorial, exact in double
    MultiIndex e = t.exponents;
    bool vanishes = false;
    for (std::size_t i = 0; i < e.size() && !vanishes; ++i) {
      if (e[i] < alpha[i]) {
        vanishes = true;
        break;
      }
      for (int k = 0; k < alpha[i]; ++k) factor *= e[i] - k;
      e[i] -= alpha[i];
    }
    if (!vanishes) out.push_back({std::move(e), t.coeff * factor});
  }
  return PolynomialMap(map.dim(), std::move(out));
}

/// g(q) = h(q + offset), expanded back to canonical polynomial form.
inline PolynomialMap shift(const PolynomialMap& map, std::span<const double> offset) {
  const std::size_t p = map.dim();
  if (offset.size() != p) throw InvalidArgument("shift offset has wrong dimension");
  std::vector<Term> out;
  for (const Term& t : map.terms()) {
    // Cartesian product over k_i in [0, e_i] of C(e_i,k_i) s_i^(e_i-k_i) q_i^k_i.
    MultiIndex k(p, 0);
    while (true) {
      double c = t.coeff;
      for (std::size_t i = 0; i < p; ++i)
        c *= detail::binomial(t.exponents[i], k[i]) * detail::ipow(offset[i], t.exponents[i] - k[i]);
      out.push_back({k, c});
      std::size_t i = 0;
      while (i < p && k[i] == t.exponents[i]) k[i++] = 0;
      if (i == p) break;
      ++k[i];
    }
  }
  return PolynomialMap(p, std::move(out));
}

/// nu(q) = h(theta_star + q) - h(theta_star); the constant term is removed so nu(0) == 0 exactly.
inline PolynomialMap recenter(const PolynomialMap& map, std::span<const double> theta_star) {
  const PolynomialMap shifted = shift(map, theta_star);
  std::vector<Term> terms;
  for (const Term& t : shifted.terms())
    if (detail::total_degree(t.exponents) > 0) terms.push_back(t);
  return PolynomialMap(map.dim(), std::move(terms));
}

/// Fully symmetric p x p x p array of third partial derivatives.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(std::size_t p) : p_(p), data_(p * p * p, 0.0) {}

  std::size_t dim() const { return p_; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * p_ + j) * p_ + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * p_ + j) * p_ + k]; }

  /// T_m: the matrix T[., ., m].
  Eigen::MatrixXd slice(std::size_t m) const {
    Eigen::MatrixXd s(p_, p_);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = 0; j < p_; ++j) s(i, j) = (*this)(i, j, m);
    return s;
  }

 private:
  std::size_t p_ = 0;
  std::vector<double> data_;
};

struct DerivativeBundle {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Tensor3 third;
};

inline MultiIndex unit_index(std::size_t p, std::initializer_list<std::size_t> axes) {
  MultiIndex alpha(p, 0);
  for (std::size_t a : axes) {
    if (a >= p) throw InvalidArgument("axis index out of range");
    ++alpha[a];
  }
  return alpha;
}

/// Exact G, H and T at theta. Every entry is evaluated from its own multi-index.
inline DerivativeBundle derivative_bundle(const PolynomialMap& map, std::span<const double> theta) {
  const std::size_t p = map.dim();
  if (theta.size() != p) throw InvalidArgument("evaluation point has wrong dimension");
  DerivativeBundle b{Eigen::VectorXd(p), Eigen::MatrixXd(p, p), Tensor3(p)};
  for (std::size_t i = 0; i < p; ++i) {
    b.gradient(i) = partial(map, unit_index(p, {i}))(theta);
    for (std::size_t j = 0; j < p; ++j) {
      b.hessian(i, j) = partial(map, unit_index(p, {i, j}))(theta);
      for (std::size_t k = 0; k < p; ++k) b.third(i, j, k) = partial(map, unit_index(p, {i, j, k}))(theta);
    }
  }
  return b;
}

inline DerivativeBundle derivative_bundle(const PolynomialMap& map, const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return derivative_bundle(map, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

/// Central finite-difference estimate of the alpha-partial (|alpha| <= 3), O(h^2) accurate.
template <StaticMap Map>
double fd_partial(const Map& map, std::span<const double> theta, const MultiIndex& alpha, double h) {
  if (alpha.size() != theta.size()) throw InvalidArgument("derivative multi-index has wrong length");
  if (detail::total_degree(alpha) > 3) throw InvalidArgument("fd_partial supports |alpha| <= 3");
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");

  struct Tap {
    int offset;
    double weight;
  };
  static const std::array<std::vector<Tap>, 4> stencils = {{
      {{0, 1.0}},
      {{1, 0.5}, {-1, -0.5}},
      {{1, 1.0}, {0, -2.0}, {-1, 1.0}},
      {{2, 0.5}, {1, -1.0}, {-1, 1.0}, {-2, -0.5}},
  }};

  const std::size_t p = theta.size();
  std::vector<double> x(theta.begin(), theta.end());
  double scale = 1.0;
  for (int a : alpha) scale *= detail::ipow(h, a);

  // Tensor-product stencil, enumerated axis by axis.
  double sum = 0.0;
  auto recurse = [&](auto&& self, std::size_t axis, double weight) -> void {
    if (axis == p) {
      sum += weight * static_cast<double>(map(std::span<const double>(x)));
      return;
    }
    for (const Tap& tap : stencils[static_cast<std::size_t>(alpha[axis])]) {
      x[axis] = theta[axis] + tap.offset * h;
      self(self, axis + 1, weight * tap.weight);
    }
    x[axis] = theta[axis];
  };
  recurse(recurse, 0, 1.0);
  return sum / scale;
}

/// The two-parameter cubic with a directional inflection point along theta_1 at theta_star:
/// h = 1 + x - y + 3/2 y^2 - (2x^3 + 3x^2 y + 12 x y^2 + y^3)/6, x = theta_1 - theta_1*, y = theta_2 - theta_2*.
inline PolynomialMap paper_example_map(std::span<const double> theta_star) {
  if (theta_star.size() != 2) throw InvalidArgument("paper_example_map requires a 2-vector theta_star");
  const PolynomialMap centered(2, {
                                      {{0, 0}, 1.0},
                                      {{1, 0}, 1.0},
                                      {{0, 1}, -1.0},
                                      {{0, 2}, 1.5},
                                      {{3, 0}, -2.0 / 6.0},
                                      {{2, 1}, -3.0 / 6.0},
                                      {{1, 2}, -12.0 / 6.0},
                                      {{0, 3}, -1.0 / 6.0},
                                  });
  const std::array<double, 2> back{-theta_star[0], -theta_star[1]};
  return shift(centered, back);
}

inline PolynomialMap paper_example_map(double theta1_star, double theta2_star) {
  const std::array<double, 2> ts{theta1_star, theta2_star};
  return paper_example_map(ts);
}

}  // namespace sones
