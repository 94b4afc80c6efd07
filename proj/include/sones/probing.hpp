#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sones/error.hpp"
#include "sones/rational.hpp"

namespace sones {

/// Sinusoidal probing: amplitudes a_i, exact rational frequencies omega_i (rad/s) and the
/// target axis m (0-based here; 1-based in scenario files and reports).
class ProbingConfig {
 public:
  ProbingConfig(std::vector<double> amplitudes, std::vector<Rational> frequencies, std::size_t axis)
      : a_(std::move(amplitudes)), w_(std::move(frequencies)), axis_(axis) {
    if (a_.empty()) throw InvalidArgument("probing config needs at least one channel");
    if (a_.size() != w_.size()) throw InvalidArgument("amplitude and frequency counts differ");
    if (axis_ >= a_.size()) throw InvalidArgument("target axis out of range");
    for (double a : a_)
      if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("probing amplitudes must be positive");
    for (const Rational& w : w_)
      if (w.num() <= 0) throw InvalidArgument("probing frequencies must be positive");
    omega_.reserve(w_.size());
    for (const Rational& w : w_) omega_.push_back(w.to_double());
  }

  std::size_t dim() const { return a_.size(); }
  std::size_t axis() const { return axis_; }
  const std::vector<double>& amplitudes() const { return a_; }
  const std::vector<Rational>& frequencies() const { return w_; }
  double amplitude(std::size_t i) const { return a_[i]; }
  double omega(std::size_t i) const { return omega_[i]; }
  double max_omega() const { return *std::max_element(omega_.begin(), omega_.end()); }

  ProbingConfig with_amplitudes(std::vector<double> amplitudes) const { return {std::move(amplitudes), w_, axis_}; }

 private:
  std::vector<double> a_;
  std::vector<Rational> w_;
  std::size_t axis_;
  std::vector<double> omega_;
};

/// S_i(t) = a_i sin(omega_i t).
inline Eigen::VectorXd dither(const ProbingConfig& cfg, double t) {
  Eigen::VectorXd s(cfg.dim());
  for (std::size_t i = 0; i < cfg.dim(); ++i) s(i) = cfg.amplitude(i) * std::sin(cfg.omega(i) * t);
  return s;
}

/// Hessian demodulator entry:
/// N_ii = -8/a_i^2 cos(2 w_i t),  N_ij = -4/(a_i a_j) cos((w_i + w_j) t).
inline double demod_N_entry(const ProbingConfig& cfg, std::size_t i, std::size_t j, double t) {
  if (i >= cfg.dim() || j >= cfg.dim()) throw InvalidArgument("demodulator index out of range");
  const double ai = cfg.amplitude(i);
  const double aj = cfg.amplitude(j);
  if (i == j) return -8.0 / (ai * ai) * std::cos(2.0 * cfg.omega(i) * t);
  return -4.0 / (ai * aj) * std::cos((cfg.omega(i) + cfg.omega(j)) * t);
}

inline Eigen::MatrixXd demod_N_matrix(const ProbingConfig& cfg, double t) {
  const std::size_t p = cfg.dim();
  Eigen::MatrixXd n(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) n(i, j) = n(j, i) = demod_N_entry(cfg, i, j, t);
  return n;
}

/// N_m(t): column m of the Hessian demodulator.
inline Eigen::VectorXd demod_N_vector(const ProbingConfig& cfg, double t) {
  Eigen::VectorXd n(cfg.dim());
  for (std::size_t i = 0; i < cfg.dim(); ++i) n(i) = demod_N_entry(cfg, i, cfg.axis(), t);
  return n;
}

/// Third-derivative demodulator entry, symmetric under any permutation of (i, j, k):
/// all equal  -> -48/a_i^3 sin(3 w_i t)
/// two equal  -> -16/(a_r^2 a_s) sin((2 w_r + w_s) t), r the repeated index
/// distinct   -> -8/(a_i a_j a_k) sin((w_i + w_j + w_k) t)
inline double demod_P_entry(const ProbingConfig& cfg, std::size_t i, std::size_t j, std::size_t k, double t) {
  if (i >= cfg.dim() || j >= cfg.dim() || k >= cfg.dim()) throw InvalidArgument("demodulator index out of range");
  if (i == j && j == k) {
    const double a = cfg.amplitude(i);
    return -48.0 / (a * a * a) * std::sin(3.0 * cfg.omega(i) * t);
  }
  if (i == j || j == k || i == k) {
    const std::size_t r = (i == j || i == k) ? i : j;
    const std::size_t s = (i == j) ? k : (i == k ? j : i);
    const double ar = cfg.amplitude(r);
    return -16.0 / (ar * ar * cfg.amplitude(s)) * std::sin((2.0 * cfg.omega(r) + cfg.omega(s)) * t);
  }
  std::array<std::size_t, 3> idx{i, j, k};
  std::sort(idx.begin(), idx.end());
  return -8.0 / (cfg.amplitude(idx[0]) * cfg.amplitude(idx[1]) * cfg.amplitude(idx[2])) *
         std::sin((cfg.omega(idx[0]) + cfg.omega(idx[1]) + cfg.omega(idx[2])) * t);
}

/// P_m(t) with entries P_{m,i,j}.
inline Eigen::MatrixXd demod_P_matrix(const ProbingConfig& cfg, double t) {
  const std::size_t p = cfg.dim();
  Eigen::MatrixXd m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) m(i, j) = m(j, i) = demod_P_entry(cfg, cfg.axis(), i, j, t);
  return m;
}

/// All probing signals needed by one closed-loop right-hand-side evaluation.
struct ProbeSignals {
  Eigen::VectorXd dither;
  Eigen::VectorXd n_m;
  Eigen::MatrixXd p_m;
};

inline void probe_signals(const ProbingConfig& cfg, double t, ProbeSignals& out) {
  const std::size_t p = cfg.dim();
  out.dither.resize(p);
  out.n_m.resize(p);
  out.p_m.resize(p, p);
  const std::size_t m = cfg.axis();
  for (std::size_t i = 0; i < p; ++i) {
    out.dither(i) = cfg.amplitude(i) * std::sin(cfg.omega(i) * t);
    out.n_m(i) = demod_N_entry(cfg, i, m, t);
    for (std::size_t j = i; j < p; ++j) out.p_m(i, j) = out.p_m(j, i) = demod_P_entry(cfg, m, i, j, t);
  }
}

/// LCM{1/omega_i}, so that the averaging period is 2*pi times this value.
inline Rational period_multiple(std::span<const Rational> frequencies) {
  std::vector<Rational> inverse;
  inverse.reserve(frequencies.size());
  for (const Rational& w : frequencies) {
    if (w.num() <= 0) throw InvalidArgument("frequencies must be positive");
    inverse.emplace_back(w.den(), w.num());
  }
  return lcm_of(inverse);
}

/// Pi = 2*pi * LCM{1/omega_i}.
inline double averaging_period(std::span<const Rational> frequencies) {
  return 2.0 * std::numbers::pi * period_multiple(frequencies).to_double();
}

inline double averaging_period(const ProbingConfig& cfg) { return averaging_period(cfg.frequencies()); }

/// Number of cycles of the fastest demodulation harmonic (3 max omega) in one averaging period.
inline std::int64_t fastest_demod_cycles(const ProbingConfig& cfg) {
  const Rational mult = period_multiple(cfg.frequencies());
  const Rational wmax = *std::max_element(cfg.frequencies().begin(), cfg.frequencies().end());
  const Rational cycles = mult * wmax * Rational(3);
  return cycles.num() / cycles.den();
}

// ---------------------------------------------------------------------------
// Probing-frequency conditions
// ---------------------------------------------------------------------------

enum class ValidationLevel { hessian_only, full };

/// One excluded linear relation sum_r coeffs[r] * omega[idx_r] == 0 over `arity`
/// pairwise-distinct indices.
struct FrequencyCondition {
  std::string_view id;
  int arity;
  std::array<int, 6> coeffs;
};

inline constexpr std::array<FrequencyCondition, 5> kHessianConditions{{
    {"i=j", 2, {1, -1}},
    {"2i=j+k", 3, {2, -1, -1}},
    {"i=j+2k", 3, {1, -1, -2}},
    {"i=j+k+l", 4, {1, -1, -1, -1}},
    {"i=j+k-l", 4, {1, -1, -1, 1}},
}};

inline constexpr std::array<FrequencyCondition, 28> kFullConditions{{
    {"i=j", 2, {1, -1}},
    {"i=2j", 2, {1, -2}},
    {"i=3j", 2, {1, -3}},
    {"i=5j", 2, {1, -5}},
    {"i=j+k", 3, {1, -1, -1}},
    {"i=j+k+l", 4, {1, -1, -1, -1}},
    {"i=j+2k", 3, {1, -1, -2}},
    {"i=j+4k", 3, {1, -1, -4}},
    {"i=2j+3k", 3, {1, -2, -3}},
    {"i=j+2k+2l", 4, {1, -1, -2, -2}},
    {"i=j+k+3l", 4, {1, -1, -1, -3}},
    {"i=j+k+l+2m", 5, {1, -1, -1, -1, -2}},
    {"i=j+k+l+m+n", 6, {1, -1, -1, -1, -1, -1}},
    {"2i=j+k", 3, {2, -1, -1}},
    {"2i=j+3k", 3, {2, -1, -3}},
    {"3i=j+2k", 3, {3, -1, -2}},
    {"3i=j+k+l", 4, {3, -1, -1, -1}},
    {"4i=j+k", 3, {4, -1, -1}},
    {"2i=j+k+2l", 4, {2, -1, -1, -2}},
    {"2i=j+k+l+m", 5, {2, -1, -1, -1, -1}},
    {"i+j=k+l", 4, {1, 1, -1, -1}},
    {"i+j=k+3l", 4, {1, 1, -1, -3}},
    {"i+j=2k+2l", 4, {1, 1, -2, -2}},
    {"i+j=k+l+2m", 5, {1, 1, -1, -1, -2}},
    {"i+j=k+l+m+n", 6, {1, 1, -1, -1, -1, -1}},
    {"i+2j=k+2l", 4, {1, 2, -1, -2}},
    {"i+2j=k+l+m", 5, {1, 2, -1, -1, -1}},
    {"i+j+k=l+m+n", 6, {1, 1, 1, -1, -1, -1}},
}};

inline std::span<const FrequencyCondition> conditions_for(ValidationLevel level) {
  if (level == ValidationLevel::hessian_only) return kHessianConditions;
  return kFullConditions;
}

struct FrequencyViolation {
  std::string_view condition;
  std::vector<std::size_t> indices;  // 0-based, pairwise distinct, in condition-slot order
  std::vector<int> coeffs;           // the relation that holds with equality

  /// e.g. "condition i=2j: omega[2] = 2*omega[1]" (1-based indices).
  std::string describe() const {
    auto side = [&](int sign) {
      std::string s;
      for (std::size_t r = 0; r < indices.size(); ++r) {
        const int c = coeffs[r] * sign;
        if (c <= 0) continue;
        if (!s.empty()) s += " + ";
        if (c != 1) s += std::to_string(c) + "*";
        s += "omega[" + std::to_string(indices[r] + 1) + "]";
      }
      return s;
    };
    return "condition " + std::string(condition) + ": " + side(1) + " = " + side(-1);
  }
};

namespace detail {

/// Frequencies scaled by the lcm of their denominators, so every relation is an integer test.
inline std::vector<std::int64_t> integer_frequencies(std::span<const Rational> w) {
  std::int64_t den = 1;
  for (const Rational& r : w) {
    if (r.num() <= 0) throw InvalidArgument("frequencies must be positive");
    den = std::lcm(den, r.den());
  }
  std::vector<std::int64_t> out;
  out.reserve(w.size());
  for (const Rational& r : w) out.push_back(r.num() * (den / r.den()));
  return out;
}

/// Calls visit(tuple) for every ordered tuple of `arity` pairwise-distinct indices below p,
/// in lexicographic order. Stops early when visit returns false.
template <class Visit>
bool for_each_distinct_tuple(std::size_t p, int arity, Visit&& visit) {
  std::vector<std::size_t> tuple(static_cast<std::size_t>(arity));
  std::vector<bool> used(p, false);
  auto rec = [&](auto&& self, std::size_t slot) -> bool {
    if (slot == tuple.size()) return visit(std::span<const std::size_t>(tuple));
    for (std::size_t i = 0; i < p; ++i) {
      if (used[i]) continue;
      used[i] = true;
      tuple[slot] = i;
      const bool go_on = self(self, slot + 1);
      used[i] = false;
      if (!go_on) return false;
    }
    return true;
  };
  return rec(rec, 0);
}

inline bool relation_holds(const FrequencyCondition& c, std::span<const std::int64_t> w,
                           std::span<const std::size_t> tuple) {
  __int128 sum = 0;
  for (std::size_t r = 0; r < tuple.size(); ++r) sum += static_cast<__int128>(c.coeffs[r]) * w[tuple[r]];
  return sum == 0;
}

}  // namespace detail

/// Every violated probing-frequency condition, one entry per distinct relation.
/// Distinctness is imposed only among the indices that appear in a condition.
inline std::vector<FrequencyViolation> validate_frequencies(std::span<const Rational> frequencies,
                                                            ValidationLevel level) {
  const auto w = detail::integer_frequencies(frequencies);
  std::vector<FrequencyViolation> out;
  for (const FrequencyCondition& c : conditions_for(level)) {
    if (static_cast<std::size_t>(c.arity) > w.size()) continue;
    std::set<std::vector<std::pair<std::size_t, int>>> seen;
    detail::for_each_distinct_tuple(w.size(), c.arity, [&](std::span<const std::size_t> tuple) {
      if (!detail::relation_holds(c, w, tuple)) return true;
      std::vector<std::pair<std::size_t, int>> key;
      for (std::size_t r = 0; r < tuple.size(); ++r) key.emplace_back(tuple[r], c.coeffs[r]);
      std::sort(key.begin(), key.end());
      if (key.front().second < 0)
        for (auto& kv : key) kv.second = -kv.second;
      if (seen.insert(key).second)
        out.push_back({c.id, {tuple.begin(), tuple.end()}, {c.coeffs.begin(), c.coeffs.begin() + c.arity}});
      return true;
    });
  }
  return out;
}

inline bool frequencies_valid(std::span<const Rational> frequencies, ValidationLevel level) {
  const auto w = detail::integer_frequencies(frequencies);
  for (const FrequencyCondition& c : conditions_for(level)) {
    if (static_cast<std::size_t>(c.arity) > w.size()) continue;
    const bool clean = detail::for_each_distinct_tuple(
        w.size(), c.arity, [&](std::span<const std::size_t> tuple) { return !detail::relation_holds(c, w, tuple); });
    if (!clean) return false;
  }
  return true;
}

/// Lexicographically smallest integer tuple in [lo, hi]^p passing `level`.
/// Depth-first with prefix pruning: a violation among the first k entries persists in
/// every extension.
inline std::vector<Rational> search_frequencies(std::size_t p, std::int64_t lo, std::int64_t hi,
                                                ValidationLevel level) {
  if (p == 0) throw InvalidArgument("search_frequencies needs p >= 1");
  if (lo < 1 || hi < lo) throw InvalidArgument("search range must be nonempty and positive");
  std::vector<Rational> current;
  current.reserve(p);
  auto rec = [&](auto&& self) -> bool {
    if (current.size() == p) return true;
    for (std::int64_t v = lo; v <= hi; ++v) {
      current.emplace_back(v);
      if (frequencies_valid(current, level) && self(self)) return true;
      current.pop_back();
    }
    return false;
  };
  if (!rec(rec))
    throw SearchExhausted("no valid frequency tuple of size " + std::to_string(p) + " in [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
  return current;
}

}  // namespace sones
