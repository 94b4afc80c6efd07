#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "sones/error.hpp"

namespace sones {

/// Exact rational number in canonical form: gcd(num, den) == 1 and den > 0.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t integer) : num_(integer) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw InvalidArgument("rational with zero denominator");
    normalize();
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }
  constexpr bool is_integer() const { return den_ == 1; }
  constexpr double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    return {a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_};
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    return {(a.num_ / (g1 ? g1 : 1)) * (b.num_ / (g2 ? g2 : 1)),
            (a.den_ / (g2 ? g2 : 1)) * (b.den_ / (g1 ? g1 : 1))};
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw InvalidArgument("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

  /// Parses "n" or "n/d" (optional leading '-').
  static Rational parse(std::string_view text) {
    auto to_int = [&](std::string_view s) {
      std::int64_t v = 0;
      const auto* end = s.data() + s.size();
      auto [ptr, ec] = std::from_chars(s.data(), end, v);
      if (s.empty() || ec != std::errc{} || ptr != end)
        throw InvalidArgument("not a rational number: '" + std::string(text) + "'");
      return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(to_int(text));
    return {to_int(text.substr(0, slash)), to_int(text.substr(slash + 1))};
  }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Least common multiple of positive fractions: lcm(n_i/d_i) = lcm(n_i) / gcd(d_i).
template <class Range>
Rational lcm_of(const Range& values) {
  std::int64_t num = 0;
  std::int64_t den = 0;
  bool first = true;
  for (const Rational& v : values) {
    if (v.num() <= 0) throw InvalidArgument("lcm_of requires positive rationals");
    if (first) {
      num = v.num();
      den = v.den();
      first = false;
    } else {
      num = std::lcm(num, v.num());
      den = std::gcd(den, v.den());
    }
  }
  if (first) throw InvalidArgument("lcm_of an empty set");
  return {num, den};
}

}  // namespace sones
