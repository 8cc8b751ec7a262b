#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "recourse/error.hpp"

namespace recourse {

// Exact value type for variable domains and payoffs.
//
// Always normalized: gcd(num, den) = 1 and den > 0. Arithmetic that would
// overflow 64 bits throws.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num) : num_(num) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den == 0) throw Error("rational with zero denominator");
    normalize();
  }

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }

  Rational operator-() const { return Rational(checked_neg(num_), den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t da = b.den_ / g;
    const std::int64_t db = a.den_ / g;
    return Rational(checked_add(checked_mul(a.num_, da), checked_mul(b.num_, db)),
                    checked_mul(a.den_, da));
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 ? a.num_ / g1 : a.num_;
    const std::int64_t d2 = g1 ? b.den_ / g1 : b.den_;
    const std::int64_t n2 = g2 ? b.num_ / g2 : b.num_;
    const std::int64_t d1 = g2 ? a.den_ / g2 : a.den_;
    return Rational(checked_mul(n1, n2), checked_mul(d1, d2));
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error("rational division by zero");
    return a * Rational(b.den_, b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    if (a.den_ == b.den_) return a.num_ <=> b.num_;
    // Compare a.num/a.den with b.num/b.den without overflow.
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r);

 private:
  static std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw Error("rational overflow");
    return r;
  }
  static std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw Error("rational overflow");
    return r;
  }
  static std::int64_t checked_neg(std::int64_t a) {
    if (a == std::numeric_limits<std::int64_t>::min()) throw Error("rational overflow");
    return -a;
  }
  void normalize() {
    if (den_ < 0) {
      num_ = checked_neg(num_);
      den_ = checked_neg(den_);
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

namespace detail {

inline std::optional<std::int64_t> parse_digits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    if (v > (std::numeric_limits<std::int64_t>::max() - (c - '0')) / 10)
      return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace detail

// Accepts integers ("10", "-3"), terminating decimals ("3.5", "-0.25") and
// fractions ("7/2"). Returns nullopt on anything else.
inline std::optional<Rational> try_parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) return std::nullopt;

  Rational value;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = detail::parse_digits(text.substr(0, slash));
    auto den = detail::parse_digits(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = Rational(*num, *den);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    auto int_part = text.substr(0, dot);
    auto frac_part = text.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) return std::nullopt;
    if (frac_part.size() > 17) return std::nullopt;
    std::int64_t whole = 0;
    if (!int_part.empty()) {
      auto w = detail::parse_digits(int_part);
      if (!w) return std::nullopt;
      whole = *w;
    }
    std::int64_t frac = 0;
    std::int64_t scale = 1;
    if (!frac_part.empty()) {
      auto f = detail::parse_digits(frac_part);
      if (!f) return std::nullopt;
      frac = *f;
      for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
    }
    value = Rational(whole) + Rational(frac, scale);
  } else {
    auto w = detail::parse_digits(text);
    if (!w) return std::nullopt;
    value = Rational(*w);
  }
  return negative ? -value : value;
}

inline Rational parse_rational(std::string_view text) {
  if (auto r = try_parse_rational(text)) return *r;
  throw ParseError("not an exact number: '" + std::string(text) + "'");
}

// Canonical text form: "10", "3.5", "-0.25", "1/3". Decimal notation is used
// whenever the denominator has no prime factors other than 2 and 5.
inline std::string to_string(const Rational& r) {
  const std::int64_t num = r.numerator();
  const std::int64_t den = r.denominator();
  if (den == 1) return std::to_string(num);

  std::int64_t d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1 || std::max(twos, fives) > 17)
    return std::to_string(num) + "/" + std::to_string(den);

  const int digits = std::max(twos, fives);
  // Scale the denominator up to 10^digits.
  std::int64_t factor = 1;
  for (int i = twos; i < digits; ++i) factor *= 2;
  for (int i = fives; i < digits; ++i) factor *= 5;
  const bool negative = num < 0;
  const auto magnitude = static_cast<std::uint64_t>(negative ? -num : num);
  const auto scaled = magnitude * static_cast<std::uint64_t>(factor);
  std::uint64_t pow10 = 1;
  for (int i = 0; i < digits; ++i) pow10 *= 10;
  std::string frac = std::to_string(scaled % pow10);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(scaled / pow10) + "." + frac;
}

inline Rational abs(const Rational& r) { return r < 0 ? -r : r; }

inline std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << to_string(r); }

}  // namespace recourse
