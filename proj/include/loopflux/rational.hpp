#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace loopflux {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Thrown when an operation would exceed its enumeration/cost envelope.
struct cost_guard_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Int factorial(std::uint64_t n) {
  Int f = 1;
  for (std::uint64_t k = 2; k <= n; ++k) f *= k;
  return f;
}

inline Rat rat_pow(const Rat& base, std::uint64_t e) {
  Rat acc = 1, b = base;
  while (e) {
    if (e & 1) acc *= b;
    b *= b;
    e >>= 1;
  }
  return acc;
}

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

inline std::string rat_str(const Rat& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

// Accepts "p/q", plain integers, and decimal literals such as "0.3" (exact).
inline Rat parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Int num(text.substr(0, slash));
    Int den(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + text);
    return Rat(num, den);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rat(Int(text));
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  bool neg = !digits.empty() && digits[0] == '-';
  if (digits == "-" || digits.empty())
    throw std::invalid_argument("bad rational literal: " + text);
  Int num(digits);
  Int den = 1;
  for (std::size_t i = 0; i < text.size() - dot - 1; ++i) den *= 10;
  (void)neg;
  return Rat(num, den);
}

}  // namespace loopflux
