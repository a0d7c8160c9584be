#pragma once

// Shared vocabulary for the tising library: error types, estimator reports,
// seeded random streams and a handful of scalar helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace tising {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLog2 = 0.69314718055994530942;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct IndexOutOfRange : Error {
  using Error::Error;
};
struct SpecError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};

/// Thrown by the text readers; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Estimator output
// ---------------------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// Outcome of a root-finding estimator. Non-existence is a result, not an
/// exception: `estimate` then holds +inf or -inf and `exists` is false.
struct EstimateReport {
  double estimate = 0.0;
  std::optional<double> std_error;
  std::optional<Interval> ci;
  int iterations = 0;
  double residual = 0.0;
  bool exists = true;

  bool is_sentinel() const noexcept { return !std::isfinite(estimate); }

  static EstimateReport sentinel(double signed_inf) {
    EstimateReport r;
    r.estimate = signed_inf;
    r.exists = false;
    return r;
  }
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for replication `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform draw in [0, 1) built from the raw 64-bit output, so sequences do not
/// depend on the standard library's distribution implementation.
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on `uniform01`.
inline double standard_normal(Rng& rng) noexcept {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

/// Binary entropy I(x) = ((1+x)log(1+x) + (1-x)log(1-x)) / 2 on [-1, 1].
inline double binary_entropy(double x) {
  if (std::abs(x) > 1.0) throw DomainError("binary_entropy: |x| > 1");
  // Near 0 this form keeps relative accuracy in the O(x^2) value.
  if (std::abs(x) < 0.5) return x * std::atanh(x) + 0.5 * std::log1p(-x * x);
  const double a = 1.0 + x;
  const double b = 1.0 - x;
  const double ta = a > 0.0 ? a * std::log1p(x) : 0.0;
  const double tb = b > 0.0 ? b * std::log1p(-x) : 0.0;
  return 0.5 * (ta + tb);
}

/// x^k for a nonnegative integer exponent, by repeated multiplication.
inline double ipow(double x, int k) noexcept {
  double r = 1.0;
  double b = x;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1U) r *= b;
    b *= b;
    e >>= 1U;
  }
  return r;
}

inline double factorial(int k) noexcept {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

/// log(sum(exp(v))) with max shift.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -kInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// log cosh(x) without overflow.
inline double log_cosh(double x) noexcept {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - kLog2;
}

/// Two-sided normal critical value z_{1 - alpha/2} for confidence `level`.
inline double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
  const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 0.5 + 0.5 * level);
}

/// Nearest-rank percentile (q in (0,1]) of an ascending-sorted sample.
inline double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("nearest_rank: empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-12));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace tising
