#pragma once

// Exact and asymptotic inference for the p-spin Curie-Weiss model
//
//   P(x) ∝ exp( beta * N * xbar^p + h * N * xbar ),   x in {-1,+1}^N,
//
// which uses the all-tuples convention (diagonal index tuples included). The
// law of the magnetization xbar is a one-dimensional distribution on N+1
// points, so the partition function, the moments and the ML equations are all
// evaluated exactly in O(N) with log-domain arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tising/common.hpp"

namespace tising {

// ---------------------------------------------------------------------------
// Parameter point
// ---------------------------------------------------------------------------

struct CwSpec {
  double beta = 0.0;
  double h = 0.0;
  int p = 2;
  int n = 1;

  CwSpec() = default;
  CwSpec(double beta_, double h_, int p_, int n_) : beta(beta_), h(h_), p(p_), n(n_) {
    validate();
  }

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw SpecError("CwSpec: beta must be finite and >= 0");
    if (!std::isfinite(h)) throw SpecError("CwSpec: h must be finite");
    if (p < 2) throw SpecError("CwSpec: p must be >= 2");
    if (n < 1) throw SpecError("CwSpec: n must be >= 1");
  }
};

namespace detail {

// Per-(p, n) quantities of the magnetization law: log binomials, the support
// and its p-th powers.
struct CwTable {
  int p;
  int n;
  std::vector<double> log_binom;
  std::vector<double> m;
  std::vector<double> mp;

  CwTable(int p_, int n_) : p(p_), n(n_) {
    const auto sz = static_cast<std::size_t>(n) + 1;
    log_binom.resize(sz);
    m.resize(sz);
    mp.resize(sz);
    const double nn = n;
    const double lg_n = std::lgamma(nn + 1.0);
    for (int k = 0; k <= n; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      log_binom[uk] = lg_n - std::lgamma(k + 1.0) - std::lgamma(nn - k + 1.0) - nn * kLog2;
      m[uk] = (2.0 * k - nn) / nn;
      mp[uk] = ipow(m[uk], p);
    }
  }

  // Unnormalized log-probabilities of xbar = m[k], including the 2^{-n}
  // factor so that their log-sum-exp is log Z_N. No sign restriction on beta:
  // the ML solvers probe negative values.
  std::vector<double> log_weights(double beta, double h) const {
    std::vector<double> lw(log_binom.size());
    for (std::size_t k = 0; k < lw.size(); ++k) lw[k] = log_binom[k] + n * (beta * mp[k] + h * m[k]);
    return lw;
  }

  std::vector<double> probabilities(double beta, double h) const {
    auto lw = log_weights(beta, h);
    const double lz = log_sum_exp(lw);
    for (double& v : lw) v = std::exp(v - lz);
    return lw;
  }

  double moment(double beta, double h, int r) const {
    const auto lw = log_weights(beta, h);
    const double mx = *std::max_element(lw.begin(), lw.end());
    double z = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < lw.size(); ++k) {
      const double w = std::exp(lw[k] - mx);
      z += w;
      s += w * (r == p ? mp[k] : ipow(m[k], r));
    }
    return s / z;
  }
};

inline std::vector<double> cw_log_weights(double beta, double h, int p, int n) {
  return CwTable(p, n).log_weights(beta, h);
}

inline std::vector<double> cw_probabilities(double beta, double h, int p, int n) {
  return CwTable(p, n).probabilities(beta, h);
}

inline double cw_moment(double beta, double h, int p, int n, int r) { return CwTable(p, n).moment(beta, h, r); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact law of the magnetization
// ---------------------------------------------------------------------------

/// Law of xbar on its support {-1, -1+2/n, ..., 1}; `support` ascending.
struct MagnetizationPmf {
  std::vector<double> support;
  std::vector<double> prob;

  double expectation(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t k = 0; k < prob.size(); ++k) s += prob[k] * f(support[k]);
    return s;
  }
};

/// log Z_N(beta, h, p), normalized so that beta = h = 0 gives 0.
inline double log_partition(const CwSpec& spec) {
  return log_sum_exp(detail::cw_log_weights(spec.beta, spec.h, spec.p, spec.n));
}

inline MagnetizationPmf magnetization_pmf(const CwSpec& spec) {
  MagnetizationPmf pmf;
  pmf.prob = detail::cw_probabilities(spec.beta, spec.h, spec.p, spec.n);
  pmf.support.resize(pmf.prob.size());
  for (int k = 0; k <= spec.n; ++k)
    pmf.support[static_cast<std::size_t>(k)] = (2.0 * k - spec.n) / static_cast<double>(spec.n);
  return pmf;
}

/// E[xbar^r].
inline double moment(const CwSpec& spec, int r) {
  if (r < 1) throw DomainError("moment: r must be >= 1");
  return detail::cw_moment(spec.beta, spec.h, spec.p, spec.n, r);
}

/// Inverse-CDF sampler for xbar. Construct once, draw many times.
class MagnetizationSampler {
 public:
  explicit MagnetizationSampler(const CwSpec& spec) : n_(spec.n) {
    const auto prob = detail::cw_probabilities(spec.beta, spec.h, spec.p, spec.n);
    cdf_.resize(prob.size());
    std::partial_sum(prob.begin(), prob.end(), cdf_.begin());
    cdf_.back() = 1.0;
  }

  /// Number of +1 spins in a draw.
  int draw_count(Rng& rng) const {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), n_));
  }

  double draw(Rng& rng) const { return (2.0 * draw_count(rng) - n_) / static_cast<double>(n_); }

  int n() const noexcept { return n_; }

 private:
  int n_;
  std::vector<double> cdf_;
};

inline std::vector<double> sample_magnetization(const CwSpec& spec, std::size_t count,
                                                std::uint64_t seed) {
  if (count < 1) throw DomainError("sample_magnetization: count must be >= 1");
  const MagnetizationSampler sampler(spec);
  Rng rng(seed);
  std::vector<double> out(count);
  for (auto& v : out) v = sampler.draw(rng);
  return out;
}

// ---------------------------------------------------------------------------
// H(x) = beta x^p + h x - I(x) and its derivatives
// ---------------------------------------------------------------------------

struct HFunction {
  double beta = 0.0;
  double h = 0.0;
  int p = 2;

  /// Derivative of order 0..4 at x. Orders >= 1 need |x| < 1.
  double operator()(double x, int order = 0) const {
    if (std::abs(x) > 1.0) throw DomainError("H: |x| > 1");
    if (order < 0 || order > 4) throw DomainError("H: order must be in 0..4");
    if (order == 0) return beta * ipow(x, p) + h * x - binary_entropy(x);
    if (std::abs(x) == 1.0) throw DomainError("H: derivatives diverge at |x| = 1");

    double poly = 0.0;
    if (order <= p) {
      double c = 1.0;
      for (int j = 0; j < order; ++j) c *= (p - j);
      poly = beta * c * ipow(x, p - order);
    }
    const double q = 1.0 - x * x;
    switch (order) {
      case 1:
        return poly + h - std::atanh(x);
      case 2:
        return poly - 1.0 / q;
      case 3:
        return poly - 2.0 * x / (q * q);
      default:
        return poly - (2.0 + 6.0 * x * x) / (q * q * q);
    }
  }
};

inline double h_eval(const HFunction& hf, double x, int order) { return hf(x, order); }

// ---------------------------------------------------------------------------
// Classification of (beta, h)
// ---------------------------------------------------------------------------

enum class PointKind { Regular, Special, WeaklyCritical, StronglyCritical };

inline const char* to_string(PointKind k) {
  switch (k) {
    case PointKind::Regular:
      return "regular";
    case PointKind::Special:
      return "special";
    case PointKind::WeaklyCritical:
      return "weakly-critical";
    case PointKind::StronglyCritical:
      return "strongly-critical";
  }
  return "?";
}

/// Integer code used in phase-diagram output.
inline int kind_code(PointKind k) { return static_cast<int>(k); }

struct Maximizer {
  double location = 0.0;
  double second_derivative = 0.0;
  double value = 0.0;
};

struct PointClass {
  PointKind kind = PointKind::Regular;
  std::vector<Maximizer> maximizers;  // ascending in location
  std::vector<double> weights;        // limiting mass of xbar at each maximizer

  std::size_t count() const noexcept { return maximizers.size(); }
};

struct ClassifyOptions {
  int grid = 100000;
  double tol_x = 1e-6;
  double tol_f = 1e-9;        // relative to max(1, |sup H|)
  double special_tol = 1e-7;  // |H''(m)| below this marks a special point
  int newton_iters = 50;
};

namespace detail {

// Safeguarded Newton on H' inside [lo, hi], where H'(lo) > 0 > H'(hi) is not
// required but used when available.
inline double polish_maximizer(const HFunction& hf, double x, double lo, double hi, int newton_iters) {
  const double eps = 1e-15;
  lo = std::max(lo, -1.0 + eps);
  hi = std::min(hi, 1.0 - eps);
  const bool bracketed = hf(lo, 1) > 0.0 && hf(hi, 1) < 0.0;
  int iters = 0;
  for (int it = 0; it < newton_iters + 200; ++it) {
    const double d1 = hf(x, 1);
    if (d1 == 0.0) break;
    if (bracketed) {
      if (d1 > 0.0)
        lo = x;
      else
        hi = x;
    }
    const double d2 = hf(x, 2);
    double next = x - d1 / d2;
    const bool newton_ok = iters < newton_iters && d2 < 0.0 && next > lo && next < hi;
    if (!newton_ok) {
      if (!bracketed) break;
      next = 0.5 * (lo + hi);
    }
    ++iters;
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
    if (bracketed && hi - lo <= 4e-16) break;
  }
  return x;
}

// All local maximizers of H located by a uniform grid and polished.
inline std::vector<Maximizer> local_maximizers(const HFunction& hf, int grid, int newton_iters) {
  const double w = 1.0 - 1e-9;
  const int g = std::max(grid, 3);
  const double step = 2.0 * w / (g - 1);
  // Mirror-symmetric nodes, so H(x; beta, h) and H(-x; beta, -h) see the same grid.
  auto node = [&](int i) { return w * (2.0 * i - (g - 1)) / (g - 1); };
  std::vector<double> v(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) v[static_cast<std::size_t>(i)] = hf(node(i));

  std::vector<Maximizer> out;
  for (int i = 0; i < g; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const bool left_ok = i == 0 || v[iu] >= v[iu - 1];
    const bool right_ok = i == g - 1 || v[iu] > v[iu + 1];
    if (!(left_ok && right_ok)) continue;
    const double x0 = node(i);
    const double x = polish_maximizer(hf, x0, x0 - step, x0 + step, newton_iters);
    out.push_back({x, hf(x, 2), hf(x)});
  }
  return out;
}

}  // namespace detail

inline PointClass classify_point(double beta, double h, int p, const ClassifyOptions& opt = {}) {
  if (p < 2) throw SpecError("classify_point: p must be >= 2");
  if (!(beta >= 0.0)) throw SpecError("classify_point: beta must be >= 0");
  const HFunction hf{beta, h, p};
  auto cands = detail::local_maximizers(hf, opt.grid, opt.newton_iters);
  std::sort(cands.begin(), cands.end(),
            [](const Maximizer& l, const Maximizer& r) { return l.location < r.location; });

  // Candidates with no dip of H between them are one maximum; on flat
  // stretches rounding noise splits it into several grid-local maxima.
  std::vector<std::vector<Maximizer>> clusters;
  for (const auto& c : cands) {
    if (!clusters.empty()) {
      const auto& prev = clusters.back().back();
      const double floor = std::min(prev.value, c.value);
      const double tie_local = opt.tol_f * std::max(1.0, std::abs(floor));
      if (c.location - prev.location <= opt.tol_x || hf(0.5 * (prev.location + c.location)) >= floor - tie_local) {
        clusters.back().push_back(c);
        continue;
      }
    }
    clusters.push_back({c});
  }
  std::vector<Maximizer> uniq;
  const double step = 2.0 / std::max(opt.grid - 1, 1);
  for (const auto& cl : clusters) {
    if (cl.size() == 1) {
      uniq.push_back(cl[0]);
      continue;
    }
    const double lo = std::max(cl.front().location - step, -1.0 + 1e-15);
    const double hi = std::min(cl.back().location + step, 1.0 - 1e-15);
    const double x = detail::polish_maximizer(hf, 0.5 * (lo + hi), lo, hi, 0);
    Maximizer m{x, hf(x, 2), hf(x)};
    for (const auto& c : cl)
      if (c.value > m.value) m.value = c.value;
    uniq.push_back(m);
  }

  double sup = -kInf;
  for (const auto& c : uniq) sup = std::max(sup, c.value);
  const double tie = opt.tol_f * std::max(1.0, std::abs(sup));

  PointClass pc;
  for (const auto& c : uniq)
    if (sup - c.value <= tie) pc.maximizers.push_back(c);

  const std::size_t k = pc.maximizers.size();
  if (k == 1) {
    pc.kind = std::abs(pc.maximizers[0].second_derivative) < opt.special_tol ? PointKind::Special
                                                                             : PointKind::Regular;
    pc.weights = {1.0};
    return pc;
  }

  const bool symmetric = k == 3 && p % 2 == 0 &&
                         std::abs(pc.maximizers[0].location + pc.maximizers[2].location) <= 1e3 * opt.tol_x &&
                         std::abs(pc.maximizers[1].location) <= 1e3 * opt.tol_x;
  pc.kind = symmetric ? PointKind::StronglyCritical : PointKind::WeaklyCritical;

  double total = 0.0;
  for (const auto& m : pc.maximizers) {
    const double w = 1.0 / std::sqrt((m.location * m.location - 1.0) * m.second_derivative);
    pc.weights.push_back(w);
    total += w;
  }
  for (double& w : pc.weights) w /= total;
  return pc;
}

// ---------------------------------------------------------------------------
// Thresholds and special points
// ---------------------------------------------------------------------------

namespace detail {

// max over [lo, hi] of a smooth f: grid scan (plus points crowding hi, where
// the maximizer sits for large p) followed by golden-section search around
// every grid-local maximum.
inline std::pair<double, double> maximize_1d(const std::function<double(double)>& f, double lo, double hi,
                                             int grid = 2001) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(grid) + 16);
  for (int i = 0; i < grid; ++i) xs.push_back(lo + (hi - lo) * i / (grid - 1));
  for (int k = 4; k <= 14; ++k) {
    const double x = hi - (hi - lo) * std::pow(10.0, -k);
    if (x > lo) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> fs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

  double best_x = xs[0];
  double best_f = fs[0];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool l = i == 0 || fs[i] >= fs[i - 1];
    const bool r = i + 1 == xs.size() || fs[i] >= fs[i + 1];
    if (!(l && r)) continue;
    double a = i == 0 ? xs[0] : xs[i - 1];
    double b = i + 1 == xs.size() ? xs[i] : xs[i + 1];
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = f(d);
      }
    }
    const double x = fc > fd ? c : d;
    const double fx = std::max(fc, fd);
    const double cand_x = fx > fs[i] ? x : xs[i];
    const double cand_f = std::max(fx, fs[i]);
    if (cand_f > best_f) {
      best_f = cand_f;
      best_x = cand_x;
    }
  }
  return {best_x, best_f};
}

// Smallest beta in [lo, hi] at which `positive(beta)` switches on, assuming
// the predicate is monotone.
template <class Pred>
double bisect_threshold(Pred positive, double lo, double hi, double tol) {
  if (positive(lo)) return lo;
  while (!positive(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw SolverError("threshold bisection: predicate never switches on");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (positive(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline constexpr double kPositiveSup = 1e-24;

}  // namespace detail

/// Smallest beta >= 0 for which sup_{[0,1]} (beta x^p - I(x)) > 0.
inline double beta_tilde(int p, double tol = 1e-12) {
  if (p < 2) throw SpecError("beta_tilde: p must be >= 2");
  auto positive = [p](double beta) {
    const auto f = [&](double x) { return beta * ipow(x, p) - binary_entropy(x); };
    return detail::maximize_1d(f, 0.0, 1.0).second > detail::kPositiveSup;
  };
  return detail::bisect_threshold(positive, 0.0, 1.0, tol);
}

struct SpecialPoint {
  double beta = 0.0;
  double h = 0.0;
  double m_star = 0.0;  // location of the degenerate maximizer
};

inline SpecialPoint special_point(int p) {
  if (p < 3) throw SpecError("special_point: p must be >= 3");
  const double pp = p;
  const double beta = 1.0 / (2.0 * (pp - 1.0)) * std::pow(pp / (pp - 2.0), (pp - 2.0) / 2.0);
  const double r = (pp - 2.0) / pp;
  const double h = std::atanh(std::sqrt(r)) - beta * pp * std::pow(r, (pp - 1.0) / 2.0);
  return {beta, h, std::sqrt(r)};
}

// ---------------------------------------------------------------------------
// Maximum likelihood for h (beta known) and beta (h known)
// ---------------------------------------------------------------------------

namespace detail {

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool found = false;
  double direction = 0.0;  // sign of the missing root when !found
};

// Root of a strictly increasing f, starting from [-50, 50] and doubling the
// offending end until the sign changes or |x| exceeds `limit`.
template <class F>
RootResult increasing_root(F f, double limit = 1e8) {
  RootResult res;
  double lo = -50.0;
  double hi = 50.0;
  double flo = f(lo);
  double fhi = f(hi);
  while (flo > 0.0) {
    hi = lo;
    fhi = flo;
    lo *= 2.0;
    if (lo < -limit) {
      res.direction = -1.0;
      return res;
    }
    flo = f(lo);
  }
  while (fhi < 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (hi > limit) {
      res.direction = 1.0;
      return res;
    }
    fhi = f(hi);
  }
  double x = 0.5 * (lo + hi);
  double fx = f(x);
  int it = 0;
  for (; it < 400; ++it) {
    if (fx == 0.0) break;
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    const double next = 0.5 * (lo + hi);
    if (next == lo || next == hi) break;
    x = next;
    fx = f(x);
  }
  // Report whichever end of the final bracket is closer to a root.
  const double best = std::abs(fx);
  res.root = x;
  res.residual = best;
  res.iterations = it;
  res.found = true;
  return res;
}

}  // namespace detail

/// Solves E_{beta,h,p}[xbar] = xbar_obs for h.
inline EstimateReport mle_h(double beta, int p, int n, double xbar_obs) {
  if (std::abs(xbar_obs) > 1.0) throw DomainError("mle_h: |xbar| > 1");
  if (std::abs(xbar_obs) == 1.0) return EstimateReport::sentinel(xbar_obs > 0 ? kInf : -kInf);
  const detail::CwTable tab(p, n);
  const auto f = [&](double h) { return tab.moment(beta, h, 1) - xbar_obs; };
  const auto r = detail::increasing_root(f);
  if (!r.found) return EstimateReport::sentinel(r.direction * kInf);
  EstimateReport rep;
  rep.estimate = r.root;
  rep.residual = r.residual;
  rep.iterations = r.iterations;
  return rep;
}

/// Solves E_{beta,h,p}[xbar^p] = xbar_obs^p for beta.
inline EstimateReport mle_beta(double h, int p, int n, double xbar_obs) {
  if (std::abs(xbar_obs) > 1.0) throw DomainError("mle_beta: |xbar| > 1");
  const double target = ipow(xbar_obs, p);
  if (p % 2 == 0 && xbar_obs == 0.0) return EstimateReport::sentinel(-kInf);
  if (target == 1.0) return EstimateReport::sentinel(kInf);
  if (target == -1.0) return EstimateReport::sentinel(-kInf);
  const detail::CwTable tab(p, n);
  const auto f = [&](double beta) { return tab.moment(beta, h, p) - target; };
  const auto r = detail::increasing_root(f);
  if (!r.found) return EstimateReport::sentinel(r.direction * kInf);
  EstimateReport rep;
  rep.estimate = r.root;
  rep.residual = r.residual;
  rep.iterations = r.iterations;
  return rep;
}

// ---------------------------------------------------------------------------
// Critical curve and confidence intervals
// ---------------------------------------------------------------------------

namespace detail {

inline double global_argmax(double beta, double h, int p, int grid = 4001) {
  const HFunction hf{beta, h, p};
  const auto ms = local_maximizers(hf, grid, 50);
  const auto best = std::max_element(ms.begin(), ms.end(), [](const Maximizer& a, const Maximizer& b) {
    return a.value < b.value;
  });
  return best->location;
}

// Parameter values along a 1-D path at which the global maximizer of H jumps.
template <class ArgmaxAt>
std::vector<double> locate_jumps(ArgmaxAt argmax_at, double lo, double hi, int scan = 401) {
  std::vector<double> grid(static_cast<std::size_t>(scan));
  std::vector<double> arg(grid.size());
  for (int i = 0; i < scan; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (scan - 1);
    arg[static_cast<std::size_t>(i)] = argmax_at(grid[static_cast<std::size_t>(i)]);
  }
  std::vector<double> jumps;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (std::abs(arg[i + 1] - arg[i]) <= 0.02) continue;
    double a = grid[i];
    double b = grid[i + 1];
    double ma = arg[i];
    double mb = arg[i + 1];
    while (b - a > 1e-11 * std::max(1.0, std::abs(a))) {
      const double c = 0.5 * (a + b);
      const double mc = argmax_at(c);
      if (std::abs(mc - ma) > std::abs(mb - mc)) {
        b = c;
        mb = mc;
      } else {
        a = c;
        ma = mc;
      }
    }
    if (std::abs(mb - ma) > 1e-3) jumps.push_back(0.5 * (a + b));
  }
  return jumps;
}

inline constexpr double kSpecialMatchTol = 1e-6;

}  // namespace detail

/// S_p(beta): fields h with (beta, h) on the closed critical curve.
inline std::vector<double> critical_fields(double beta, int p) {
  const double range = p * beta + 5.0;
  auto out = detail::locate_jumps([&](double h) { return detail::global_argmax(beta, h, p); }, -range, range);
  if (p == 2) {
    if (std::abs(beta - 0.5) <= detail::kSpecialMatchTol) out.push_back(0.0);
  } else {
    const auto sp = special_point(p);
    if (std::abs(beta - sp.beta) <= detail::kSpecialMatchTol) {
      out.push_back(sp.h);
      if (p % 2 == 0) out.push_back(-sp.h);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// T_p(h): inverse temperatures beta >= 0 with (beta, h) on the closed critical curve.
inline std::vector<double> critical_betas(double h, int p) {
  const double range = 2.0 * std::abs(h) + 5.0;
  auto out = detail::locate_jumps([&](double b) { return detail::global_argmax(b, h, p); }, 0.0, range);
  if (p >= 3) {
    const auto sp = special_point(p);
    const bool hit = std::abs(h - sp.h) <= detail::kSpecialMatchTol ||
                     (p % 2 == 0 && std::abs(h + sp.h) <= detail::kSpecialMatchTol);
    if (hit) out.push_back(sp.beta);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// A regular interval plus isolated parameter values that belong to the
/// confidence set; `enclosing` is the hull of both.
struct CurveInterval {
  Interval regular;
  std::vector<double> curve_points;
  Interval enclosing;

  bool contains(double v, double point_tol = 1e-9) const {
    if (regular.contains(v)) return true;
    return std::any_of(curve_points.begin(), curve_points.end(),
                       [&](double c) { return std::abs(c - v) <= point_tol; });
  }
};

namespace detail {
inline CurveInterval make_curve_interval(Interval reg, std::vector<double> pts) {
  CurveInterval ci{reg, std::move(pts), reg};
  for (double c : ci.curve_points) {
    ci.enclosing.lo = std::min(ci.enclosing.lo, c);
    ci.enclosing.hi = std::max(ci.enclosing.hi, c);
  }
  return ci;
}
}  // namespace detail

/// Interval for h with beta known. Pass `curve` to reuse a precomputed S_p(beta).
inline CurveInterval confidence_interval_h(double beta, int p, int n, double xbar_obs, double h_hat,
                                           double level,
                                           const std::vector<double>* curve = nullptr) {
  if (!(std::abs(xbar_obs) < 1.0)) throw DomainError("confidence_interval_h: |xbar| must be < 1");
  const double d2 = HFunction{beta, 0.0, p}(xbar_obs, 2);
  if (!(d2 < 0.0)) throw DomainError("confidence_interval_h: H''(xbar) >= 0");
  const double half = std::sqrt(-d2 / n) * normal_critical_value(level);
  return detail::make_curve_interval({h_hat - half, h_hat + half},
                                     curve ? *curve : critical_fields(beta, p));
}

/// Interval for beta with h != 0 known; H'' is evaluated at beta_hat.
inline CurveInterval confidence_interval_beta(double h, int p, int n, double xbar_obs, double beta_hat,
                                              double level,
                                              const std::vector<double>* curve = nullptr) {
  if (xbar_obs == 0.0) throw DomainError("confidence_interval_beta: xbar = 0");
  if (!(std::abs(xbar_obs) < 1.0)) throw DomainError("confidence_interval_beta: |xbar| must be < 1");
  if (!std::isfinite(beta_hat)) throw DomainError("confidence_interval_beta: beta_hat is not finite");
  const double d2 = HFunction{beta_hat, h, p}(xbar_obs, 2);
  if (!(d2 < 0.0)) throw DomainError("confidence_interval_beta: H''(xbar) >= 0");
  const double half =
      std::abs(std::pow(xbar_obs, 1 - p)) / p * std::sqrt(-d2 / n) * normal_critical_value(level);
  return detail::make_curve_interval({beta_hat - half, beta_hat + half},
                                     curve ? *curve : critical_betas(h, p));
}

// ---------------------------------------------------------------------------
// Limit law at special points
// ---------------------------------------------------------------------------

/// Density proportional to exp(a4 x^4 + b x) with a4 = H''''(m*)/24 < 0.
class QuarticExpDensity {
 public:
  QuarticExpDensity(double a4, double b) : a4_(a4), b_(b) {
    if (!(a4 < 0.0)) throw DomainError("limit density needs H''''(m*) < 0");
    // exp(a4 x^4 + |b| |x|) < e^-60 beyond this radius.
    double r = 1.0;
    while (a4_ * ipow(r, 4) + std::abs(b_) * r > -60.0) r *= 1.25;
    radius_ = r;
    const double z = integrate(-radius_, radius_, [this](double x) { return kernel(x); });
    log_norm_ = std::log(z);
  }

  double pdf(double x) const { return std::exp(a4_ * ipow(x, 4) + b_ * x - log_norm_); }

  double cdf(double x) const {
    if (x <= -radius_) return 0.0;
    if (x >= radius_) return 1.0;
    return integrate(-radius_, x, [this](double t) { return pdf(t); });
  }

  double mean() const {
    return integrate(-radius_, radius_, [this](double t) { return t * pdf(t); });
  }

  double normalizing_constant() const { return std::exp(-log_norm_); }
  double radius() const noexcept { return radius_; }

 private:
  double kernel(double x) const { return std::exp(a4_ * ipow(x, 4) + b_ * x); }

  template <class F>
  static double integrate(double a, double b, F f) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
  }

  double a4_;
  double b_;
  double radius_ = 1.0;
  double log_norm_ = 0.0;
};

/// Limit density of N^{1/4}(xbar - m*) under the perturbation
/// (beta + beta_bar N^{-3/4}, h + h_bar N^{-3/4}) of a special point.
inline QuarticExpDensity limit_density_special(int p, double beta_bar, double h_bar, double m_star,
                                               double h4) {
  return QuarticExpDensity(h4 / 24.0, beta_bar * p * std::pow(m_star, p - 1) + h_bar);
}

}  // namespace tising
