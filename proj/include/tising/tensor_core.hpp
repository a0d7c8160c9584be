#pragma once

// p-tensor Ising model on a weighted hypergraph
//
//   P(x) ∝ exp( beta * H_N(x) + sum_i h_i x_i ),
//   H_N(x) = sum over ordered distinct index tuples of J_{i1..ip} x_{i1}..x_{ip}.
//
// SparseTensor stores one coefficient per unordered hyperedge, so H_N picks up a
// factor p! and the local field m_i a factor (p-1)!. DenseCw is the Curie-Weiss
// tensor J = n^{1-p} on all tuples, diagonals included.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "tising/common.hpp"

namespace tising {

// ---------------------------------------------------------------------------
// Spin configurations
// ---------------------------------------------------------------------------

class SpinVector {
 public:
  SpinVector() = default;

  explicit SpinVector(std::size_t n, int value = 1) : s_(n, value) {
    if (value != 1 && value != -1) throw DomainError("SpinVector: entries must be +1 or -1");
  }

  explicit SpinVector(std::vector<int> values) : s_(std::move(values)) {
    for (int v : s_)
      if (v != 1 && v != -1) throw DomainError("SpinVector: entries must be +1 or -1");
  }

  /// `plus` spins set to +1 at uniformly random positions.
  static SpinVector with_count(std::size_t n, std::size_t plus, Rng& rng) {
    if (plus > n) throw DomainError("SpinVector::with_count: plus > n");
    SpinVector x(n, -1);
    for (std::size_t i = 0; i < plus; ++i) x.s_[i] = 1;
    // Fisher-Yates with the library's own uniform draws.
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(x.s_[i - 1], x.s_[std::min(j, i - 1)]);
    }
    return x;
  }

  static SpinVector random(std::size_t n, Rng& rng) {
    SpinVector x(n);
    for (auto& v : x.s_) v = uniform01(rng) < 0.5 ? -1 : 1;
    return x;
  }

  std::size_t size() const noexcept { return s_.size(); }
  int operator[](std::size_t i) const { return s_[i]; }
  int at(std::size_t i) const {
    if (i >= s_.size()) throw IndexOutOfRange("SpinVector: index out of range");
    return s_[i];
  }
  void set(std::size_t i, int v) {
    if (v != 1 && v != -1) throw DomainError("SpinVector: entries must be +1 or -1");
    s_.at(i) = v;
  }
  void flip(std::size_t i) { s_.at(i) = -s_.at(i); }

  long long sum() const noexcept { return std::accumulate(s_.begin(), s_.end(), 0LL); }
  double mean() const noexcept { return s_.empty() ? 0.0 : static_cast<double>(sum()) / s_.size(); }
  const std::vector<int>& values() const noexcept { return s_; }

  bool operator==(const SpinVector&) const = default;

 private:
  std::vector<int> s_;
};

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

class SparseTensor {
 public:
  struct Edge {
    std::vector<int> idx;
    double c = 0.0;
  };

  SparseTensor(int p, int n) : p_(p), n_(n), incidence_(static_cast<std::size_t>(std::max(n, 0))) {
    if (p < 2) throw SpecError("SparseTensor: p must be >= 2");
    if (n < 0) throw SpecError("SparseTensor: n must be >= 0");
  }

  /// Flat storage: edge e occupies idx[e*p .. e*p+p). Tuples must be strictly
  /// increasing, below n and pairwise distinct.
  SparseTensor(int p, int n, std::vector<int> idx, std::vector<double> coef) : SparseTensor(p, n) {
    if (idx.size() != coef.size() * static_cast<std::size_t>(p))
      throw DimensionMismatch("SparseTensor: index and coefficient arrays disagree");
    idx_ = std::move(idx);
    coef_ = std::move(coef);
    finalize();
  }

  static SparseTensor from_edges(int p, int n, const std::vector<Edge>& edges) {
    std::vector<int> idx;
    std::vector<double> coef;
    idx.reserve(edges.size() * static_cast<std::size_t>(p));
    for (const auto& e : edges) {
      if (e.idx.size() != static_cast<std::size_t>(p)) throw SpecError("SparseTensor: edge arity differs from p");
      idx.insert(idx.end(), e.idx.begin(), e.idx.end());
      coef.push_back(e.c);
    }
    return SparseTensor(p, n, std::move(idx), std::move(coef));
  }

  int p() const noexcept { return p_; }
  int n() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return coef_.size(); }

  std::span<const int> edge(std::size_t e) const {
    return {idx_.data() + e * static_cast<std::size_t>(p_), static_cast<std::size_t>(p_)};
  }
  double coef(std::size_t e) const { return coef_[e]; }
  const std::vector<std::size_t>& incident(std::size_t i) const { return incidence_[i]; }

  /// Scales every coefficient; used for the user-supplied normalization of
  /// indicator tensors.
  SparseTensor scaled(double s) const {
    SparseTensor out = *this;
    for (double& c : out.coef_) c *= s;
    return out;
  }

 private:
  void finalize() {
    const auto p = static_cast<std::size_t>(p_);
    const std::size_t m = coef_.size();
    for (std::size_t e = 0; e < m; ++e) {
      const int* t = idx_.data() + e * p;
      for (std::size_t k = 0; k < p; ++k) {
        if (t[k] < 0 || t[k] >= n_) throw IndexOutOfRange("SparseTensor: vertex index out of range");
        if (k > 0 && t[k] <= t[k - 1]) throw SpecError("SparseTensor: edge indices must be strictly increasing");
      }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(idx_.begin() + a * p, idx_.begin() + (a + 1) * p, idx_.begin() + b * p,
                                          idx_.begin() + (b + 1) * p);
    };
    if (!std::is_sorted(order.begin(), order.end(), less)) {
      std::sort(order.begin(), order.end(), less);
      std::vector<int> idx(idx_.size());
      std::vector<double> coef(m);
      for (std::size_t r = 0; r < m; ++r) {
        std::copy_n(idx_.begin() + order[r] * p, p, idx.begin() + r * p);
        coef[r] = coef_[order[r]];
      }
      idx_ = std::move(idx);
      coef_ = std::move(coef);
    }
    for (std::size_t e = 1; e < m; ++e)
      if (std::equal(idx_.begin() + (e - 1) * p, idx_.begin() + e * p, idx_.begin() + e * p))
        throw SpecError("SparseTensor: duplicate edge");
    for (auto& inc : incidence_) inc.clear();
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t k = 0; k < p; ++k) incidence_[static_cast<std::size_t>(idx_[e * p + k])].push_back(e);
  }

  int p_;
  int n_;
  std::vector<int> idx_;
  std::vector<double> coef_;
  std::vector<std::vector<std::size_t>> incidence_;
};

struct DenseCw {
  int p = 2;
  int n = 1;

  DenseCw(int p_, int n_) : p(p_), n(n_) {
    if (p < 2) throw SpecError("DenseCw: p must be >= 2");
    if (n < 1) throw SpecError("DenseCw: n must be >= 1");
  }
};

namespace detail {
inline void check_dims(int n, const SpinVector& x) {
  if (x.size() != static_cast<std::size_t>(n)) throw DimensionMismatch("spin vector length differs from model size");
}

// Product of x over edge e, skipping up to two positions.
inline double edge_product(std::span<const int> e, const SpinVector& x, int skip_a = -1, int skip_b = -1) {
  double r = 1.0;
  for (int v : e)
    if (v != skip_a && v != skip_b) r *= x[static_cast<std::size_t>(v)];
  return r;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Hamiltonian and local fields
// ---------------------------------------------------------------------------

inline double hamiltonian(const SparseTensor& t, const SpinVector& x) {
  detail::check_dims(t.n(), x);
  double s = 0.0;
  for (std::size_t e = 0; e < t.edge_count(); ++e) s += t.coef(e) * detail::edge_product(t.edge(e), x);
  return factorial(t.p()) * s;
}

inline double hamiltonian(const DenseCw& m, const SpinVector& x) {
  detail::check_dims(m.n, x);
  return m.n * ipow(x.mean(), m.p);
}

inline double local_field(const SparseTensor& t, const SpinVector& x, std::size_t i) {
  detail::check_dims(t.n(), x);
  if (i >= static_cast<std::size_t>(t.n())) throw IndexOutOfRange("local_field: index out of range");
  double s = 0.0;
  for (std::size_t e : t.incident(i)) s += t.coef(e) * detail::edge_product(t.edge(e), x, static_cast<int>(i));
  return factorial(t.p() - 1) * s;
}

inline double local_field(const DenseCw& m, const SpinVector& x, std::size_t i) {
  detail::check_dims(m.n, x);
  if (i >= static_cast<std::size_t>(m.n)) throw IndexOutOfRange("local_field: index out of range");
  return ipow(x.mean(), m.p - 1);
}

inline std::vector<double> local_fields(const SparseTensor& t, const SpinVector& x) {
  detail::check_dims(t.n(), x);
  std::vector<double> m(static_cast<std::size_t>(t.n()), 0.0);
  const double f = factorial(t.p() - 1);
  for (std::size_t e = 0; e < t.edge_count(); ++e) {
    const auto edge = t.edge(e);
    const double all = detail::edge_product(edge, x);
    for (int v : edge) m[static_cast<std::size_t>(v)] += f * t.coef(e) * all * x[static_cast<std::size_t>(v)];
  }
  return m;
}

inline std::vector<double> local_fields(const DenseCw& c, const SpinVector& x) {
  detail::check_dims(c.n, x);
  return std::vector<double>(static_cast<std::size_t>(c.n), ipow(x.mean(), c.p - 1));
}

// ---------------------------------------------------------------------------
// Gibbs sampling
// ---------------------------------------------------------------------------

template <class Model>
class GibbsSampler;

/// Systematic-scan sampler with incrementally maintained local fields.
template <>
class GibbsSampler<SparseTensor> {
 public:
  GibbsSampler(const SparseTensor& model, SpinVector x, double beta, std::vector<double> h, std::uint64_t seed)
      : model_(&model), x_(std::move(x)), beta_(beta), h_(std::move(h)), rng_(seed) {
    detail::check_dims(model.n(), x_);
    if (!h_.empty() && h_.size() != x_.size()) throw DimensionMismatch("GibbsSampler: field length differs from n");
    m_ = local_fields(model, x_);
    pf_ = factorial(model.p() - 1);
  }

  void sweep() {
    const std::size_t n = x_.size();
    const double pb = model_->p() * beta_;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = pb * m_[i] + (h_.empty() ? 0.0 : h_[i]);
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * eta));
      const int s = uniform01(rng_) < p_plus ? 1 : -1;
      if (s != x_[i]) {
        x_.set(i, s);
        update_fields(i);
      }
    }
  }

  void run(int sweeps) {
    for (int k = 0; k < sweeps; ++k) sweep();
  }

  const SpinVector& state() const noexcept { return x_; }
  const std::vector<double>& fields() const noexcept { return m_; }
  Rng& rng() noexcept { return rng_; }

 private:
  void update_fields(std::size_t i) {
    const double si = x_[i];
    for (std::size_t e : model_->incident(i)) {
      const auto edge = model_->edge(e);
      const double c = pf_ * model_->coef(e);
      for (int j : edge) {
        if (static_cast<std::size_t>(j) == i) continue;
        const double rest = detail::edge_product(edge, x_, static_cast<int>(i), j);
        m_[static_cast<std::size_t>(j)] += 2.0 * si * c * rest;
      }
    }
  }

  const SparseTensor* model_;
  SpinVector x_;
  double beta_;
  std::vector<double> h_;
  Rng rng_;
  std::vector<double> m_;
  double pf_ = 1.0;
};

/// Curie-Weiss sampler using the exact conditional of the all-tuples
/// Hamiltonian S^p / n^{p-1}, tracking S = sum of spins.
template <>
class GibbsSampler<DenseCw> {
 public:
  GibbsSampler(const DenseCw& model, SpinVector x, double beta, std::vector<double> h, std::uint64_t seed)
      : model_(model), x_(std::move(x)), beta_(beta), h_(std::move(h)), rng_(seed) {
    detail::check_dims(model.n, x_);
    if (!h_.empty() && h_.size() != x_.size()) throw DimensionMismatch("GibbsSampler: field length differs from n");
    sum_ = x_.sum();
    scale_ = std::pow(static_cast<double>(model.n), 1 - model.p);
  }

  void sweep() {
    const std::size_t n = x_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double rest = static_cast<double>(sum_ - x_[i]);
      const double dh = scale_ * (ipow(rest + 1.0, model_.p) - ipow(rest - 1.0, model_.p));
      const double p_plus = 1.0 / (1.0 + std::exp(-beta_ * dh - 2.0 * (h_.empty() ? 0.0 : h_[i])));
      const int s = uniform01(rng_) < p_plus ? 1 : -1;
      if (s != x_[i]) {
        sum_ += 2 * s;
        x_.set(i, s);
      }
    }
  }

  void run(int sweeps) {
    for (int k = 0; k < sweeps; ++k) sweep();
  }

  const SpinVector& state() const noexcept { return x_; }
  Rng& rng() noexcept { return rng_; }

 private:
  DenseCw model_;
  SpinVector x_;
  double beta_;
  std::vector<double> h_;
  Rng rng_;
  long long sum_ = 0;
  double scale_ = 1.0;
};

/// One sweep from `x`; `rng` supplies the sweep's seed and is advanced.
template <class Model>
SpinVector gibbs_sweep(const Model& model, const SpinVector& x, double beta, const std::vector<double>& h_field,
                       Rng& rng) {
  GibbsSampler<Model> s(model, x, beta, h_field, rng());
  s.sweep();
  return s.state();
}

struct ChainOptions {
  int burn_in = 1000;
  int thin = 5;
};

/// `count` states from one chain started at `x0`.
template <class Model>
std::vector<SpinVector> gibbs_chain(const Model& model, SpinVector x0, double beta, const std::vector<double>& h,
                                    std::size_t count, std::uint64_t seed, const ChainOptions& opt = {}) {
  GibbsSampler<Model> s(model, std::move(x0), beta, h, seed);
  s.run(opt.burn_in);
  std::vector<SpinVector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    s.run(std::max(opt.thin, 1));
    out.push_back(s.state());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maximum pseudolikelihood
// ---------------------------------------------------------------------------

namespace detail {

// inf{b >= 0 : hn = sum_i m_i tanh(p b m_i)}.
inline EstimateReport mple_solve(double hn, const std::vector<double>& m, int p, double bracket_max) {
  EstimateReport rep;
  if (hn == 0.0) {
    rep.estimate = 0.0;
    return rep;
  }
  if (hn < 0.0) return EstimateReport::sentinel(kInf);
  double limit = 0.0;
  for (double v : m) limit += std::abs(v);
  if (hn >= limit) return EstimateReport::sentinel(kInf);

  // Compensated sum: for small |xbar| the root is flat in b, so plain
  // summation error of order n*eps moves the estimate visibly.
  auto f = [&](double b) {
    double s = -hn;
    double c = 0.0;
    for (double v : m) {
      const double term = v * std::tanh(p * b * v);
      const double t = s + term;
      c += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
      s = t;
    }
    return s + c;
  };
  double lo = 0.0;
  double hi = bracket_max > 0.0 ? bracket_max : 50.0;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) return EstimateReport::sentinel(kInf);
  }
  int it = 0;
  for (; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  rep.estimate = hi;
  rep.residual = std::abs(f(hi));
  rep.iterations = it;
  return rep;
}

}  // namespace detail

template <class Model>
EstimateReport mple(const Model& model, const SpinVector& x, double bracket_max = 50.0) {
  const double hn = hamiltonian(model, x);
  const auto m = local_fields(model, x);
  int p = 0;
  if constexpr (std::is_same_v<Model, DenseCw>)
    p = model.p;
  else
    p = model.p();
  return detail::mple_solve(hn, m, p, bracket_max);
}

/// Closed-form Curie-Weiss pseudolikelihood estimate atanh(t) / (p t^{p-1}).
inline double mple_cw_closed_form(int p, double t) {
  if (t == 0.0) return 0.0;
  if (p % 2 == 1 && t < 0.0) return kInf;
  return std::atanh(t) / (p * ipow(t, p - 1));
}

/// Curie-Weiss MPLE with its asymptotic standard error and Wald interval.
inline EstimateReport mple_cw_ci(int p, double xbar_obs, int n, double level) {
  if (xbar_obs == 0.0) throw DomainError("mple_cw_ci: xbar = 0");
  if (!(std::abs(xbar_obs) < 1.0)) throw DomainError("mple_cw_ci: |xbar| must be < 1");
  const double est = mple_cw_closed_form(p, xbar_obs);
  if (!std::isfinite(est)) return EstimateReport::sentinel(est);
  const double t = std::abs(xbar_obs);
  const double g2 = est * p * (p - 1) * ipow(t, p - 2) - 1.0 / (1.0 - t * t);
  if (!(g2 < 0.0)) throw DomainError("mple_cw_ci: g''(|xbar|) >= 0");
  EstimateReport rep;
  rep.estimate = est;
  rep.std_error = std::pow(t, 1 - p) / p * std::sqrt(-g2 / n);
  const double z = normal_critical_value(level);
  rep.ci = Interval{est - z * *rep.std_error, est + z * *rep.std_error};
  return rep;
}

// ---------------------------------------------------------------------------
// Spectral diagnostics
// ---------------------------------------------------------------------------

struct PowerOptions {
  int iters = 500;
  double tol = 1e-8;
  std::uint64_t restart_seed = 0x5eedULL;
};

namespace detail {

// Largest |eigenvalue| of a symmetric operator given by `matvec(v, out)`.
template <class MatVec>
double power_norm(MatVec matvec, std::size_t n, const PowerOptions& opt) {
  if (n == 0) return 0.0;
  auto run = [&](std::vector<double> v) {
    std::vector<double> w(n);
    double est = 0.0;
    for (int it = 0; it < opt.iters; ++it) {
      std::fill(w.begin(), w.end(), 0.0);
      matvec(v, w);
      double nrm = 0.0;
      for (double a : w) nrm += a * a;
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) return 0.0;
      const double prev = est;
      est = nrm;
      for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nrm;
      if (it > 0 && std::abs(est - prev) <= opt.tol * est) break;
    }
    return est;
  };
  const double best = run(std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n))));
  Rng rng(opt.restart_seed);
  std::vector<double> r(n);
  double nr = 0.0;
  for (double& a : r) {
    a = standard_normal(rng);
    nr += a * a;
  }
  for (double& a : r) a /= std::sqrt(nr);
  return std::max(best, run(std::move(r)));
}

}  // namespace detail

/// ||J_N(x)||_2 where J_{ab}(x) contracts the tensor against x on p-2 slots.
inline double local_interaction_norm(const SparseTensor& t, const SpinVector& x, const PowerOptions& opt = {}) {
  detail::check_dims(t.n(), x);
  if (opt.iters < 1) throw DomainError("local_interaction_norm: iters must be >= 1");
  const double f = factorial(t.p() - 2);
  auto mv = [&](const std::vector<double>& v, std::vector<double>& y) {
    for (std::size_t e = 0; e < t.edge_count(); ++e) {
      const auto edge = t.edge(e);
      const double pe = detail::edge_product(edge, x);
      double tot = 0.0;
      for (int b : edge) tot += x[static_cast<std::size_t>(b)] * v[static_cast<std::size_t>(b)];
      const double c = f * t.coef(e) * pe;
      for (int a : edge) {
        const auto ua = static_cast<std::size_t>(a);
        y[ua] += c * x[ua] * (tot - x[ua] * v[ua]);
      }
    }
  };
  return detail::power_norm(mv, x.size(), opt);
}

/// For the all-tuples tensor J(x) = (xbar^{p-2}/n) 1 1^T.
inline double local_interaction_norm(const DenseCw& m, const SpinVector& x, const PowerOptions& opt = {}) {
  detail::check_dims(m.n, x);
  if (opt.iters < 1) throw DomainError("local_interaction_norm: iters must be >= 1");
  const double c = ipow(x.mean(), m.p - 2) / m.n;
  auto mv = [&](const std::vector<double>& v, std::vector<double>& y) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& a : y) a = c * s;
  };
  return detail::power_norm(mv, x.size(), opt);
}

/// ||D||_2 for the co-degree matrix d(a,b) = sum of |c_e| over edges containing a and b.
inline double codegree_norm(const SparseTensor& t, const PowerOptions& opt = {}) {
  auto mv = [&](const std::vector<double>& v, std::vector<double>& y) {
    for (std::size_t e = 0; e < t.edge_count(); ++e) {
      const auto edge = t.edge(e);
      double tot = 0.0;
      for (int b : edge) tot += v[static_cast<std::size_t>(b)];
      const double c = std::abs(t.coef(e));
      for (int a : edge) y[static_cast<std::size_t>(a)] += c * (tot - v[static_cast<std::size_t>(a)]);
    }
  };
  return detail::power_norm(mv, static_cast<std::size_t>(t.n()), opt);
}

inline double codegree_norm(const DenseCw& m, const PowerOptions& = {}) {
  // Every entry equals 1 / (n (p-2)!), a rank-one matrix.
  return 1.0 / factorial(m.p - 2);
}

}  // namespace tising
