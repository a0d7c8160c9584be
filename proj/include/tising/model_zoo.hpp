#pragma once

// Random interaction tensors (SK, Erdos-Renyi, block models, p-partite) and the
// mean-field thresholds above which beta becomes estimable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "tising/common.hpp"
#include "tising/cw_exact.hpp"
#include "tising/tensor_core.hpp"

namespace tising {

// ---------------------------------------------------------------------------
// Block model specification
// ---------------------------------------------------------------------------

struct HsbmSpec {
  int p = 2;
  int K = 1;
  std::vector<double> lambda;  // K community proportions
  std::vector<double> theta;   // K^p entries, row-major in (j1, ..., jp)

  std::size_t index(std::span<const int> blocks) const {
    std::size_t r = 0;
    for (int b : blocks) r = r * static_cast<std::size_t>(K) + static_cast<std::size_t>(b);
    return r;
  }

  std::size_t tuple_count() const { return static_cast<std::size_t>(std::llround(std::pow(K, p))); }

  void validate() const {
    if (p < 2) throw SpecError("HsbmSpec: p must be >= 2");
    if (K < 1) throw SpecError("HsbmSpec: K must be >= 1");
    if (lambda.size() != static_cast<std::size_t>(K)) throw SpecError("HsbmSpec: need K proportions");
    double s = 0.0;
    for (double l : lambda) {
      if (!(l >= 0.0)) throw SpecError("HsbmSpec: proportions must be nonnegative");
      s += l;
    }
    if (std::abs(s - 1.0) > 1e-12) throw SpecError("HsbmSpec: proportions must sum to 1");
    if (theta.size() != tuple_count()) throw SpecError("HsbmSpec: theta must have K^p entries");
    for (double t : theta)
      if (!(t >= 0.0 && t <= 1.0)) throw SpecError("HsbmSpec: theta entries must lie in [0,1]");
    std::vector<int> tup(static_cast<std::size_t>(p));
    for (std::size_t r = 0; r < theta.size(); ++r) {
      decode(r, tup);
      std::vector<int> s2 = tup;
      std::sort(s2.begin(), s2.end());
      if (std::abs(theta[index(s2)] - theta[r]) > 1e-12) throw SpecError("HsbmSpec: theta must be symmetric");
    }
  }

  /// Copy with theta averaged over index permutations.
  HsbmSpec symmetrized() const {
    HsbmSpec out = *this;
    std::vector<int> tup(static_cast<std::size_t>(p));
    for (std::size_t r = 0; r < theta.size(); ++r) {
      decode(r, tup);
      std::sort(tup.begin(), tup.end());
      double s = 0.0;
      int cnt = 0;
      do {
        s += theta[index(tup)];
        ++cnt;
      } while (std::next_permutation(tup.begin(), tup.end()));
      out.theta[r] = s / cnt;
    }
    return out;
  }

  void decode(std::size_t r, std::vector<int>& tup) const {
    for (int l = p - 1; l >= 0; --l) {
      tup[static_cast<std::size_t>(l)] = static_cast<int>(r % static_cast<std::size_t>(K));
      r /= static_cast<std::size_t>(K);
    }
  }

  static HsbmSpec erdos_renyi(int p, double theta) {
    HsbmSpec s;
    s.p = p;
    s.K = 1;
    s.lambda = {1.0};
    s.theta = {theta};
    s.validate();
    return s;
  }
};

/// Block label of each vertex: contiguous ranges with boundaries floor(n * cumulative proportion).
inline std::vector<int> block_labels(const std::vector<double>& lambda, int n) {
  std::vector<int> lab(static_cast<std::size_t>(n));
  std::vector<long long> bound;
  double cum = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    cum += lambda[j];
    bound.push_back(j + 1 == lambda.size() ? n : static_cast<long long>(std::floor(n * cum + 1e-9)));
  }
  int j = 0;
  for (int v = 0; v < n; ++v) {
    while (v >= bound[static_cast<std::size_t>(j)]) ++j;
    lab[static_cast<std::size_t>(v)] = j;
  }
  return lab;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {

// Calls f(tuple) for every strictly increasing p-tuple from {0..n-1}.
template <class F>
void for_each_combination(int n, int p, F f) {
  if (p > n) return;
  std::vector<int> t(static_cast<std::size_t>(p));
  std::iota(t.begin(), t.end(), 0);
  while (true) {
    f(std::span<const int>(t));
    int k = p - 1;
    while (k >= 0 && t[static_cast<std::size_t>(k)] == n - p + k) --k;
    if (k < 0) return;
    ++t[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < p; ++j) t[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// p-spin SK tensor: c_e = n^{(1-p)/2} g_e on every unordered p-subset.
inline SparseTensor gen_sk(int p, int n, std::uint64_t seed) {
  if (p < 2) throw SpecError("gen_sk: p must be >= 2");
  if (n < p) throw SpecError("gen_sk: n must be >= p");
  Rng rng(seed);
  const double scale = std::pow(static_cast<double>(n), 0.5 * (1 - p));
  std::vector<int> idx;
  std::vector<double> coef;
  detail::for_each_combination(n, p, [&](std::span<const int> t) {
    idx.insert(idx.end(), t.begin(), t.end());
    coef.push_back(scale * standard_normal(rng));
  });
  return SparseTensor(p, n, std::move(idx), std::move(coef));
}

/// Block-model hypergraph with coefficient 1/n^{p-1} on each present edge.
inline SparseTensor gen_hsbm(const HsbmSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < spec.p) throw SpecError("gen_hsbm: n must be >= p");
  const auto lab = block_labels(spec.lambda, n);
  const double c = std::pow(static_cast<double>(n), 1 - spec.p);
  Rng rng(seed);
  std::vector<int> idx;
  std::vector<double> coef;
  std::vector<int> sig(static_cast<std::size_t>(spec.p));
  detail::for_each_combination(n, spec.p, [&](std::span<const int> t) {
    for (std::size_t l = 0; l < t.size(); ++l) sig[l] = lab[static_cast<std::size_t>(t[l])];
    if (uniform01(rng) < spec.theta[spec.index(sig)]) {
      idx.insert(idx.end(), t.begin(), t.end());
      coef.push_back(c);
    }
  });
  return SparseTensor(spec.p, n, std::move(idx), std::move(coef));
}

/// p-partite hypergraph on contiguous parts; every edge meets every part once.
/// Coefficients are 1/n^{p-1} as for the block model.
inline SparseTensor gen_partite(int p, const std::vector<int>& sizes, double theta, std::uint64_t seed) {
  if (p < 2) throw SpecError("gen_partite: p must be >= 2");
  if (sizes.size() != static_cast<std::size_t>(p)) throw SpecError("gen_partite: need p part sizes");
  if (!(theta >= 0.0 && theta <= 1.0)) throw SpecError("gen_partite: theta must lie in [0,1]");
  std::vector<int> start(sizes.size());
  int n = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j] < 1) throw SpecError("gen_partite: part sizes must be >= 1");
    start[j] = n;
    n += sizes[j];
  }
  const double c = std::pow(static_cast<double>(n), 1 - p);
  Rng rng(seed);
  std::vector<int> idx;
  std::vector<double> coef;
  std::vector<int> off(sizes.size(), 0);
  while (true) {
    if (uniform01(rng) < theta) {
      for (std::size_t j = 0; j < sizes.size(); ++j) idx.push_back(start[j] + off[j]);
      coef.push_back(c);
    }
    int j = p - 1;
    while (j >= 0 && off[static_cast<std::size_t>(j)] == sizes[static_cast<std::size_t>(j)] - 1) {
      off[static_cast<std::size_t>(j)] = 0;
      --j;
    }
    if (j < 0) break;
    ++off[static_cast<std::size_t>(j)];
  }
  return SparseTensor(p, n, std::move(idx), std::move(coef));
}

/// Graph where each vertex links to its k nearest neighbours on either side of a ring.
inline SparseTensor gen_ring_lattice(int n, int k, double weight) {
  if (k < 1 || 2 * k >= n) throw SpecError("gen_ring_lattice: need 1 <= k and 2k < n");
  std::vector<SparseTensor::Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= k; ++d) {
      const int j = (i + d) % n;
      edges.push_back({{std::min(i, j), std::max(i, j)}, weight});
    }
  return SparseTensor::from_edges(2, n, edges);
}

/// Random simple graph with maximum degree `degree`, built by random stub matching.
inline SparseTensor gen_bounded_degree(int n, int degree, double weight, std::uint64_t seed) {
  if (n < 2 || degree < 1) throw SpecError("gen_bounded_degree: need n >= 2 and degree >= 1");
  Rng rng(seed);
  std::vector<int> stubs;
  for (int v = 0; v < n; ++v)
    for (int d = 0; d < degree; ++d) stubs.push_back(v);
  for (std::size_t i = stubs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(stubs[i - 1], stubs[std::min(j, i - 1)]);
  }
  std::set<std::pair<int, int>> seen;
  std::vector<SparseTensor::Edge> edges;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    const int a = std::min(stubs[i], stubs[i + 1]);
    const int b = std::max(stubs[i], stubs[i + 1]);
    if (a == b || !seen.insert({a, b}).second) continue;
    edges.push_back({{a, b}, weight});
  }
  return SparseTensor::from_edges(2, n, edges);
}

/// 3-tensor with coefficient `scale` on every triangle of a graph.
inline SparseTensor triangle_tensor(const SparseTensor& graph, double scale = 1.0) {
  if (graph.p() != 2) throw SpecError("triangle_tensor: graph must have p = 2");
  const int n = graph.n();
  std::vector<std::vector<int>> nb(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    if (graph.coef(e) == 0.0) continue;
    const auto ed = graph.edge(e);
    nb[static_cast<std::size_t>(ed[0])].push_back(ed[1]);
    nb[static_cast<std::size_t>(ed[1])].push_back(ed[0]);
  }
  for (auto& v : nb) std::sort(v.begin(), v.end());
  std::vector<int> idx;
  std::vector<double> coef;
  for (int a = 0; a < n; ++a)
    for (int b : nb[static_cast<std::size_t>(a)]) {
      if (b <= a) continue;
      const auto& na = nb[static_cast<std::size_t>(a)];
      const auto& nbb = nb[static_cast<std::size_t>(b)];
      std::vector<int> common;
      std::set_intersection(na.begin(), na.end(), nbb.begin(), nbb.end(), std::back_inserter(common));
      for (int c : common)
        if (c > b) {
          idx.insert(idx.end(), {a, b, c});
          coef.push_back(scale);
        }
    }
  return SparseTensor(3, n, std::move(idx), std::move(coef));
}

// ---------------------------------------------------------------------------
// Variational objective
// ---------------------------------------------------------------------------

/// phi_beta(t) = beta * sum_{j1..jp} theta prod(lambda t) - sum_j lambda_j I(t_j).
inline double phi_eval(const HsbmSpec& spec, double beta, std::span<const double> t) {
  if (t.size() != static_cast<std::size_t>(spec.K)) throw DimensionMismatch("phi_eval: t must have K entries");
  std::vector<double> lt(t.size());
  double ent = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (std::abs(t[j]) > 1.0) throw DomainError("phi_eval: |t_j| > 1");
    lt[j] = spec.lambda[j] * t[j];
    ent += spec.lambda[j] * binary_entropy(t[j]);
  }
  std::vector<int> tup(static_cast<std::size_t>(spec.p));
  double poly = 0.0;
  for (std::size_t r = 0; r < spec.theta.size(); ++r) {
    if (spec.theta[r] == 0.0) continue;
    spec.decode(r, tup);
    double prod = spec.theta[r];
    for (int j : tup) prod *= lt[static_cast<std::size_t>(j)];
    poly += prod;
  }
  return beta * poly - ent;
}

/// Gradient of phi_eval in t; needs |t_j| < 1.
inline std::vector<double> phi_gradient(const HsbmSpec& spec, double beta, std::span<const double> t) {
  if (t.size() != static_cast<std::size_t>(spec.K)) throw DimensionMismatch("phi_gradient: t must have K entries");
  std::vector<double> lt(t.size());
  std::vector<double> g(t.size(), 0.0);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (!(std::abs(t[j]) < 1.0)) throw DomainError("phi_gradient: need |t_j| < 1");
    lt[j] = spec.lambda[j] * t[j];
    g[j] = -spec.lambda[j] * std::atanh(t[j]);
  }
  std::vector<int> tup(static_cast<std::size_t>(spec.p));
  for (std::size_t r = 0; r < spec.theta.size(); ++r) {
    if (spec.theta[r] == 0.0) continue;
    spec.decode(r, tup);
    for (std::size_t l = 0; l < tup.size(); ++l) {
      double prod = beta * spec.theta[r] * spec.lambda[static_cast<std::size_t>(tup[l])];
      for (std::size_t q = 0; q < tup.size(); ++q)
        if (q != l) prod *= lt[static_cast<std::size_t>(tup[q])];
      g[static_cast<std::size_t>(tup[l])] += prod;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

struct ThresholdResult {
  double beta_star = 0.0;
  std::vector<double> argmax_t;  // maximizer over [0,1]^K at beta_star + tolerance
  double tolerance = 0.0;
};

struct BoxMaximum {
  std::vector<double> t;
  double value = 0.0;
};

namespace detail {

// sup over [0,1]^K: 1-D grid (step 1e-3) plus golden-section polish per
// coordinate, cycled to convergence from several interior starts.
inline BoxMaximum maximize_box(const std::function<double(const std::vector<double>&)>& f, int K) {
  if (K == 1) {
    std::vector<double> t(1);
    const auto best = maximize_1d(
        [&](double s) {
          t[0] = s;
          return f(t);
        },
        0.0, 1.0, 1001);
    return {{best.first}, best.second};
  }
  std::vector<std::vector<double>> starts;
  for (double s : {0.3, 0.6, 0.9, 0.99, 0.999}) starts.emplace_back(static_cast<std::size_t>(K), s);
  for (int k = 0; k < K; ++k) {
    std::vector<double> s(static_cast<std::size_t>(K), 0.3);
    s[static_cast<std::size_t>(k)] = 0.95;
    starts.push_back(std::move(s));
  }

  BoxMaximum best{std::vector<double>(static_cast<std::size_t>(K), 0.0), -kInf};
  for (auto t : starts) {
    double val = f(t);
    double last_gain = kInf;
    for (int sweep = 0; sweep < 500; ++sweep) {
      const double before = val;
      const auto prev = t;
      for (int k = 0; k < K; ++k) {
        auto& tk = t[static_cast<std::size_t>(k)];
        const double keep = tk;
        const auto r = maximize_1d(
            [&](double s) {
              tk = s;
              return f(t);
            },
            0.0, 1.0, 1001);
        if (r.second >= val) {
          tk = r.first;
          val = r.second;
        } else {
          tk = keep;
        }
      }
      // Pattern move along the sweep's net displacement, which follows ridges
      // that pure coordinate steps crawl along.
      double amax = kInf;
      bool moved = false;
      for (int k = 0; k < K; ++k) {
        const double d = t[static_cast<std::size_t>(k)] - prev[static_cast<std::size_t>(k)];
        if (d > 0.0) amax = std::min(amax, (1.0 - t[static_cast<std::size_t>(k)]) / d);
        if (d < 0.0) amax = std::min(amax, -t[static_cast<std::size_t>(k)] / d);
        moved = moved || d != 0.0;
      }
      if (moved && std::isfinite(amax) && amax > 0.0) {
        const auto base = t;
        auto trial = t;
        const auto r = maximize_1d(
            [&](double a) {
              for (int k = 0; k < K; ++k) {
                const auto uk = static_cast<std::size_t>(k);
                trial[uk] = std::clamp(base[uk] + a * (base[uk] - prev[uk]), 0.0, 1.0);
              }
              return f(trial);
            },
            0.0, amax, 201);
        if (r.second > val) {
          for (int k = 0; k < K; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            t[uk] = std::clamp(base[uk] + r.first * (base[uk] - prev[uk]), 0.0, 1.0);
          }
          val = r.second;
        }
      }
      last_gain = val - before;
      if (last_gain <= 1e-15 * std::max(1.0, std::abs(val))) break;
    }
    if (last_gain > 1e-10 * std::max(1.0, std::abs(val)))
      throw SolverError("threshold: coordinate ascent did not converge");
    if (val > best.value) best = {t, val};
  }
  return best;
}

inline ThresholdResult threshold_from_objective(
    const std::function<double(double, const std::vector<double>&)>& phi, int K, double tol) {
  if (!(tol > 0.0)) throw DomainError("threshold: tol must be > 0");
  auto sup_at = [&](double beta) {
    return maximize_box([&](const std::vector<double>& t) { return phi(beta, t); }, K);
  };
  auto positive = [&](double beta) { return sup_at(beta).value > kPositiveSup; };
  const double b = bisect_threshold(positive, 0.0, 1.0, tol);
  ThresholdResult res;
  res.beta_star = b;
  res.tolerance = tol;
  res.argmax_t = sup_at(b + tol).t;
  return res;
}

}  // namespace detail

/// Smallest beta with sup_{t in [0,1]^K} phi_beta(t) > 0.
inline ThresholdResult threshold_hsbm(const HsbmSpec& spec, double tol = 1e-6) {
  spec.validate();
  if (spec.K > 6) throw SpecError("threshold_hsbm: K must be <= 6");
  return detail::threshold_from_objective(
      [&](double beta, const std::vector<double>& t) { return phi_eval(spec, beta, t); }, spec.K, tol);
}

/// Threshold of the p-partite model with p equal parts, from the objective
/// beta theta p^{-p} prod_j t_j - (1/p) sum_j I(t_j).
inline double threshold_equipartite(int p, double theta, double tol = 1e-6) {
  if (p < 2) throw SpecError("threshold_equipartite: p must be >= 2");
  if (!(theta > 0.0 && theta <= 1.0)) throw SpecError("threshold_equipartite: theta must lie in (0,1]");
  const double c = theta * std::pow(static_cast<double>(p), -p);
  auto phi = [&](double beta, const std::vector<double>& t) {
    double prod = 1.0;
    double ent = 0.0;
    for (double v : t) {
      prod *= v;
      ent += binary_entropy(v);
    }
    return beta * c * prod - ent / p;
  };
  // The threshold is of order p^p; start the bracket search accordingly.
  const double scale = std::pow(static_cast<double>(p), p) / theta;
  const auto r = detail::threshold_from_objective(
      [&](double beta, const std::vector<double>& t) { return phi(beta * scale, t); }, p, tol / scale);
  return r.beta_star * scale;
}

/// Curie-Weiss thresholds beta*(p) for p = 2..p_max.
inline std::vector<std::pair<int, double>> cw_threshold_table(int p_max, double tol = 1e-6) {
  if (p_max < 2) throw SpecError("cw_threshold_table: p_max must be >= 2");
  std::vector<std::pair<int, double>> out;
  for (int p = 2; p <= p_max; ++p) out.emplace_back(p, threshold_hsbm(HsbmSpec::erdos_renyi(p, 1.0), tol).beta_star);
  return out;
}

}  // namespace tising
