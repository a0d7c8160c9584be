#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "oracles.hpp"
#include "tising/cw_exact.hpp"
#include "tising/model_zoo.hpp"
#include "tising/tensor_core.hpp"

using namespace tising;

namespace {

// Random tensor on n vertices keeping each p-subset with probability `keep`.
SparseTensor random_tensor(int p, int n, double keep, Rng& rng) {
  std::vector<int> idx;
  std::vector<double> coef;
  detail::for_each_combination(n, p, [&](std::span<const int> t) {
    if (uniform01(rng) >= keep) return;
    idx.insert(idx.end(), t.begin(), t.end());
    coef.push_back(2.0 * uniform01(rng) - 1.0);
  });
  return SparseTensor(p, n, std::move(idx), std::move(coef));
}

// Dense p = 3 array with the coefficient on every permutation of each edge.
std::vector<double> dense3(const SparseTensor& t) {
  const auto n = static_cast<std::size_t>(t.n());
  std::vector<double> j(n * n * n, 0.0);
  for (std::size_t e = 0; e < t.edge_count(); ++e) {
    std::vector<int> v(t.edge(e).begin(), t.edge(e).end());
    do {
      j[(static_cast<std::size_t>(v[0]) * n + v[1]) * n + v[2]] = t.coef(e);
    } while (std::next_permutation(v.begin(), v.end()));
  }
  return j;
}

double ordered_sum3(const SparseTensor& t, const SpinVector& x) {
  const auto n = static_cast<std::size_t>(t.n());
  const auto j = dense3(t);
  double s = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        if (a != b && b != c && a != c) s += j[(a * n + b) * n + c] * x[a] * x[b] * x[c];
  return s;
}

// Exact law of the number of +1 spins for a sparse model, by enumeration.
std::vector<double> exact_count_pmf(const SparseTensor& t, double beta, const std::vector<double>& h) {
  const int n = t.n();
  std::vector<double> logw(std::size_t{1} << n);
  for (std::uint32_t c = 0; c < logw.size(); ++c) {
    const auto x = oracle::config(c, n);
    double v = beta * hamiltonian(t, x);
    for (int i = 0; i < n; ++i) v += h[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    logw[c] = v;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  double z = 0.0;
  for (std::uint32_t c = 0; c < logw.size(); ++c) {
    const double w = std::exp(logw[c] - mx);
    pmf[static_cast<std::size_t>(__builtin_popcount(c))] += w;
    z += w;
  }
  for (double& v : pmf) v /= z;
  return pmf;
}

std::vector<double> empirical_count_pmf(const std::vector<SpinVector>& xs) {
  std::vector<double> pmf(xs.front().size() + 1, 0.0);
  for (const auto& x : xs) pmf[static_cast<std::size_t>((x.sum() + static_cast<long long>(x.size())) / 2)] += 1.0;
  for (double& v : pmf) v /= static_cast<double>(xs.size());
  return pmf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

TEST(SpinVector, RejectsNonSpinEntries) {
  EXPECT_THROW(SpinVector(std::vector<int>{1, 0, -1}), DomainError);
  EXPECT_THROW(SpinVector(3, 2), DomainError);
  SpinVector x(4);
  EXPECT_THROW(x.set(1, 0), DomainError);
  EXPECT_THROW((void)x.at(4), IndexOutOfRange);
}

TEST(SpinVector, WithCountHasExactCount) {
  Rng rng(1);
  for (std::size_t plus : {0u, 3u, 10u}) EXPECT_EQ(SpinVector::with_count(10, plus, rng).sum(), 2 * static_cast<long long>(plus) - 10);
}

TEST(SparseTensor, CanonicalizesAndValidates) {
  const SparseTensor t = SparseTensor::from_edges(3, 5, {{{0, 2, 4}, 1.0}, {{0, 1, 2}, 0.5}});
  ASSERT_EQ(t.edge_count(), 2u);
  EXPECT_EQ(t.edge(0)[1], 1);
  EXPECT_THROW(SparseTensor(3, 5, {0, 0, 1}, {1.0}), SpecError);
  EXPECT_THROW(SparseTensor(3, 5, {2, 1, 0}, {1.0}), SpecError);
  EXPECT_THROW(SparseTensor(3, 5, {0, 1, 5}, {1.0}), IndexOutOfRange);
  EXPECT_THROW(SparseTensor(3, 5, {0, 1, 2, 0, 1, 2}, {1.0, 2.0}), SpecError);
  EXPECT_THROW(SparseTensor(3, 5, {0, 1, 2}, {1.0, 2.0}), DimensionMismatch);
}

// ---------------------------------------------------------------------------
// Hamiltonian and local fields
// ---------------------------------------------------------------------------

TEST(Hamiltonian, EmptyTensorIsZero) {
  Rng rng(2);
  const SparseTensor t(3, 7);
  EXPECT_EQ(hamiltonian(t, SpinVector::random(7, rng)), 0.0);
}

TEST(Hamiltonian, SingleEdgeCountsPermutations) {
  const SparseTensor t(3, 5, {0, 1, 2}, {1.0});
  EXPECT_DOUBLE_EQ(hamiltonian(t, SpinVector(5, 1)), 6.0);
}

TEST(Hamiltonian, DimensionMismatch) {
  const SparseTensor t(2, 4);
  EXPECT_THROW(hamiltonian(t, SpinVector(5)), DimensionMismatch);
  EXPECT_THROW(hamiltonian(DenseCw(2, 4), SpinVector(3)), DimensionMismatch);
}

TEST(Hamiltonian, PairwiseMatchesDoubleLoop) {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto t = random_tensor(2, 4, 0.8, rng);
    const auto x = SpinVector::random(4, rng);
    const auto j = oracle::dense_pairwise(t);
    double s = 0.0;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        if (a != b) s += j[a][b] * x[a] * x[b];
    EXPECT_NEAR(hamiltonian(t, x), s, 1e-12);
  }
}

TEST(Hamiltonian, CubicMatchesOrderedSum) {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = random_tensor(3, 7, 0.5, rng);
    const auto x = SpinVector::random(7, rng);
    EXPECT_NEAR(hamiltonian(t, x), ordered_sum3(t, x), 1e-12);
  }
}

TEST(Hamiltonian, DenseCwIsNTimesMeanPower) {
  Rng rng(5);
  for (int p : {2, 3, 4}) {
    const auto x = SpinVector::random(37, rng);
    EXPECT_NEAR(hamiltonian(DenseCw(p, 37), x), 37.0 * std::pow(x.mean(), p), 1e-12);
  }
}

// Each ordered tuple is counted once by the field of its first index, so
// sum_i x_i m_i(x) = H_N(x).
TEST(LocalField, TupleCountingIdentity) {
  Rng rng(6);
  for (int rep = 0; rep < 40; ++rep) {
    const int p = 2 + rep % 3;
    const int n = p + 2 + static_cast<int>(uniform01(rng) * 8);
    const auto t = random_tensor(p, n, 0.6, rng);
    const auto x = SpinVector::random(static_cast<std::size_t>(n), rng);
    const auto m = local_fields(t, x);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(i)];
    EXPECT_NEAR(s, hamiltonian(t, x), 1e-12 * std::max(1.0, std::abs(s)));
    for (int i = 0; i < n; ++i) EXPECT_NEAR(local_field(t, x, static_cast<std::size_t>(i)), m[static_cast<std::size_t>(i)], 1e-12);
  }
  const DenseCw cw(3, 21);
  const auto x = SpinVector::random(21, rng);
  const auto m = local_fields(cw, x);
  double s = 0.0;
  for (std::size_t i = 0; i < 21; ++i) s += x[i] * m[i];
  EXPECT_NEAR(s, hamiltonian(cw, x), 1e-12);
}

TEST(LocalField, CubicMatchesOrderedSum) {
  Rng rng(7);
  const auto t = random_tensor(3, 6, 0.7, rng);
  const auto x = SpinVector::random(6, rng);
  const auto j = dense3(t);
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t b = 0; b < 6; ++b)
      for (std::size_t c = 0; c < 6; ++c)
        if (b != i && c != i && b != c) s += j[(i * 6 + b) * 6 + c] * x[b] * x[c];
    EXPECT_NEAR(local_field(t, x, i), s, 1e-12);
  }
}

TEST(LocalField, DenseCwIsMeanPower) {
  Rng rng(8);
  const auto x = SpinVector::random(15, rng);
  for (int p : {2, 3, 5})
    for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(local_field(DenseCw(p, 15), x, i), ipow(x.mean(), p - 1));
}

TEST(LocalField, FlipLeavesOwnFieldUnchanged) {
  Rng rng(9);
  const auto t = random_tensor(3, 8, 0.5, rng);
  auto x = SpinVector::random(8, rng);
  for (std::size_t i = 0; i < 8; ++i) {
    const double before = local_field(t, x, i);
    x.flip(i);
    EXPECT_EQ(local_field(t, x, i), before);
  }
}

TEST(LocalField, IndexOutOfRange) {
  const SparseTensor t(2, 4);
  EXPECT_THROW(local_field(t, SpinVector(4), 4), IndexOutOfRange);
  EXPECT_THROW(local_field(DenseCw(2, 4), SpinVector(4), 7), IndexOutOfRange);
}

// ---------------------------------------------------------------------------
// Gibbs sampling
// ---------------------------------------------------------------------------

TEST(Gibbs, InfiniteTemperatureIsFairCoin) {
  Rng rng(10);
  const auto t = random_tensor(3, 10, 0.5, rng);
  GibbsSampler<SparseTensor> s(t, SpinVector(10), 0.0, {}, 11);
  std::vector<double> mean(10, 0.0);
  const int sweeps = 10000;
  for (int k = 0; k < sweeps; ++k) {
    s.sweep();
    for (std::size_t i = 0; i < 10; ++i) mean[i] += s.state()[i];
  }
  for (double m : mean) EXPECT_NEAR(m / sweeps, 0.0, 0.03);
}

TEST(Gibbs, DenseCwStationaryLawMatchesExactPmf) {
  const auto xs = gibbs_chain(DenseCw(2, 8), SpinVector(8), 0.4, {}, 100000, 12, {5000, 5});
  const auto exact = magnetization_pmf({0.4, 0.0, 2, 8});
  EXPECT_LT(oracle::tv(empirical_count_pmf(xs), exact.prob), 0.02);
}

TEST(Gibbs, SparseStationaryLawMatchesEnumeration) {
  Rng rng(13);
  const auto t = random_tensor(3, 9, 0.4, rng);
  std::vector<double> h(9);
  for (double& v : h) v = 0.4 * uniform01(rng) - 0.2;
  // beta kept small enough that the chain does not get trapped in one mode.
  const auto xs = gibbs_chain(t, SpinVector(9), 0.1, h, 100000, 14, {2000, 5});
  EXPECT_LT(oracle::tv(empirical_count_pmf(xs), exact_count_pmf(t, 0.1, h)), 0.02);
}

TEST(Gibbs, TwoSiteTransitionFrequencies) {
  const SparseTensor t(2, 2, {0, 1}, {0.5});
  const double beta = 0.7;
  const std::vector<double> h{0.2, -0.1};
  const SpinVector start(std::vector<int>{-1, 1});
  Rng rng(15);
  const int trials = 40000;
  int first_plus = 0;
  std::map<int, std::pair<int, int>> second;  // x0' -> (trials, x1' = +1)
  for (int k = 0; k < trials; ++k) {
    const auto y = gibbs_sweep(t, start, beta, h, rng);
    if (y[0] == 1) ++first_plus;
    auto& c = second[y[0]];
    ++c.first;
    if (y[1] == 1) ++c.second;
  }
  auto sigma = [](double e) { return 1.0 / (1.0 + std::exp(-2.0 * e)); };
  // m_0 = c * x_1 with p = 2.
  const double p0 = sigma(2.0 * beta * 0.5 * 1 + h[0]);
  EXPECT_LT(std::abs(first_plus / double(trials) - p0), 3.0 * std::sqrt(p0 * (1 - p0) / trials));
  for (const auto& [s0, c] : second) {
    const double p1 = sigma(2.0 * beta * 0.5 * s0 + h[1]);
    EXPECT_LT(std::abs(c.second / double(c.first) - p1), 3.0 * std::sqrt(p1 * (1 - p1) / c.first));
  }
}

TEST(Gibbs, IncrementalFieldsMatchRecomputation) {
  Rng rng(16);
  const auto t = random_tensor(3, 12, 0.5, rng);
  GibbsSampler<SparseTensor> s(t, SpinVector(12), 0.0, {}, 17);
  s.run(200);  // about 1200 flips at infinite temperature
  const auto fresh = local_fields(t, s.state());
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(s.fields()[i], fresh[i], 1e-10);
}

TEST(Gibbs, DeterministicPerSeed) {
  const auto t = gen_sk(2, 30, 3);
  const auto a = gibbs_chain(t, SpinVector(30), 0.3, {}, 20, 5, {50, 2});
  const auto b = gibbs_chain(t, SpinVector(30), 0.3, {}, 20, 5, {50, 2});
  EXPECT_EQ(a, b);
  EXPECT_THROW(GibbsSampler<SparseTensor>(t, SpinVector(30), 0.3, std::vector<double>(3), 1), DimensionMismatch);
}

// ---------------------------------------------------------------------------
// Pseudolikelihood
// ---------------------------------------------------------------------------

TEST(Mple, DenseCwPairwiseClosedForm) {
  Rng rng(18);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t plus = 1 + static_cast<std::size_t>(uniform01(rng) * 99);
    if (plus == 50) continue;
    const auto x = SpinVector::with_count(100, plus, rng);
    const double t = x.mean();
    EXPECT_NEAR(mple(DenseCw(2, 100), x).estimate, std::atanh(t) / (2.0 * t), 1e-10);
  }
}

TEST(Mple, DenseCwMatchesPhiForSeveralP) {
  Rng rng(19);
  for (int p : {2, 3, 4})
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t plus = 1 + static_cast<std::size_t>(uniform01(rng) * 199);
      if (plus == 100) continue;
      const auto x = SpinVector::with_count(200, plus, rng);
      const auto r = mple(DenseCw(p, 200), x);
      const double phi = mple_cw_closed_form(p, x.mean());
      if (std::isinf(phi)) {
        EXPECT_EQ(r.estimate, phi);
        EXPECT_TRUE(r.is_sentinel());
      } else {
        EXPECT_NEAR(r.estimate, phi, 1e-10) << "p=" << p << " t=" << x.mean();
      }
    }
}

TEST(Mple, OddPNegativeMeanIsInfinite) {
  Rng rng(20);
  const auto x = SpinVector::with_count(100, 30, rng);
  const auto r = mple(DenseCw(3, 100), x);
  EXPECT_EQ(r.estimate, kInf);
  EXPECT_TRUE(r.is_sentinel());
}

TEST(Mple, ZeroHamiltonianGivesZero) {
  Rng rng(21);
  EXPECT_EQ(mple(DenseCw(2, 10), SpinVector::with_count(10, 5, rng)).estimate, 0.0);
  EXPECT_EQ(mple(SparseTensor(3, 6), SpinVector(6)).estimate, 0.0);
}

TEST(Mple, EquationResidualAndMonotoneRhs) {
  Rng rng(22);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_tensor(3, 12, 0.5, rng);
    const auto x = SpinVector::random(12, rng);
    const auto m = local_fields(t, x);
    auto rhs = [&](double b) {
      double s = 0.0;
      for (double v : m) s += v * std::tanh(3.0 * b * v);
      return s;
    };
    double prev = -kInf;
    for (int k = 0; k <= 50; ++k) {
      const double v = rhs(0.1 * k);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
    const auto r = mple(t, x);
    if (std::isfinite(r.estimate) && r.estimate > 0.0)
      EXPECT_NEAR(rhs(r.estimate), hamiltonian(t, x), 1e-9 * std::max(1.0, std::abs(hamiltonian(t, x))));
  }
}

TEST(Mple, SherringtonKirkpatrickConsistency) {
  const int n = 300;
  const double beta = 0.8;
  int good = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto t = gen_sk(2, n, 1000 + r);
    Rng rng(derive_seed(77, r));
    GibbsSampler<SparseTensor> s(t, SpinVector::random(n, rng), beta, {}, derive_seed(78, r));
    s.run(300);
    const auto est = mple(t, s.state());
    if (std::isfinite(est.estimate) && std::abs(est.estimate - beta) < 5.0 / std::sqrt(n)) ++good;
  }
  EXPECT_GE(good, 90);
}

TEST(MpleCwCi, StandardErrorFormula) {
  const int p = 4;
  const double beta = 0.75;
  const auto pc = classify_point(beta, 0.0, p);
  const double m = pc.maximizers.back().location;
  // phi at the true maximizer returns beta itself.
  EXPECT_NEAR(mple_cw_closed_form(p, m), beta, 1e-9);
  const int n = 2000;
  const auto r = mple_cw_ci(p, m, n, 0.95);
  const double g2 = beta * p * (p - 1) * m * m - 1.0 / (1.0 - m * m);
  EXPECT_NEAR(*r.std_error * *r.std_error * n, -g2 / (p * p * std::pow(m, 2 * p - 2)), 1e-9);
  ASSERT_TRUE(r.ci.has_value());
  EXPECT_TRUE(r.ci->contains(beta));
  EXPECT_THROW(mple_cw_ci(p, 0.0, n, 0.95), DomainError);
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

TEST(Norms, EmptyTensorIsZero) {
  const SparseTensor t(3, 10);
  EXPECT_EQ(local_interaction_norm(t, SpinVector(10)), 0.0);
  EXPECT_EQ(codegree_norm(t), 0.0);
}

TEST(Norms, PairwiseMatchesDenseEigensolve) {
  Rng rng(23);
  PowerOptions opt;
  opt.iters = 20000;
  opt.tol = 1e-14;
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 10 + 8 * rep;
    const auto t = random_tensor(2, n, 0.3, rng);
    auto j = oracle::dense_pairwise(t);
    const double ref = oracle::dense_norm(j);
    EXPECT_NEAR(local_interaction_norm(t, SpinVector::random(static_cast<std::size_t>(n), rng), opt), ref, 1e-6 * ref);
    for (auto& row : j)
      for (double& v : row) v = std::abs(v);
    const double dref = oracle::dense_norm(j);
    EXPECT_NEAR(codegree_norm(t, opt), dref, 1e-6 * dref);
  }
}

TEST(Norms, CubicLocalInteractionMatchesDense) {
  Rng rng(24);
  const auto t = random_tensor(3, 12, 0.4, rng);
  const auto x = SpinVector::random(12, rng);
  const auto j = dense3(t);
  std::vector<std::vector<double>> jx(12, std::vector<double>(12, 0.0));
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b)
      for (std::size_t c = 0; c < 12; ++c) jx[a][b] += j[(a * 12 + b) * 12 + c] * x[c];
  PowerOptions opt;
  opt.iters = 20000;
  opt.tol = 1e-14;
  const double ref = oracle::dense_norm(jx);
  EXPECT_NEAR(local_interaction_norm(t, x, opt), ref, 1e-6 * ref);
}

TEST(Norms, DenseCwRankOne) {
  EXPECT_NEAR(local_interaction_norm(DenseCw(3, 200), SpinVector(200)), 1.0, 0.05);
  EXPECT_NEAR(codegree_norm(DenseCw(4, 50)), 0.5, 1e-15);
}

TEST(Norms, BoundedDegreeCodegreeBelowRowSum) {
  const auto g = gen_bounded_degree(200, 4, 0.25, 25);
  std::vector<double> row(200, 0.0);
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    for (int v : g.edge(e)) row[static_cast<std::size_t>(v)] += std::abs(g.coef(e));
  EXPECT_LE(codegree_norm(g), *std::max_element(row.begin(), row.end()) + 1e-9);
  EXPECT_LE(codegree_norm(g), 1.0 + 1e-9);
}
