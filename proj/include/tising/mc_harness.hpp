#pragma once

// Replicated Monte-Carlo experiments on top of the exact Curie-Weiss engine and
// the tensor Gibbs sampler. Replication r always draws from the stream seeded
// with derive_seed(seed, r), so results do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tising/common.hpp"
#include "tising/cw_exact.hpp"
#include "tising/tensor_core.hpp"

namespace tising {

/// Runs fn(r) for r in [0, count) on `threads` workers.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto t = static_cast<std::size_t>(std::max(1, threads));
  if (t == 1 || count < 2) {
    for (std::size_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (std::size_t w = 0; w < std::min(t, count); ++w)
    pool.emplace_back([&, w] {
      for (std::size_t r = w; r < count; r += t) {
        try {
          fn(r);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

struct HistogramReport {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<long long> counts;
  long long nonfinite = 0;
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::string reference;             // "", "normal" or "quartic"
  std::vector<double> ref_density;   // at bin centres when a reference applies

  long long total() const {
    long long s = nonfinite;
    for (auto c : counts) s += c;
    return s;
  }
};

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

/// Sample moments of the finite entries (sd with n-1, shape from central moments).
inline Moments sample_moments(const std::vector<double>& v) {
  Moments m;
  std::vector<double> f;
  for (double x : v)
    if (std::isfinite(x)) f.push_back(x);
  if (f.empty()) return m;
  const double n = static_cast<double>(f.size());
  for (double x : f) m.mean += x;
  m.mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : f) {
    const double d = x - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.sd = f.size() > 1 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

inline HistogramReport make_histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw DomainError("histogram: bins must be >= 1");
  HistogramReport h;
  double lo = kInf;
  double hi = -kInf;
  for (double v : values) {
    if (!std::isfinite(v)) {
      ++h.nonfinite;
      continue;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) {
    lo = -0.5;
    hi = 0.5;
  } else if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto b = static_cast<long long>((v - lo) / (hi - lo) * bins);
    b = std::clamp<long long>(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  const auto m = sample_moments(values);
  h.mean = m.mean;
  h.sd = m.sd;
  h.skewness = m.skewness;
  h.excess_kurtosis = m.excess_kurtosis;
  return h;
}

// ---------------------------------------------------------------------------
// Sampling distributions
// ---------------------------------------------------------------------------

enum class Estimator { Mean, MleH, MleBeta, Mple };

inline const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::Mean:
      return "mean";
    case Estimator::MleH:
      return "mle-h";
    case Estimator::MleBeta:
      return "mle-beta";
    case Estimator::Mple:
      return "mple";
  }
  return "?";
}

struct ExperimentSpec {
  CwSpec model;
  Estimator estimator = Estimator::Mean;
  int replications = 1000;
  double scaling = 0.5;          // values are N^scaling (estimate - center)
  std::optional<double> center;  // default: truth, or the maximizer of H for Mean
  std::uint64_t seed = 1;
  int bins = 50;
  int threads = 1;

  void validate() const {
    model.validate();
    if (replications < 1) throw SpecError("ExperimentSpec: replications must be >= 1");
    if (!(scaling > 0.0)) throw SpecError("ExperimentSpec: scaling must be > 0");
    if (bins < 1) throw SpecError("ExperimentSpec: bins must be >= 1");
  }
};

struct SamplingResult {
  HistogramReport histogram;
  std::vector<double> values;     // scaled and centred, one per replication
  std::vector<double> estimates;  // raw estimates
  double center = 0.0;
  PointKind kind = PointKind::Regular;
};

namespace detail {

inline double estimate_once(const ExperimentSpec& spec, const MagnetizationSampler& sampler, std::uint64_t seed) {
  Rng rng(seed);
  const CwSpec& m = spec.model;
  switch (spec.estimator) {
    case Estimator::Mean:
      return sampler.draw(rng);
    case Estimator::MleH:
      return mle_h(m.beta, m.p, m.n, sampler.draw(rng)).estimate;
    case Estimator::MleBeta:
      return mle_beta(m.h, m.p, m.n, sampler.draw(rng)).estimate;
    case Estimator::Mple: {
      const int plus = sampler.draw_count(rng);
      const auto x = SpinVector::with_count(static_cast<std::size_t>(m.n), static_cast<std::size_t>(plus), rng);
      return mple(DenseCw(m.p, m.n), x).estimate;
    }
  }
  return 0.0;
}

}  // namespace detail

inline SamplingResult run_sampling_distribution(const ExperimentSpec& spec) {
  spec.validate();
  const CwSpec& m = spec.model;
  const auto pc = classify_point(m.beta, m.h, m.p);
  SamplingResult res;
  res.kind = pc.kind;
  if (spec.center) {
    res.center = *spec.center;
  } else if (spec.estimator == Estimator::Mean) {
    res.center = pc.count() == 1 ? pc.maximizers[0].location : 0.0;
  } else if (spec.estimator == Estimator::MleH) {
    res.center = m.h;
  } else {
    res.center = m.beta;
  }

  const MagnetizationSampler sampler(m);
  res.estimates.assign(static_cast<std::size_t>(spec.replications), 0.0);
  parallel_for(res.estimates.size(), spec.threads, [&](std::size_t r) {
    res.estimates[r] = detail::estimate_once(spec, sampler, derive_seed(spec.seed, r));
  });
  const double scale = std::pow(static_cast<double>(m.n), spec.scaling);
  res.values.resize(res.estimates.size());
  for (std::size_t r = 0; r < res.values.size(); ++r) res.values[r] = scale * (res.estimates[r] - res.center);
  res.histogram = make_histogram(res.values, spec.bins);

  // Reference densities where the limit law is known.
  auto& hist = res.histogram;
  std::function<double(double)> ref;
  if (pc.kind == PointKind::Regular && spec.scaling == 0.5 && !spec.center) {
    const double mm = pc.maximizers[0].location;
    const double d2 = pc.maximizers[0].second_derivative;
    double var = 0.0;
    switch (spec.estimator) {
      case Estimator::Mean:
        var = -1.0 / d2;
        break;
      case Estimator::MleH:
        var = -d2;
        break;
      case Estimator::MleBeta:
      case Estimator::Mple:
        var = -d2 / (m.p * m.p * ipow(mm, 2 * m.p - 2));
        break;
    }
    if (std::isfinite(var) && var > 0.0) {
      hist.reference = "normal";
      ref = [var](double x) { return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var); };
    }
  } else if (pc.kind == PointKind::Special && spec.estimator == Estimator::Mean && spec.scaling == 0.25) {
    const double mm = pc.maximizers[0].location;
    const double h4 = HFunction{m.beta, m.h, m.p}(mm, 4);
    if (h4 < 0.0) {
      const auto dens = limit_density_special(m.p, 0.0, 0.0, mm, h4);
      hist.reference = "quartic";
      ref = [dens](double x) { return dens.pdf(x); };
    }
  }
  if (ref)
    for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) hist.ref_density.push_back(ref(0.5 * (hist.edges[b] + hist.edges[b + 1])));
  return res;
}

// ---------------------------------------------------------------------------
// Confidence-interval coverage
// ---------------------------------------------------------------------------

enum class Target { H, Beta };

struct CoverageSpec {
  CwSpec model;
  Target target = Target::H;
  int replications = 300;
  double level = 0.95;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct CoverageRecord {
  double xbar = 0.0;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool covered = false;
};

struct CoverageResult {
  double coverage = 0.0;
  std::vector<CoverageRecord> records;
  std::vector<double> curve_points;
};

inline CoverageResult run_coverage(const CoverageSpec& spec) {
  spec.model.validate();
  if (spec.replications < 1) throw SpecError("CoverageSpec: replications must be >= 1");
  const CwSpec& m = spec.model;
  if (spec.target == Target::Beta && m.h == 0.0) throw DomainError("run_coverage: beta intervals need h != 0");
  CoverageResult res;
  res.curve_points = spec.target == Target::H ? critical_fields(m.beta, m.p) : critical_betas(m.h, m.p);
  const MagnetizationSampler sampler(m);
  res.records.resize(static_cast<std::size_t>(spec.replications));
  parallel_for(res.records.size(), spec.threads, [&](std::size_t r) {
    Rng rng(derive_seed(spec.seed, r));
    CoverageRecord& rec = res.records[r];
    rec.xbar = sampler.draw(rng);
    const auto est = spec.target == Target::H ? mle_h(m.beta, m.p, m.n, rec.xbar) : mle_beta(m.h, m.p, m.n, rec.xbar);
    rec.estimate = est.estimate;
    if (!std::isfinite(est.estimate) || std::abs(rec.xbar) >= 1.0 || (spec.target == Target::Beta && rec.xbar == 0.0)) {
      rec.lo = rec.hi = est.estimate;
      rec.covered = false;
      return;
    }
    try {
      const auto ci = spec.target == Target::H
                          ? confidence_interval_h(m.beta, m.p, m.n, rec.xbar, est.estimate, spec.level, &res.curve_points)
                          : confidence_interval_beta(m.h, m.p, m.n, rec.xbar, est.estimate, spec.level, &res.curve_points);
      rec.lo = ci.regular.lo;
      rec.hi = ci.regular.hi;
      rec.covered = ci.contains(spec.target == Target::H ? m.h : m.beta);
    } catch (const DomainError&) {
      rec.lo = rec.hi = est.estimate;
      rec.covered = false;
    }
  });
  long long hits = 0;
  for (const auto& r : res.records) hits += r.covered ? 1 : 0;
  res.coverage = static_cast<double>(hits) / static_cast<double>(res.records.size());
  return res;
}

// ---------------------------------------------------------------------------
// Phase diagram
// ---------------------------------------------------------------------------

struct PhaseCell {
  double beta = 0.0;
  double h = 0.0;
  PointKind kind = PointKind::Regular;
  int maximizers = 1;
  double argmax = 0.0;  // location of the largest global maximizer
};

struct PhaseDiagram {
  int p = 2;
  std::vector<double> betas;
  std::vector<double> hs;
  std::vector<PhaseCell> cells;  // row-major: beta outer, h inner

  const PhaseCell& at(std::size_t ib, std::size_t ih) const { return cells[ib * hs.size() + ih]; }
};

namespace detail {
// Grid through [lo, hi] that is exactly mirror-symmetric when lo = -hi.
inline std::vector<double> symmetric_grid(double lo, double hi, int g) {
  std::vector<double> v(static_cast<std::size_t>(g));
  const double c = 0.5 * (lo + hi);
  const double w = 0.5 * (hi - lo);
  for (int i = 0; i < g; ++i) v[static_cast<std::size_t>(i)] = c + w * (2.0 * i - (g - 1)) / (g - 1);
  return v;
}
}  // namespace detail

inline PhaseDiagram phase_diagram(int p, Interval beta_range, Interval h_range, int grid, int threads = 1,
                                  ClassifyOptions opt = {4001, 1e-6, 1e-9, 1e-7, 50}) {
  if (grid < 2) throw DomainError("phase_diagram: grid must be >= 2");
  if (p < 2) throw SpecError("phase_diagram: p must be >= 2");
  if (beta_range.lo < 0.0 || beta_range.hi < beta_range.lo || h_range.hi < h_range.lo)
    throw DomainError("phase_diagram: invalid ranges");
  PhaseDiagram d;
  d.p = p;
  d.betas = detail::symmetric_grid(beta_range.lo, beta_range.hi, grid);
  d.betas.front() = beta_range.lo;
  d.betas.back() = beta_range.hi;
  d.hs = detail::symmetric_grid(h_range.lo, h_range.hi, grid);
  d.cells.resize(d.betas.size() * d.hs.size());
  parallel_for(d.cells.size(), threads, [&](std::size_t k) {
    PhaseCell& c = d.cells[k];
    c.beta = std::max(0.0, d.betas[k / d.hs.size()]);
    c.h = d.hs[k % d.hs.size()];
    const auto pc = classify_point(c.beta, c.h, p, opt);
    c.kind = pc.kind;
    c.maximizers = static_cast<int>(pc.count());
    c.argmax = pc.maximizers.back().location;
  });
  return d;
}

// ---------------------------------------------------------------------------
// Goodness of fit by simulation
// ---------------------------------------------------------------------------

enum class Verdict { Accept, Reject, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Accept:
      return "accept";
    case Verdict::Reject:
      return "reject";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

struct GofResult {
  Verdict verdict = Verdict::Inconclusive;
  double beta_hat = 0.0;
  double observed = 0.0;  // H_N(x_obs)
  Interval band;          // nearest-rank 2.5 and 97.5 percentiles
  std::vector<double> simulated;  // sorted Hamiltonians of the simulated datasets
};

/// Fits beta by MPLE, simulates `sims` datasets from one chain at the fit and
/// accepts when H_N(x_obs) lies inside the percentile band.
inline GofResult gof_test(const SparseTensor& graph, const SpinVector& x_obs, int sims, std::uint64_t seed,
                          const ChainOptions& chain = {}) {
  if (sims < 20) throw DomainError("gof_test: sims must be >= 20");
  if (graph.p() != 2 && graph.p() != 3) throw SpecError("gof_test: graph must have p = 2 or 3");
  GofResult res;
  res.observed = hamiltonian(graph, x_obs);
  const auto fit = mple(graph, x_obs);
  res.beta_hat = fit.estimate;
  if (!std::isfinite(fit.estimate)) return res;
  const auto states = gibbs_chain(graph, x_obs, fit.estimate, {}, static_cast<std::size_t>(sims), seed, chain);
  for (const auto& s : states) res.simulated.push_back(hamiltonian(graph, s));
  std::sort(res.simulated.begin(), res.simulated.end());
  res.band = {nearest_rank(res.simulated, 0.025), nearest_rank(res.simulated, 0.975)};
  res.verdict = res.band.contains(res.observed) ? Verdict::Accept : Verdict::Reject;
  return res;
}

}  // namespace tising
