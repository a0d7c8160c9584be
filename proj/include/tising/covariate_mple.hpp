#pragma once

// Ising model with node covariates
//
//   P(x) ∝ exp( sum_i (theta^T Z_i) x_i + (beta/2) x^T A x ),
//
// fitted by L1-penalized maximum pseudolikelihood. Given x, the negative log
// pseudolikelihood is a logistic-type loss in gamma = (beta, theta) with design
// row W_i = (m_i, Z_i), m = A x.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tising/common.hpp"
#include "tising/tensor_core.hpp"

namespace tising {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct CovariateModel {
  SparseMatrix A;  // n x n, symmetric, zero diagonal
  Eigen::MatrixXd Z;  // n x d
  double beta = 0.0;
  Eigen::VectorXd theta;

  int n() const { return static_cast<int>(Z.rows()); }
  int d() const { return static_cast<int>(Z.cols()); }

  void validate() const {
    if (A.rows() != A.cols()) throw DimensionMismatch("CovariateModel: A must be square");
    if (A.rows() != Z.rows()) throw DimensionMismatch("CovariateModel: A and Z disagree on n");
    if (theta.size() != Z.cols()) throw DimensionMismatch("CovariateModel: theta must have d entries");
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        if (it.row() == it.col() && it.value() != 0.0) throw SpecError("CovariateModel: A must have zero diagonal");
        if (std::abs(A.coeff(it.col(), it.row()) - it.value()) > 1e-12)
          throw SpecError("CovariateModel: A must be symmetric");
      }
  }
};

/// Sparse symmetric matrix from (i, j, w) triples; each pair is mirrored.
inline SparseMatrix symmetric_matrix(int n, const std::vector<Eigen::Triplet<double>>& upper) {
  std::vector<Eigen::Triplet<double>> all;
  all.reserve(2 * upper.size());
  for (const auto& t : upper) {
    if (t.row() == t.col()) throw SpecError("symmetric_matrix: diagonal entries are not allowed");
    all.emplace_back(t.row(), t.col(), t.value());
    all.emplace_back(t.col(), t.row(), t.value());
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(all.begin(), all.end());
  return a;
}

/// scale * (J - I): every off-diagonal entry equal to `scale`.
inline SparseMatrix complete_matrix(int n, double scale) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t.emplace_back(i, j, scale);
  return symmetric_matrix(n, t);
}

/// Adjacency matrix of a p = 2 tensor, entries c_e.
inline SparseMatrix matrix_from_graph(const SparseTensor& g) {
  if (g.p() != 2) throw SpecError("matrix_from_graph: need p = 2");
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t e = 0; e < g.edge_count(); ++e) t.emplace_back(g.edge(e)[0], g.edge(e)[1], g.coef(e));
  return symmetric_matrix(g.n(), t);
}

namespace detail {

inline Eigen::VectorXd spins_to_vector(const SpinVector& x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return v;
}

inline Eigen::MatrixXd design(const CovariateModel& model, const SpinVector& x) {
  if (x.size() != static_cast<std::size_t>(model.n())) throw DimensionMismatch("spin vector length differs from n");
  if (model.A.rows() != model.Z.rows()) throw DimensionMismatch("A and Z disagree on n");
  Eigen::MatrixXd w(model.n(), model.d() + 1);
  w.col(0) = model.A * spins_to_vector(x);
  w.rightCols(model.d()) = model.Z;
  return w;
}

inline double loss(const Eigen::MatrixXd& w, const Eigen::VectorXd& y, const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd eta = w * gamma;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += y(i) * eta(i) - log_cosh(eta(i));
  return kLog2 - s / static_cast<double>(w.rows());
}

inline Eigen::VectorXd loss_gradient(const Eigen::MatrixXd& w, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd eta = w * gamma;
  const Eigen::VectorXd r = y - eta.unaryExpr([](double v) { return std::tanh(v); });
  return -(w.transpose() * r) / static_cast<double>(w.rows());
}

}  // namespace detail

inline double neg_log_pl(const CovariateModel& model, const SpinVector& x, const Eigen::VectorXd& gamma) {
  if (gamma.size() != model.d() + 1) throw DimensionMismatch("neg_log_pl: gamma must have d+1 entries");
  return detail::loss(detail::design(model, x), detail::spins_to_vector(x), gamma);
}

inline Eigen::VectorXd grad_neg_log_pl(const CovariateModel& model, const SpinVector& x,
                                       const Eigen::VectorXd& gamma) {
  if (gamma.size() != model.d() + 1) throw DimensionMismatch("grad_neg_log_pl: gamma must have d+1 entries");
  return detail::loss_gradient(detail::design(model, x), detail::spins_to_vector(x), gamma);
}

// ---------------------------------------------------------------------------
// Penalized fit
// ---------------------------------------------------------------------------

struct PenalizedFit {
  Eigen::VectorXd gamma_hat;
  double lambda = 0.0;
  std::vector<double> objective_trace;  // penalized objective, one entry per iterate
  bool converged = false;
  std::vector<int> support;
  int iterations = 0;
  double kkt_residual = 0.0;
};

/// Largest violation of the L1 optimality conditions at gamma.
inline double kkt_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& gamma, double lambda) {
  double r = 0.0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    const double v = gamma(j) != 0.0 ? std::abs(grad(j) + lambda * (gamma(j) > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad(j)) - lambda);
    r = std::max(r, v);
  }
  return r;
}

namespace detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Proximal gradient for loss(w, y, .) + lambda ||.||_1 from gamma = 0.
inline PenalizedFit proximal_fit(const Eigen::MatrixXd& w, const Eigen::VectorXd& y, double lambda, int max_iter,
                                 double tol) {
  if (!(lambda >= 0.0)) throw DomainError("fit: lambda must be >= 0");
  const Eigen::Index q = w.cols();
  PenalizedFit fit;
  fit.lambda = lambda;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
  double smooth = loss(w, y, g);
  double obj = smooth;
  fit.objective_trace.push_back(obj);

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad = loss_gradient(w, y, g);
    double step = 1.0;
    Eigen::VectorXd cand(q);
    double cand_smooth = 0.0;
    while (true) {
      for (Eigen::Index j = 0; j < q; ++j) cand(j) = soft_threshold(g(j) - step * grad(j), step * lambda);
      const Eigen::VectorXd d = cand - g;
      cand_smooth = loss(w, y, cand);
      if (cand_smooth <= smooth + grad.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(smooth)) break;
      step *= 0.5;
      if (step < 1e-30) throw SolverError("fit: backtracking step underflow");
    }
    const double cand_obj = cand_smooth + lambda * cand.lpNorm<1>();
    fit.iterations = it + 1;
    // The sufficient-decrease test allows rounding-level increases; keep the
    // trace monotone by refusing them.
    if (cand_obj > obj) {
      fit.converged = true;
      break;
    }
    const double change = obj - cand_obj;
    g = cand;
    smooth = cand_smooth;
    obj = cand_obj;
    fit.objective_trace.push_back(obj);
    if (change <= tol * std::max(1.0, std::abs(obj))) {
      fit.converged = true;
      break;
    }
  }
  fit.gamma_hat = g;
  for (Eigen::Index j = 0; j < q; ++j)
    if (g(j) != 0.0) fit.support.push_back(static_cast<int>(j));
  fit.kkt_residual = kkt_residual(loss_gradient(w, y, g), g, lambda);
  return fit;
}

}  // namespace detail

/// Penalty level delta * sqrt(log(d+1)/N).
inline double penalty_level(double delta, int n, int d) {
  return delta * std::sqrt(std::log(d + 1.0) / n);
}

inline PenalizedFit fit_penalized(const CovariateModel& model, const SpinVector& x, double delta = 1.0,
                                  int max_iter = 10000, double tol = 1e-12) {
  if (model.n() < 2 || model.d() < 1) throw DomainError("fit_penalized: need n >= 2 and d >= 1");
  return detail::proximal_fit(detail::design(model, x), detail::spins_to_vector(x),
                              penalty_level(delta, model.n(), model.d()), max_iter, tol);
}

/// Same fit with an explicit penalty level.
inline PenalizedFit fit_penalized_lambda(const CovariateModel& model, const SpinVector& x, double lambda,
                                         int max_iter = 10000, double tol = 1e-12) {
  return detail::proximal_fit(detail::design(model, x), detail::spins_to_vector(x), lambda, max_iter, tol);
}

/// L1-penalized logistic regression of y in {-1,+1} on the rows of z, in the
/// same loss scale and with the same solver.
inline PenalizedFit fit_l1_logistic(const Eigen::MatrixXd& z, const SpinVector& y, double lambda,
                                    int max_iter = 10000, double tol = 1e-12) {
  if (static_cast<std::size_t>(z.rows()) != y.size()) throw DimensionMismatch("fit_l1_logistic: rows differ");
  return detail::proximal_fit(z, detail::spins_to_vector(y), lambda, max_iter, tol);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

class CovariateGibbs {
 public:
  CovariateGibbs(const CovariateModel& model, SpinVector x, std::uint64_t seed)
      : model_(&model), x_(std::move(x)), rng_(seed) {
    if (x_.size() != static_cast<std::size_t>(model.n())) throw DimensionMismatch("spin vector length differs from n");
    m_ = model.A * detail::spins_to_vector(x_);
    base_ = model.Z * model.theta;
  }

  void sweep() {
    const auto n = static_cast<Eigen::Index>(x_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eta = base_(i) + model_->beta * m_(i);
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * eta));
      const int s = uniform01(rng_) < p_plus ? 1 : -1;
      const auto ui = static_cast<std::size_t>(i);
      if (s != x_[ui]) {
        x_.set(ui, s);
        for (SparseMatrix::InnerIterator it(model_->A, i); it; ++it) m_(it.row()) += 2.0 * s * it.value();
      }
    }
  }

  void run(int sweeps) {
    for (int k = 0; k < sweeps; ++k) sweep();
  }

  const SpinVector& state() const noexcept { return x_; }

 private:
  const CovariateModel* model_;
  SpinVector x_;
  Rng rng_;
  Eigen::VectorXd m_;
  Eigen::VectorXd base_;
};

/// One sweep from x; `rng` supplies the sweep's seed and is advanced.
inline SpinVector gibbs_covariate(const CovariateModel& model, const SpinVector& x, Rng& rng) {
  CovariateGibbs g(model, x, rng());
  g.sweep();
  return g.state();
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct AssumptionBounds {
  double theta_max = kInf;  // bound on ||theta||_inf
  double z_max = kInf;      // bound on max |Z_ij|
  double beta_max = 0.25;
  double positivity_floor = 1e-12;
};

struct AssumptionReport {
  double a_inf_norm = 0.0;        // max absolute row sum
  double a_frobenius_sq_over_n = 0.0;
  double lambda_min_ztz = 0.0;    // smallest eigenvalue of Z^T Z / N
  double max_abs_z = 0.0;
  double max_abs_theta = 0.0;
  double dobrushin = 0.0;         // 4 |beta| ||A||_2
  std::vector<int> violated;      // assumption numbers 1..6

  bool flagged(int k) const { return std::find(violated.begin(), violated.end(), k) != violated.end(); }
};

inline AssumptionReport assumption_report(const CovariateModel& model, const AssumptionBounds& b = {}) {
  AssumptionReport r;
  const int n = model.n();
  bool symmetric = model.A.rows() == model.A.cols();
  std::vector<double> row(static_cast<std::size_t>(model.A.rows()), 0.0);
  double frob = 0.0;
  for (int k = 0; k < model.A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(model.A, k); it; ++it) {
      row[static_cast<std::size_t>(it.row())] += std::abs(it.value());
      frob += it.value() * it.value();
      if (it.row() == it.col() && it.value() != 0.0) symmetric = false;
      if (std::abs(model.A.coeff(it.col(), it.row()) - it.value()) > 1e-12) symmetric = false;
    }
  r.a_inf_norm = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
  r.a_frobenius_sq_over_n = n > 0 ? frob / n : 0.0;
  if (model.d() > 0 && n > 0) {
    const Eigen::MatrixXd g = model.Z.transpose() * model.Z / static_cast<double>(n);
    r.lambda_min_ztz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues()(0);
    r.max_abs_z = model.Z.cwiseAbs().maxCoeff();
  }
  r.max_abs_theta = model.theta.size() > 0 ? model.theta.cwiseAbs().maxCoeff() : 0.0;
  const auto mv = [&](const std::vector<double>& v, std::vector<double>& y) {
    const Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) = model.A * vv;
  };
  r.dobrushin = 4.0 * std::abs(model.beta) * detail::power_norm(mv, static_cast<std::size_t>(model.A.rows()), {});

  if (!(r.max_abs_theta < b.theta_max) || !(r.max_abs_z < b.z_max)) r.violated.push_back(1);
  if (!symmetric) r.violated.push_back(2);
  if (r.a_inf_norm > 1.0 + 1e-12) r.violated.push_back(3);
  if (!(r.a_frobenius_sq_over_n > b.positivity_floor)) r.violated.push_back(4);
  if (!(std::abs(model.beta) < b.beta_max)) r.violated.push_back(5);
  if (!(r.lambda_min_ztz > b.positivity_floor)) r.violated.push_back(6);
  return r;
}

}  // namespace tising
