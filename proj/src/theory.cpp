// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diet/error.hpp"
#include "diet/optim.hpp"
#include "diet/rng.hpp"

namespace diet::theory {

namespace {

void check_shapes(const Matrix& x, const Matrix& v, const Matrix& w, const char* op) {
  if (x.cols() != v.rows() || w.rows() != x.rows() || w.cols() != v.cols()) {
    throw ShapeError(std::string(op) + ": expected X N×D, V D×K, W N×K; got X " +
                     std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", V " +
                     std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + ", W " +
                     std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
}

Matrix logits(const Matrix& x, const Matrix& v, const Matrix& w) {
  return matmul_nt(matmul(x, v), w);
}

void validate(const ClusteredSpec& spec) {
  if (spec.centroids.empty()) throw ArgumentError("clustered data: empty centroid list");
  if (spec.reps == 0) throw ArgumentError("clustered data: reps must be >= 1");
  const std::size_t d = spec.dim();
  if (d == 0) throw ArgumentError("clustered data: centroids must have dimension >= 1");
  for (const auto& c : spec.centroids) {
    if (c.size() != d) throw ArgumentError("clustered data: centroids differ in dimension");
  }
  for (std::size_t i = 0; i < spec.k(); ++i)
    for (std::size_t j = i + 1; j < spec.k(); ++j)
      if (spec.centroids[i] == spec.centroids[j])
        throw ArgumentError("clustered data: centroids " + std::to_string(i) + " and " +
                            std::to_string(j) + " coincide");
}

}  // namespace

std::vector<std::vector<double>> orthogonal_centroids(std::size_t k, std::size_t dim,
                                                       std::uint64_t seed, double norm) {
  if (k == 0 || dim < k) {
    throw ArgumentError("orthogonal_centroids: need 1 <= k <= dim");
  }
  Rng rng(derive_seed(seed, "theory/centroids"));
  std::vector<std::vector<double>> out;
  out.reserve(k);
  while (out.size() < k) {
    std::vector<double> c(dim);
    for (double& x : c) x = rng.normal();
    // Two passes of modified Gram-Schmidt keep orthogonality at ~1e-16.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : out) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += c[i] * b[i];
        for (std::size_t i = 0; i < dim; ++i) c[i] -= dot * b[i];
      }
    }
    double nrm = 0.0;
    for (double x : c) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-8) continue;
    for (double& x : c) x /= nrm;
    out.push_back(std::move(c));
  }
  for (auto& c : out)
    for (double& x : c) x *= norm;
  return out;
}

Matrix make_clustered_data(const ClusteredSpec& spec) {
  validate(spec);
  Matrix x(spec.n(), spec.dim());
  for (std::size_t n = 0; n < spec.n(); ++n) {
    const auto& c = spec.centroids[n / spec.reps];
    std::copy(c.begin(), c.end(), x.row(n).begin());
  }
  return x;
}

double diet_linear_loss(const Matrix& x, const Matrix& v, const Matrix& w) {
  check_shapes(x, v, w, "diet_linear_loss");
  const Matrix z = logits(x, v, w);
  const auto lse = log_sum_exp_rows(z);
  double total = 0.0;
  for (std::size_t n = 0; n < z.rows(); ++n) total += lse[n] - z(n, n);
  return total / static_cast<double>(z.rows());
}

Matrix a_matrix_numeric(const Matrix& x, const Matrix& v, const Matrix& w) {
  check_shapes(x, v, w, "a_matrix_numeric");
  Matrix a = softmax_rows(logits(x, v, w));
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) -= 1.0;
  return a;
}

Matrix a_matrix_limit(std::size_t n, std::size_t k) {
  if (k == 0 || n % k != 0) {
    throw ArgumentError("a_matrix_limit: k=" + std::to_string(k) +
                        " must divide n=" + std::to_string(n));
  }
  const std::size_t block = n / k;
  const double c = static_cast<double>(k) / static_cast<double>(n);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(i, j) = (i / block == j / block ? c : 0.0) - (i == j ? 1.0 : 0.0);
    }
  }
  return a;
}

Gradients diet_gradients(const Matrix& x, const Matrix& v, const Matrix& w) {
  check_shapes(x, v, w, "diet_gradients");
  const Matrix a = a_matrix_numeric(x, v, w);
  // dL/dZ = A with Z = (XV) Wᵀ, hence dL/dW = Aᵀ (XV) and dL/dV = Xᵀ A W.
  return {matmul_tn(a, matmul(x, v)), matmul_tn(x, matmul(a, w))};
}

ClosedFormSolution closed_form_params(const Matrix& x, double kappa) {
  if (!(kappa > 0.0)) throw ArgumentError("closed_form_params: kappa must be > 0");
  const ThinSvd svd = svd_thin(x);
  if (svd.rank() == 0) throw DegenerateError("closed_form_params: X has rank 0");
  Matrix v = svd.v;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) v(i, j) /= svd.sigma[j];
  return {std::move(v), kappa * svd.u, kappa};
}

double default_kappa(std::size_t n, std::size_t k) {
  return 40.0 * static_cast<double>(n) / static_cast<double>(k);
}

OptimalityReport verify_optimality(const ClusteredSpec& spec, double kappa, double tol,
                                   double grad_rel_tol) {
  const Matrix x = make_clustered_data(spec);
  OptimalityReport r;
  r.n = spec.n();
  r.k = spec.k();
  r.dim = spec.dim();
  r.kappa = kappa;
  r.tol = tol;
  r.grad_rel_tol = grad_rel_tol;
  r.x_norm = frobenius_norm(x);
  r.optimal_loss = std::log(static_cast<double>(r.n) / static_cast<double>(r.k));
  r.within_block_k_over_n = static_cast<double>(r.k) / static_cast<double>(r.n);
  r.within_block_one_over_k = 1.0 / static_cast<double>(r.k);

  const ClosedFormSolution cf = closed_form_params(x, kappa);
  r.rank = cf.v.cols();
  const Gradients g = diet_gradients(x, cf.v, cf.w);
  r.grad_w_norm = frobenius_norm(g.grad_w);
  r.grad_v_norm = frobenius_norm(g.grad_v);

  const Matrix a = a_matrix_numeric(x, cf.v, cf.w);
  r.a_max_deviation = max_abs_diff(a, a_matrix_limit(r.n, r.k));
  double within = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    for (std::size_t j = 0; j < r.n; ++j) {
      if (i / spec.reps != j / spec.reps) continue;
      within += a(i, j) + (i == j ? 1.0 : 0.0);
      ++count;
    }
  }
  r.within_block_numeric = within / static_cast<double>(count);

  r.loss = diet_linear_loss(x, cf.v, cf.w);
  r.loss_gap = std::abs(r.loss - r.optimal_loss);

  const double grad_bound = grad_rel_tol * r.x_norm;
  r.grad_pass = r.grad_w_norm < grad_bound && r.grad_v_norm < grad_bound;
  r.a_matrix_pass = r.a_max_deviation < tol;
  r.loss_pass = r.loss_gap < tol;
  return r;
}

long DescentTrace::first_step_within(double gap) const {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (losses[i] - optimal_loss <= gap) return static_cast<long>(steps[i]);
  }
  return -1;
}

DescentTrace descend_linear_diet(const Matrix& x, std::size_t k, const DescentConfig& cfg) {
  if (k == 0 || x.rows() % k != 0) {
    throw ArgumentError("descend_linear_diet: k must divide the number of rows");
  }
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t f = cfg.features ? cfg.features : k;
  const std::size_t every = std::max<std::size_t>(1, cfg.record_every);

  Rng rng(derive_seed(cfg.seed, "theory/descent-init"));
  Matrix v(d, f), w(n, f);
  for (double& e : v.data()) e = cfg.init_scale * rng.normal();
  for (double& e : w.data()) e = cfg.init_scale * rng.normal();

  DescentTrace trace;
  trace.optimal_loss = std::log(static_cast<double>(n) / static_cast<double>(k));

  AdamW adam({v.size(), w.size()});
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    if (step % every == 0 || step == cfg.steps) {
      trace.steps.push_back(step);
      trace.losses.push_back(diet_linear_loss(x, v, w));
    }
    if (step == cfg.steps) break;

    Gradients g = diet_gradients(x, v, w);
    for (double& e : g.grad_v.data()) e *= inv_n;
    for (double& e : g.grad_w.data()) e *= inv_n;
    if (cfg.method == DescentMethod::kAdam) {
      const std::span<double> params[] = {v.data(), w.data()};
      const std::span<const double> grads[] = {g.grad_v.data(), g.grad_w.data()};
      adam.step(params, grads, cfg.lr, 0.0);
    } else {
      v = v - cfg.lr * g.grad_v;
      w = w - cfg.lr * g.grad_w;
    }
  }
  trace.final_loss = trace.losses.back();
  trace.final_gap = trace.final_loss - trace.optimal_loss;
  trace.v = std::move(v);
  trace.w = std::move(w);
  return trace;
}

}  // namespace diet::theory
