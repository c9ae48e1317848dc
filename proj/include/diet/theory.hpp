// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed-form analysis of the linear DIET model: logits Z = X V Wᵀ, one class
// per row of X. Everything here works on the sum-form loss gradients and the
// mean-form loss value.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "diet/linalg.hpp"

namespace diet::theory {

/// K centroids, each repeated `reps` times (N = K · reps).
struct ClusteredSpec {
  std::vector<std::vector<double>> centroids;
  std::size_t reps = 1;

  std::size_t k() const noexcept { return centroids.size(); }
  std::size_t n() const noexcept { return centroids.size() * reps; }
  std::size_t dim() const noexcept { return centroids.empty() ? 0 : centroids[0].size(); }
};

/// `k` random orthonormal directions in R^dim scaled to `norm`. Requires dim >= k.
std::vector<std::vector<double>> orthogonal_centroids(std::size_t k, std::size_t dim,
                                                       std::uint64_t seed,
                                                       double norm = 1.0);

Matrix make_clustered_data(const ClusteredSpec& spec);

/// Mean over rows of −Z_nn + log Σ_m exp(Z_nm).
double diet_linear_loss(const Matrix& x, const Matrix& v, const Matrix& w);

/// softmax_rows(X V Wᵀ) − I.
Matrix a_matrix_numeric(const Matrix& x, const Matrix& v, const Matrix& w);

/// Large-κ limit of A for clustered data: K/N inside each diagonal block,
/// minus the identity.
Matrix a_matrix_limit(std::size_t n, std::size_t k);

struct Gradients {
  Matrix grad_w;  // N×K, Aᵀ X V
  Matrix grad_v;  // D×K, Xᵀ A W
};

/// Gradients of the sum-form loss (N × diet_linear_loss).
Gradients diet_gradients(const Matrix& x, const Matrix& v, const Matrix& w);

struct ClosedFormSolution {
  Matrix v;  // V_X Σ_X⁻¹
  Matrix w;  // κ U_X
  double kappa = 0.0;
};

ClosedFormSolution closed_form_params(const Matrix& x, double kappa);

/// Smallest κ with κ·K/N >= 40.
double default_kappa(std::size_t n, std::size_t k);

struct OptimalityReport {
  std::size_t n = 0, k = 0, dim = 0, rank = 0;
  double kappa = 0.0;
  double tol = 0.0;
  double grad_rel_tol = 0.0;

  double x_norm = 0.0;
  double grad_w_norm = 0.0;
  double grad_v_norm = 0.0;
  double a_max_deviation = 0.0;
  double loss = 0.0;
  double optimal_loss = 0.0;  // log(N/K)
  double loss_gap = 0.0;

  // Mean within-block entry of softmax(XVWᵀ), diagonal included, next to the two
  // candidate closed forms K/N and 1/K.
  double within_block_numeric = 0.0;
  double within_block_k_over_n = 0.0;
  double within_block_one_over_k = 0.0;

  bool grad_pass = false;
  bool a_matrix_pass = false;
  bool loss_pass = false;
  bool pass() const noexcept { return grad_pass && a_matrix_pass && loss_pass; }
};

OptimalityReport verify_optimality(const ClusteredSpec& spec, double kappa, double tol,
                                   double grad_rel_tol = 1e-8);

enum class DescentMethod { kAdam, kGradientDescent };

struct DescentConfig {
  std::size_t steps = 20000;
  std::size_t features = 0;  // 0 → use the number of clusters
  DescentMethod method = DescentMethod::kAdam;
  double lr = 0.01;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
};

struct DescentTrace {
  std::vector<std::size_t> steps;
  std::vector<double> losses;
  double optimal_loss = 0.0;
  double final_loss = 0.0;
  double final_gap = 0.0;
  Matrix v, w;

  /// First recorded step whose loss gap is <= gap, or -1.
  long first_step_within(double gap) const;
};

/// Train (V, W) of the linear DIET model on `x` from small random init,
/// tracking the loss against log(N/K).
DescentTrace descend_linear_diet(const Matrix& x, std::size_t k, const DescentConfig& cfg);

}  // namespace diet::theory
