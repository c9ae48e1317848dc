// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace diet {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite input.
Matrix softmax_rows(const Matrix& m);
/// Row-wise log Σ exp, overflow-safe.
std::vector<double> log_sum_exp_rows(const Matrix& m);

struct ThinSvd {
  Matrix u;                  // rows × r, orthonormal columns
  std::vector<double> sigma; // descending, all > tol·σ_max
  Matrix v;                  // cols × r, orthonormal columns

  std::size_t rank() const noexcept { return sigma.size(); }
};

inline constexpr double kDefaultSvdTol = 1e-9;

// One-sided Jacobi SVD for small dense matrices. Singular values below
// tol·σ_max are dropped, so the result is rank-revealing. Each column of v is
// sign-normalized so its largest-magnitude entry is non-negative.
ThinSvd svd_thin(const Matrix& m, double tol = kDefaultSvdTol);

}  // namespace diet
