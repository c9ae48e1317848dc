// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diet/error.hpp"

namespace diet {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " x " + shape_str(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ar[t] * br[t];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T x " + shape_str(b));
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t t = 0; t < a.rows(); ++t) {
    const double* ar = a.row(t).data();
    const double* br = b.row(t).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ati = ar[i];
      if (ati == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += ati * br[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("add: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("sub: " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out = m;
  for (double& x : out.data()) x *= s;
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data()) s += x * x;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
  }
  double d = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) d = std::max(d, std::abs(ad[i] - bd[i]));
  return d;
}

Matrix softmax_rows(const Matrix& m) {
  require_finite(m, "softmax_rows");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (double& x : o) x /= z;
  }
  return out;
}

std::vector<double> log_sum_exp_rows(const Matrix& m) {
  require_finite(m, "log_sum_exp_rows");
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double x : in) z += std::exp(x - mx);
    out[i] = mx + std::log(z);
  }
  return out;
}

namespace {

// Hestenes one-sided Jacobi on a tall matrix (rows >= cols). Orthogonalizes
// the columns of `a` in place and accumulates the rotations into `v`.
void jacobi_orthogonalize(Matrix& a, Matrix& v) {
  constexpr int kMaxSweeps = 80;
  constexpr double kEps = 1e-15;
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Columns below 1e-14·‖a‖_F are numerically zero; rotating them against
  // each other only shuffles rounding noise and never converges.
  double total = 0.0;
  for (double x : a.values()) total += x * x;
  const double negligible = 1e-28 * total;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = a(i, p), xq = a(i, q);
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (app <= negligible || aqq <= negligible) continue;
        if (std::abs(apq) <= kEps * std::sqrt(app * aqq)) continue;
        rotated = true;

        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = a(i, p), xq = a(i, q);
          a(i, p) = c * xp - s * xq;
          a(i, q) = s * xp + c * xq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double xp = v(i, p), xq = v(i, q);
          v(i, p) = c * xp - s * xq;
          v(i, q) = s * xp + c * xq;
        }
      }
    }
    if (!rotated) return;
  }
  throw ConvergenceError("svd_thin: Jacobi sweeps did not converge after " +
                             std::to_string(kMaxSweeps) + " sweeps",
                         kMaxSweeps);
}

ThinSvd svd_tall(const Matrix& m, double tol) {
  Matrix a = m;
  Matrix v = Matrix::identity(m.cols());
  jacobi_orthogonalize(a, v);

  const std::size_t n = m.cols();
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double smax = n ? norms[order[0]] : 0.0;
  std::size_t r = 0;
  while (r < n && smax > 0.0 && norms[order[r]] > tol * smax) ++r;

  ThinSvd out{Matrix(m.rows(), r), std::vector<double>(r), Matrix(n, r)};
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t j = order[k];
    const double s = norms[j];
    out.sigma[k] = s;
    // Sign convention: the largest-magnitude entry of each v column is >= 0.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v(i, j)) > std::abs(v(arg, j))) arg = i;
    const double sign = v(arg, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = sign * v(i, j);
    for (std::size_t i = 0; i < m.rows(); ++i) out.u(i, k) = sign * a(i, j) / s;
  }
  return out;
}

}  // namespace

ThinSvd svd_thin(const Matrix& m, double tol) {
  require_finite(m, "svd_thin");
  if (m.rows() >= m.cols()) return svd_tall(m, tol);

  // Wide input: factor the transpose and swap the roles of u and v, then
  // re-apply the sign convention on the new v.
  ThinSvd t = svd_tall(transpose(m), tol);
  ThinSvd out{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  for (std::size_t k = 0; k < out.rank(); ++k) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < out.v.rows(); ++i)
      if (std::abs(out.v(i, k)) > std::abs(out.v(arg, k))) arg = i;
    if (out.v(arg, k) < 0.0) {
      for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, k) = -out.v(i, k);
      for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, k) = -out.u(i, k);
    }
  }
  return out;
}

}  // namespace diet
