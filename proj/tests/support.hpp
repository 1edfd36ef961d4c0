#pragma once

// Test-only oracles. Deliberately independent of the library's dense and
// sparse factorizations.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mhdtrace/sparse.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat eye(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat from_csr(const mhdtrace::SparseMatrixCsr &a) {
  Mat m = zeros(a.nrows(), a.ncols());
  for (mhdtrace::Index i = 0; i < a.nrows(); ++i)
    for (auto k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k)
      m[i][a.col_indices()[k]] += a.values()[k];
  return m;
}

inline Mat mul(const Mat &a, const Mat &b) {
  Mat c = zeros(a.size(), b.empty() ? 0 : b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < c[i].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline std::vector<double> mul(const Mat &a, const std::vector<double> &x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

inline Mat trans(const Mat &a) {
  Mat t = zeros(a.empty() ? 0 : a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

/// Gauss-Jordan inverse with full pivoting.
inline Mat inverse(Mat a) {
  const std::size_t n = a.size();
  Mat inv = eye(n);
  std::vector<std::size_t> colperm(n);
  for (std::size_t i = 0; i < n; ++i) colperm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k, pc = k;
    double best = 0.0;
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j)
        if (std::abs(a[i][j]) > best) {
          best = std::abs(a[i][j]);
          pr = i;
          pc = j;
        }
    if (best == 0.0) throw std::runtime_error("oracle: singular");
    std::swap(a[k], a[pr]);
    std::swap(inv[k], inv[pr]);
    if (pc != k) {
      for (auto &row : a) std::swap(row[k], row[pc]);
      std::swap(colperm[k], colperm[pc]);
    }
    const double d = a[k][k];
    for (std::size_t j = 0; j < n; ++j) {
      a[k][j] /= d;
      inv[k][j] /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || a[i][k] == 0.0) continue;
      const double f = a[i][k];
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] -= f * a[k][j];
        inv[i][j] -= f * inv[k][j];
      }
    }
  }
  // Undo the column pivoting: rows of the inverse follow the column order.
  Mat out = zeros(n, n);
  for (std::size_t k = 0; k < n; ++k) out[colperm[k]] = inv[k];
  return out;
}

inline std::vector<double> solve(const Mat &a, const std::vector<double> &b) {
  return mul(inverse(a), b);
}

inline double max_abs_diff(const Mat &a, const Mat &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

inline double max_abs_diff(const std::vector<double> &a, const std::vector<double> &b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm(const std::vector<double> &a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline std::vector<double> random_vector(std::mt19937_64 &rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto &x : v) x = u(rng);
  return v;
}

inline Mat random_dense(std::mt19937_64 &rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m = zeros(r, c);
  for (auto &row : m)
    for (auto &x : row) x = u(rng);
  return m;
}

/// Random sparse matrix with a dominant diagonal (square) or plain random
/// entries (rectangular).
inline mhdtrace::SparseMatrixCsr random_sparse(std::mt19937_64 &rng, mhdtrace::Index r,
                                               mhdtrace::Index c, double density,
                                               double diag_shift = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  std::vector<mhdtrace::Triplet> t;
  for (mhdtrace::Index i = 0; i < r; ++i)
    for (mhdtrace::Index j = 0; j < c; ++j)
      if (p(rng) < density) t.push_back({i, j, u(rng)});
  if (diag_shift != 0.0)
    for (mhdtrace::Index i = 0; i < std::min(r, c); ++i) t.push_back({i, i, diag_shift});
  return mhdtrace::SparseMatrixCsr::from_triplets(r, c, std::move(t));
}

inline mhdtrace::SparseMatrixCsr to_csr(const Mat &m) {
  std::vector<mhdtrace::Triplet> t;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      if (m[i][j] != 0.0)
        t.push_back({static_cast<mhdtrace::Index>(i), static_cast<mhdtrace::Index>(j), m[i][j]});
  return mhdtrace::SparseMatrixCsr::from_triplets(static_cast<mhdtrace::Index>(m.size()),
                                                  m.empty() ? 0 : static_cast<mhdtrace::Index>(m[0].size()),
                                                  std::move(t));
}

inline mhdtrace::SparseMatrixCsr laplacian_1d(mhdtrace::Index n) {
  std::vector<mhdtrace::Triplet> t;
  for (mhdtrace::Index i = 0; i < n; ++i) {
    t.push_back({i, i, 2.0});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return mhdtrace::SparseMatrixCsr::from_triplets(n, n, std::move(t));
}

inline mhdtrace::SparseMatrixCsr laplacian_2d(mhdtrace::Index m) {
  std::vector<mhdtrace::Triplet> t;
  auto id = [m](mhdtrace::Index i, mhdtrace::Index j) { return i * m + j; };
  for (mhdtrace::Index i = 0; i < m; ++i)
    for (mhdtrace::Index j = 0; j < m; ++j) {
      t.push_back({id(i, j), id(i, j), 4.0});
      if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0});
      if (i + 1 < m) t.push_back({id(i, j), id(i + 1, j), -1.0});
      if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0});
      if (j + 1 < m) t.push_back({id(i, j), id(i, j + 1), -1.0});
    }
  return mhdtrace::SparseMatrixCsr::from_triplets(m * m, m * m, std::move(t));
}

} // namespace oracle
