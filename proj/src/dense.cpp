#include "mhdtrace/dense.hpp"

#include <algorithm>
#include <cmath>

namespace mhdtrace {

DenseMatrix::DenseMatrix(Index nrows, Index ncols, std::vector<double> row_major)
    : nrows_(nrows), ncols_(ncols), values_(std::move(row_major)) {
  if (static_cast<Index>(values_.size()) != nrows * ncols)
    throw DimensionError("DenseMatrix: buffer size mismatch");
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix &rhs) const {
  if (ncols_ != rhs.nrows_) throw DimensionError("DenseMatrix product: inner dimension");
  DenseMatrix out(nrows_, rhs.ncols_);
  for (Index i = 0; i < nrows_; ++i)
    for (Index k = 0; k < ncols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      const double *b = rhs.values_.data() + k * rhs.ncols_;
      double *o = out.values_.data() + i * rhs.ncols_;
      for (Index j = 0; j < rhs.ncols_; ++j) o[j] += a * b[j];
    }
  return out;
}

Vector DenseMatrix::operator*(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != ncols_) throw DimensionError("DenseMatrix * vector");
  Vector y(nrows_, 0.0);
  for (Index i = 0; i < nrows_; ++i) y[i] = dot(row(i), x);
  return y;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(ncols_, nrows_);
  for (Index i = 0; i < nrows_; ++i)
    for (Index j = 0; j < ncols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseLu::DenseLu(DenseMatrix a) : lu_(std::move(a)) {
  const Index n = lu_.nrows();
  if (lu_.ncols() != n) throw DimensionError("DenseLu: matrix must be square");
  pivots_.resize(n);
  double scale = 0.0;
  for (double v : lu_.values()) scale = std::max(scale, std::abs(v));
  const double tiny = 1e-14 * (scale > 0.0 ? scale : 1.0);
  for (Index k = 0; k < n; ++k) {
    Index p = k;
    double best = std::abs(lu_(k, k));
    for (Index i = k + 1; i < n; ++i)
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    if (best <= tiny || !std::isfinite(best))
      throw SingularMatrixError("dense LU: singular matrix", k);
    pivots_[k] = p;
    if (p != k)
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
    const double inv = 1.0 / lu_(k, k);
    double *rk = lu_.row(k).data();
    for (Index i = k + 1; i < n; ++i) {
      double *ri = lu_.row(i).data();
      const double l = ri[k] * inv;
      ri[k] = l;
      if (l == 0.0) continue;
      for (Index j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

void DenseLu::solve_in_place(std::span<double> b) const {
  const Index n = lu_.nrows();
  if (static_cast<Index>(b.size()) != n) throw DimensionError("DenseLu::solve: size");
  for (Index k = 0; k < n; ++k)
    if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
  for (Index i = 1; i < n; ++i) {
    const double *ri = lu_.row(i).data();
    double s = b[i];
    for (Index j = 0; j < i; ++j) s -= ri[j] * b[j];
    b[i] = s;
  }
  for (Index i = n - 1; i >= 0; --i) {
    const double *ri = lu_.row(i).data();
    double s = b[i];
    for (Index j = i + 1; j < n; ++j) s -= ri[j] * b[j];
    b[i] = s / ri[i];
  }
}

DenseMatrix DenseLu::solve(const DenseMatrix &b) const {
  const Index n = lu_.nrows();
  if (b.nrows() != n) throw DimensionError("DenseLu::solve: rhs rows");
  const Index m = b.ncols();
  DenseMatrix x = b;
  // Row-oriented elimination over all right-hand sides at once.
  for (Index k = 0; k < n; ++k)
    if (pivots_[k] != k)
      std::swap_ranges(x.row(k).begin(), x.row(k).end(), x.row(pivots_[k]).begin());
  for (Index i = 1; i < n; ++i) {
    double *xi = x.row(i).data();
    for (Index j = 0; j < i; ++j) {
      const double l = lu_(i, j);
      if (l == 0.0) continue;
      const double *xj = x.row(j).data();
      for (Index c = 0; c < m; ++c) xi[c] -= l * xj[c];
    }
  }
  for (Index i = n - 1; i >= 0; --i) {
    double *xi = x.row(i).data();
    for (Index j = i + 1; j < n; ++j) {
      const double u = lu_(i, j);
      if (u == 0.0) continue;
      const double *xj = x.row(j).data();
      for (Index c = 0; c < m; ++c) xi[c] -= u * xj[c];
    }
    const double inv = 1.0 / lu_(i, i);
    for (Index c = 0; c < m; ++c) xi[c] *= inv;
  }
  return x;
}

DenseMatrix dense_lu_solve(const DenseMatrix &a, const DenseMatrix &b) {
  return DenseLu(a).solve(b);
}

} // namespace mhdtrace
