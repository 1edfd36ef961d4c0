#include "mhdtrace/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mhdtrace {

SparseMatrixCsr::SparseMatrixCsr(Index nrows, Index ncols,
                                 std::vector<Index> row_offsets,
                                 std::vector<Index> col_indices,
                                 std::vector<double> values)
    : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)), values_(std::move(values)) {
  validate();
}

void SparseMatrixCsr::validate() const {
  if (nrows_ < 0 || ncols_ < 0)
    throw DimensionError("negative matrix dimension");
  if (static_cast<Index>(row_offsets_.size()) != nrows_ + 1)
    throw DimensionError("row_offsets must have nrows+1 entries");
  if (row_offsets_.front() != 0)
    throw DimensionError("row_offsets[0] must be 0");
  if (col_indices_.size() != values_.size())
    throw DimensionError("col_indices and values differ in length");
  if (row_offsets_.back() != static_cast<Index>(values_.size()))
    throw DimensionError("row_offsets[nrows] must equal nnz");
  for (Index i = 0; i < nrows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1])
      throw DimensionError("row_offsets must be nondecreasing");
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const Index j = col_indices_[k];
      if (j < 0 || j >= ncols_)
        throw DimensionError("column index out of range");
      if (k > row_offsets_[i] && col_indices_[k - 1] >= j)
        throw DimensionError("column indices must be strictly increasing");
    }
  }
}

SparseMatrixCsr SparseMatrixCsr::from_triplets(Index nrows, Index ncols,
                                               std::vector<Triplet> entries) {
  for (const auto &t : entries)
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
      throw DimensionError("triplet index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Index> offsets(nrows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(entries.size());
  vals.reserve(entries.size());
  Index last_row = -1, last_col = -1;
  for (const auto &t : entries) {
    if (t.row == last_row && t.col == last_col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++offsets[t.row + 1];
    last_row = t.row;
    last_col = t.col;
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseMatrixCsr(nrows, ncols, std::move(offsets), std::move(cols),
                         std::move(vals));
}

SparseMatrixCsr SparseMatrixCsr::identity(Index n) {
  std::vector<Index> offsets(n + 1), cols(n);
  std::iota(offsets.begin(), offsets.end(), Index{0});
  std::iota(cols.begin(), cols.end(), Index{0});
  return SparseMatrixCsr(n, n, std::move(offsets), std::move(cols),
                         std::vector<double>(n, 1.0));
}

SparseMatrixCsr SparseMatrixCsr::from_dense(Index nrows, Index ncols,
                                            std::span<const double> row_major,
                                            double drop_below) {
  if (static_cast<Index>(row_major.size()) != nrows * ncols)
    throw DimensionError("dense buffer size mismatch");
  std::vector<Index> offsets(nrows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (Index i = 0; i < nrows; ++i) {
    for (Index j = 0; j < ncols; ++j) {
      const double v = row_major[i * ncols + j];
      if (v != 0.0 && std::abs(v) >= drop_below) {
        cols.push_back(j);
        vals.push_back(v);
      }
    }
    offsets[i + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrixCsr(nrows, ncols, std::move(offsets), std::move(cols),
                         std::move(vals));
}

Index SparseMatrixCsr::find(Index i, Index j) const {
  const auto first = col_indices_.begin() + row_offsets_[i];
  const auto last = col_indices_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return -1;
  return static_cast<Index>(it - col_indices_.begin());
}

double SparseMatrixCsr::at(Index i, Index j) const {
  const Index k = find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

std::vector<Triplet> SparseMatrixCsr::to_triplets() const {
  std::vector<Triplet> out;
  out.reserve(values_.size());
  for (Index i = 0; i < nrows_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      out.push_back({i, col_indices_[k], values_[k]});
  return out;
}

std::vector<double> SparseMatrixCsr::to_dense() const {
  std::vector<double> d(static_cast<std::size_t>(nrows_ * ncols_), 0.0);
  for (Index i = 0; i < nrows_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      d[i * ncols_ + col_indices_[k]] = values_[k];
  return d;
}

double SparseMatrixCsr::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void spmv(const SparseMatrixCsr &a, std::span<const double> x,
          std::span<double> y) {
  if (static_cast<Index>(x.size()) != a.ncols() ||
      static_cast<Index>(y.size()) != a.nrows())
    throw DimensionError("spmv: dimension mismatch");
  const auto &off = a.row_offsets();
  const auto &col = a.col_indices();
  const auto &val = a.values();
  for (Index i = 0; i < a.nrows(); ++i) {
    double s = 0.0;
    for (Index k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

Vector spmv(const SparseMatrixCsr &a, std::span<const double> x) {
  Vector y(a.nrows());
  spmv(a, x, y);
  return y;
}

void residual(const SparseMatrixCsr &a, std::span<const double> x,
              std::span<const double> b, std::span<double> r) {
  if (static_cast<Index>(b.size()) != a.nrows())
    throw DimensionError("residual: rhs size mismatch");
  spmv(a, x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

SparseMatrixCsr transpose(const SparseMatrixCsr &a) {
  const Index m = a.nrows(), n = a.ncols();
  std::vector<Index> offsets(n + 1, 0);
  for (Index c : a.col_indices()) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cols(a.nnz());
  std::vector<double> vals(a.nnz());
  std::vector<Index> next(offsets.begin(), offsets.end() - 1);
  // Rows are visited in increasing order, so each output row stays sorted.
  for (Index i = 0; i < m; ++i) {
    for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const Index pos = next[a.col_indices()[k]]++;
      cols[pos] = i;
      vals[pos] = a.values()[k];
    }
  }
  return SparseMatrixCsr(n, m, std::move(offsets), std::move(cols),
                         std::move(vals));
}

SparseMatrixCsr multiply(const SparseMatrixCsr &a, const SparseMatrixCsr &b) {
  if (a.ncols() != b.nrows()) throw DimensionError("multiply: inner dimension");
  const Index m = a.nrows(), n = b.ncols();
  std::vector<Index> offsets(m + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  std::vector<double> acc(n, 0.0);
  std::vector<Index> marker(n, -1);
  std::vector<Index> row_cols;
  for (Index i = 0; i < m; ++i) {
    row_cols.clear();
    for (Index ka = a.row_offsets()[i]; ka < a.row_offsets()[i + 1]; ++ka) {
      const Index j = a.col_indices()[ka];
      const double av = a.values()[ka];
      for (Index kb = b.row_offsets()[j]; kb < b.row_offsets()[j + 1]; ++kb) {
        const Index c = b.col_indices()[kb];
        if (marker[c] != i) {
          marker[c] = i;
          acc[c] = 0.0;
          row_cols.push_back(c);
        }
        acc[c] += av * b.values()[kb];
      }
    }
    std::sort(row_cols.begin(), row_cols.end());
    for (Index c : row_cols) {
      cols.push_back(c);
      vals.push_back(acc[c]);
    }
    offsets[i + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrixCsr(m, n, std::move(offsets), std::move(cols),
                         std::move(vals));
}

SparseMatrixCsr submatrix(const SparseMatrixCsr &a,
                          std::span<const Index> keep_rows,
                          std::span<const Index> keep_cols) {
  std::vector<Index> colmap(a.ncols(), -1);
  for (std::size_t k = 0; k < keep_cols.size(); ++k) colmap[keep_cols[k]] = static_cast<Index>(k);
  std::vector<Index> offsets(keep_rows.size() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  std::vector<std::pair<Index, double>> row;
  for (std::size_t r = 0; r < keep_rows.size(); ++r) {
    const Index i = keep_rows[r];
    row.clear();
    for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const Index c = colmap[a.col_indices()[k]];
      if (c >= 0) row.emplace_back(c, a.values()[k]);
    }
    std::sort(row.begin(), row.end());
    for (const auto &[c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets[r + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrixCsr(static_cast<Index>(keep_rows.size()),
                         static_cast<Index>(keep_cols.size()), std::move(offsets),
                         std::move(cols), std::move(vals));
}

SparseMatrixCsr permute_symmetric(const SparseMatrixCsr &a,
                                  std::span<const Index> perm) {
  if (a.nrows() != a.ncols() || static_cast<Index>(perm.size()) != a.nrows())
    throw DimensionError("permute_symmetric: needs a square matrix and full permutation");
  std::vector<Index> inv(perm.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<Index>(i);
  return submatrix(a, inv, inv);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void write_matrix_market(std::ostream &os, const SparseMatrixCsr &a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.nrows() << ' ' << a.ncols() << ' ' << a.nnz() << '\n';
  os << std::setprecision(17);
  for (const auto &t : a.to_triplets())
    os << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value << '\n';
}

SparseMatrixCsr read_matrix_market(std::istream &is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("matrix market: missing header");
  {
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower.find("coordinate") == std::string::npos ||
        lower.find("complex") != std::string::npos)
      throw std::runtime_error("matrix market: only real coordinate matrices are supported");
  }
  const bool symmetric = line.find("symmetric") != std::string::npos;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream header(line);
  Index m = 0, n = 0, nnz = 0;
  if (!(header >> m >> n >> nnz))
    throw std::runtime_error("matrix market: bad size line");
  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * nnz : nnz);
  for (Index k = 0; k < nnz; ++k) {
    Index i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v))
      throw std::runtime_error("matrix market: truncated entry list");
    entries.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
  }
  return SparseMatrixCsr::from_triplets(m, n, std::move(entries));
}

void write_matrix_market(const std::string &path, const SparseMatrixCsr &a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_matrix_market(os, a);
}

SparseMatrixCsr read_matrix_market(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_matrix_market(is);
}

} // namespace mhdtrace
