#include "mhdtrace/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mhdtrace {

Ilu0Factors ilu0_factor(const SparseMatrixCsr &a) {
  const Index n = a.nrows();
  if (a.ncols() != n) throw DimensionError("ilu0: matrix must be square");
  Ilu0Factors f;
  f.lu_ = a;
  f.diag_pos_.assign(n, -1);
  double max_diag = 0.0;
  for (Index i = 0; i < n; ++i) {
    f.diag_pos_[i] = a.find(i, i);
    if (f.diag_pos_[i] < 0)
      throw SingularMatrixError("ilu0: diagonal entry missing from pattern", i);
    max_diag = std::max(max_diag, std::abs(a.values()[f.diag_pos_[i]]));
  }
  const double tiny = 1e-14 * (max_diag > 0.0 ? max_diag : 1.0);

  const auto &off = f.lu_.row_offsets();
  const auto &col = f.lu_.col_indices();
  auto &val = f.lu_.values_mut();
  std::vector<Index> where(n, -1);
  for (Index i = 0; i < n; ++i) {
    for (Index k = off[i]; k < off[i + 1]; ++k) where[col[k]] = k;
    // IKJ: eliminate with every earlier pivot row that appears in row i.
    for (Index kk = off[i]; kk < off[i + 1] && col[kk] < i; ++kk) {
      const Index k = col[kk];
      const double pivot = val[f.diag_pos_[k]];
      const double l = val[kk] / pivot;
      val[kk] = l;
      for (Index kj = f.diag_pos_[k] + 1; kj < off[k + 1]; ++kj) {
        const Index pos = where[col[kj]];
        if (pos >= 0) val[pos] -= l * val[kj];
      }
    }
    const double d = val[f.diag_pos_[i]];
    if (!(std::abs(d) > tiny))
      throw SingularMatrixError("ilu0: zero pivot at row " + std::to_string(i), i);
    for (Index k = off[i]; k < off[i + 1]; ++k) where[col[k]] = -1;
  }
  return f;
}

void Ilu0Factors::apply(std::span<const double> r, std::span<double> x) const {
  const Index n = lu_.nrows();
  if (static_cast<Index>(r.size()) != n || static_cast<Index>(x.size()) != n)
    throw DimensionError("ilu0_apply: dimension mismatch");
  const auto &off = lu_.row_offsets();
  const auto &col = lu_.col_indices();
  const auto &val = lu_.values();
  for (Index i = 0; i < n; ++i) {
    double s = r[i];
    for (Index k = off[i]; k < diag_pos_[i]; ++k) s -= val[k] * x[col[k]];
    x[i] = s;
  }
  for (Index i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (Index k = diag_pos_[i] + 1; k < off[i + 1]; ++k) s -= val[k] * x[col[k]];
    x[i] = s / val[diag_pos_[i]];
  }
}

Vector Ilu0Factors::apply(std::span<const double> r) const {
  Vector x(r.size());
  apply(r, x);
  return x;
}

Vector ilu0_apply(const Ilu0Factors &f, std::span<const double> r) {
  return f.apply(r);
}

SparseMatrixCsr Ilu0Factors::lower() const {
  std::vector<Triplet> t;
  for (Index i = 0; i < lu_.nrows(); ++i) {
    for (Index k = lu_.row_offsets()[i]; k < diag_pos_[i]; ++k)
      t.push_back({i, lu_.col_indices()[k], lu_.values()[k]});
    t.push_back({i, i, 1.0});
  }
  return SparseMatrixCsr::from_triplets(lu_.nrows(), lu_.ncols(), std::move(t));
}

SparseMatrixCsr Ilu0Factors::upper() const {
  std::vector<Triplet> t;
  for (Index i = 0; i < lu_.nrows(); ++i)
    for (Index k = diag_pos_[i]; k < lu_.row_offsets()[i + 1]; ++k)
      t.push_back({i, lu_.col_indices()[k], lu_.values()[k]});
  return SparseMatrixCsr::from_triplets(lu_.nrows(), lu_.ncols(), std::move(t));
}

std::vector<Index> minimum_degree_ordering(const SparseMatrixCsr &a) {
  const Index n = a.nrows();
  std::vector<std::vector<Index>> adj(n);
  for (Index i = 0; i < n; ++i)
    for (Index k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const Index j = a.col_indices()[k];
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  for (auto &nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  std::set<std::pair<Index, Index>> queue;
  for (Index i = 0; i < n; ++i) queue.insert({static_cast<Index>(adj[i].size()), i});
  std::vector<char> eliminated(n, 0);
  std::vector<Index> order;
  order.reserve(n);
  std::vector<Index> merged;
  while (!queue.empty()) {
    const Index v = queue.begin()->second;
    queue.erase(queue.begin());
    eliminated[v] = 1;
    order.push_back(v);
    const std::vector<Index> nbrs = std::move(adj[v]);
    adj[v].clear();
    // Neighbors of v become a clique in the elimination graph.
    for (Index u : nbrs) {
      queue.erase({static_cast<Index>(adj[u].size()), u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), nbrs.begin(), nbrs.end(),
                     std::back_inserter(merged));
      merged.erase(std::remove_if(merged.begin(), merged.end(),
                                  [&](Index w) { return w == u || w == v; }),
                   merged.end());
      adj[u].swap(merged);
      queue.insert({static_cast<Index>(adj[u].size()), u});
    }
  }
  return order;
}

namespace {

// Columns of L kept while factoring: row indices in original numbering.
struct Column {
  std::vector<Index> rows;
  std::vector<double> vals;
};

} // namespace

SparseLuFactors sparse_lu_factor(const SparseMatrixCsr &a, double pivot_threshold) {
  const Index n = a.nrows();
  if (a.ncols() != n) throw DimensionError("sparse_lu: matrix must be square");
  const SparseMatrixCsr at = transpose(a); // row j of at == column j of a
  const double amax = a.max_abs();
  const double tiny = 1e-14 * (amax > 0.0 ? amax : 1.0);

  SparseLuFactors f;
  f.col_perm_ = minimum_degree_ordering(a);
  std::vector<Index> pinv(n, -1);
  std::vector<Column> lcols(n);
  std::vector<Triplet> utrip;
  std::vector<double> x(n, 0.0);
  std::vector<char> mark(n, 0);
  std::vector<Index> reach, stack, child_pos;
  reach.reserve(n);

  for (Index k = 0; k < n; ++k) {
    const Index col = f.col_perm_[k];
    const Index b0 = at.row_offsets()[col], b1 = at.row_offsets()[col + 1];
    // Depth-first search through the graph of L for the nonzero pattern of
    // L \ a(:, col); `reach` ends up in reverse topological order.
    reach.clear();
    for (Index p = b0; p < b1; ++p) {
      const Index start = at.col_indices()[p];
      if (mark[start]) continue;
      stack.assign(1, start);
      child_pos.assign(1, 0);
      mark[start] = 1;
      while (!stack.empty()) {
        const Index node = stack.back();
        const Index piv = pinv[node];
        bool descended = false;
        if (piv >= 0) {
          const auto &rows = lcols[piv].rows;
          Index &cp = child_pos.back();
          while (cp < static_cast<Index>(rows.size())) {
            const Index nxt = rows[cp++];
            if (!mark[nxt]) {
              mark[nxt] = 1;
              stack.push_back(nxt);
              child_pos.push_back(0);
              descended = true;
              break;
            }
          }
        }
        if (!descended) {
          reach.push_back(node);
          stack.pop_back();
          child_pos.pop_back();
        }
      }
    }
    for (Index p = b0; p < b1; ++p) x[at.col_indices()[p]] = at.values()[p];
    for (auto it = reach.rbegin(); it != reach.rend(); ++it) {
      const Index j = *it;
      const Index piv = pinv[j];
      if (piv < 0) continue;
      const double xj = x[j];
      const auto &lc = lcols[piv];
      for (std::size_t q = 0; q < lc.rows.size(); ++q) x[lc.rows[q]] -= lc.vals[q] * xj;
    }
    Index ipiv = -1;
    double best = -1.0;
    for (Index j : reach) {
      if (pinv[j] >= 0) continue;
      if (std::abs(x[j]) > best) {
        best = std::abs(x[j]);
        ipiv = j;
      }
    }
    if (ipiv < 0 || !(best > tiny)) {
      for (Index j : reach) {
        x[j] = 0.0;
        mark[j] = 0;
      }
      throw SingularMatrixError("sparse LU: singular matrix (pivot below 1e-14*max|A|) at column " +
                                    std::to_string(col),
                                col);
    }
    if (pinv[col] < 0 && mark[col] && std::abs(x[col]) >= pivot_threshold * best)
      ipiv = col;
    const double pivot = x[ipiv];
    Column lc;
    for (Index j : reach) {
      const Index piv = pinv[j];
      if (piv >= 0) {
        if (x[j] != 0.0) utrip.push_back({piv, k, x[j]});
      } else if (j != ipiv) {
        lc.rows.push_back(j);
        lc.vals.push_back(x[j] / pivot);
      }
      x[j] = 0.0;
      mark[j] = 0;
    }
    utrip.push_back({k, k, pivot});
    pinv[ipiv] = k;
    lcols[k] = std::move(lc);
  }

  std::vector<Triplet> ltrip;
  for (Index k = 0; k < n; ++k) {
    ltrip.push_back({k, k, 1.0});
    const auto &lc = lcols[k];
    for (std::size_t q = 0; q < lc.rows.size(); ++q)
      ltrip.push_back({pinv[lc.rows[q]], k, lc.vals[q]});
  }
  f.lower_ = SparseMatrixCsr::from_triplets(n, n, std::move(ltrip));
  f.upper_ = SparseMatrixCsr::from_triplets(n, n, std::move(utrip));
  f.row_perm_ = std::move(pinv);
  return f;
}

void SparseLuFactors::solve(std::span<const double> b, std::span<double> x) const {
  const Index n = size();
  if (static_cast<Index>(b.size()) != n || static_cast<Index>(x.size()) != n)
    throw DimensionError("lu_solve: dimension mismatch");
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[row_perm_[i]] = b[i];
  const auto &lo = lower_.row_offsets();
  const auto &lc = lower_.col_indices();
  const auto &lv = lower_.values();
  for (Index i = 0; i < n; ++i) {
    double s = y[i];
    for (Index k = lo[i]; k < lo[i + 1] && lc[k] < i; ++k) s -= lv[k] * y[lc[k]];
    y[i] = s;
  }
  const auto &uo = upper_.row_offsets();
  const auto &uc = upper_.col_indices();
  const auto &uv = upper_.values();
  for (Index i = n - 1; i >= 0; --i) {
    double s = y[i];
    double d = 0.0;
    for (Index k = uo[i]; k < uo[i + 1]; ++k) {
      if (uc[k] == i) d = uv[k];
      else if (uc[k] > i) s -= uv[k] * y[uc[k]];
    }
    y[i] = s / d;
  }
  for (Index k = 0; k < n; ++k) x[col_perm_[k]] = y[k];
}

Vector SparseLuFactors::solve(std::span<const double> b) const {
  Vector x(b.size());
  solve(b, x);
  return x;
}

Vector lu_solve(const SparseLuFactors &f, std::span<const double> b) {
  return f.solve(b);
}

} // namespace mhdtrace
