#include "mhdtrace/direct.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace mhdtrace {

struct DirectSolver::Impl {
  Eigen::SparseMatrix<double> a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

DirectSolver::DirectSolver(const SparseMatrixCsr &a) : impl_(std::make_unique<Impl>()), n_(a.nrows()) {
  if (a.ncols() != a.nrows()) throw DimensionError("DirectSolver: matrix must be square");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(a.nnz()));
  for (Index i = 0; i < a.nrows(); ++i)
    for (Index p = a.row_offsets()[i]; p < a.row_offsets()[i + 1]; ++p)
      t.emplace_back(static_cast<int>(i), static_cast<int>(a.col_indices()[p]), a.values()[p]);
  impl_->a.resize(static_cast<int>(n_), static_cast<int>(n_));
  impl_->a.setFromTriplets(t.begin(), t.end());
  impl_->a.makeCompressed();
  impl_->lu.compute(impl_->a);
  if (impl_->lu.info() != Eigen::Success)
    throw SingularMatrixError("DirectSolver: " + impl_->lu.lastErrorMessage(), -1);
}

DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver &&) noexcept = default;
DirectSolver &DirectSolver::operator=(DirectSolver &&) noexcept = default;

Vector DirectSolver::solve(std::span<const double> b) const {
  if (static_cast<Index>(b.size()) != n_) throw DimensionError("DirectSolver::solve: length mismatch");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
  Eigen::VectorXd x = impl_->lu.solve(rhs);
  return Vector(x.data(), x.data() + x.size());
}

} // namespace mhdtrace
