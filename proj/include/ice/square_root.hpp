#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ice {

// Thrown when a triangular system has a (near-)zero diagonal entry. Carries
// the offending column so callers can report which variable lost rank.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(Eigen::Index column, double diagonal)
      : std::runtime_error("singular system: column " + std::to_string(column) +
                           " has diagonal " + std::to_string(diagonal)),
        column_(column) {}

  Eigen::Index column() const { return column_; }

 private:
  Eigen::Index column_;
};

// Square-root form of a linearized least-squares problem: upper-triangular R
// and right-hand side c such that ||A x - b||^2 = ||R x - c||^2 + residual_norm_sq
// for the system (A, b) it was factored from. Q is never stored.
template <typename Scalar>
struct SquareRootSystem {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> R;
  Eigen::Vector<Scalar, Eigen::Dynamic> c;
  Scalar residual_norm_sq{0};

  Eigen::Index dimension() const { return R.rows(); }

  // Relative singularity cutoff: |R_ii| below this is treated as rank loss.
  Scalar singular_tolerance() const {
    const Scalar max_abs = R.size() == 0 ? Scalar(0) : R.cwiseAbs().maxCoeff();
    return Scalar(1e-12) * max_abs;
  }

  // Grows the state dimension, padding R and c with zeros. The new columns
  // stay singular until rows touching them are folded in.
  void expand(Eigen::Index new_dim) {
    const Eigen::Index old_dim = dimension();
    if (new_dim < old_dim) throw std::invalid_argument("expand: dimension may only grow");
    if (new_dim == old_dim) return;
    R.conservativeResize(new_dim, new_dim);
    R.bottomRows(new_dim - old_dim).setZero();
    R.rightCols(new_dim - old_dim).topRows(old_dim).setZero();
    c.conservativeResize(new_dim);
    c.tail(new_dim - old_dim).setZero();
  }
};

using SquareRootSystemd = SquareRootSystem<double>;

namespace detail {

// Flip rows so every diagonal entry of R is nonnegative. Keeps batch and
// incremental factorizations comparable entry by entry.
template <typename Scalar>
void force_nonnegative_diagonal(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& R,
                                Eigen::Vector<Scalar, Eigen::Dynamic>& c) {
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    if (R(i, i) < Scalar(0)) {
      R.row(i).tail(R.cols() - i) = -R.row(i).tail(R.cols() - i);
      c(i) = -c(i);
    }
  }
}

}  // namespace detail

// Batch QR factorization of the whitened system (A, b). Returns (R, c, d2)
// with ||A x - b||^2 = ||R x - c||^2 + d2 for every x. Throws
// SingularSystemError if A is rank deficient.
template <typename DerivedA, typename DerivedB>
SquareRootSystem<typename DerivedA::Scalar> qr_factorize(const Eigen::MatrixBase<DerivedA>& A,
                                                         const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index rows = A.rows();
  const Eigen::Index cols = A.cols();
  if (rows < cols) throw std::invalid_argument("qr_factorize: need at least as many rows as columns");
  if (b.size() != rows) throw std::invalid_argument("qr_factorize: rhs length mismatch");
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("qr_factorize: non-finite input");

  const Eigen::HouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(A);
  Eigen::Vector<Scalar, Eigen::Dynamic> qtb = b;
  qtb.applyOnTheLeft(qr.householderQ().adjoint());

  SquareRootSystem<Scalar> sys;
  sys.R = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
  sys.c = qtb.head(cols);
  sys.residual_norm_sq = qtb.tail(rows - cols).squaredNorm();
  detail::force_nonnegative_diagonal(sys.R, sys.c);

  const Scalar tol = sys.singular_tolerance();
  for (Eigen::Index i = 0; i < cols; ++i) {
    if (std::abs(sys.R(i, i)) < tol) throw SingularSystemError(i, static_cast<double>(sys.R(i, i)));
  }
  return sys;
}

// Folds new whitened rows into an existing factorization with Givens
// rotations, restoring upper-triangular form in place. Equivalent (to
// round-off) to refactoring the vertically stacked system. Rotations are
// chosen so the diagonal stays nonnegative.
template <typename Scalar, typename DerivedA, typename DerivedB>
void givens_augment_in_place(SquareRootSystem<Scalar>& sys,
                             const Eigen::MatrixBase<DerivedA>& new_rows,
                             const Eigen::MatrixBase<DerivedB>& new_rhs) {
  const Eigen::Index dim = sys.dimension();
  if (new_rows.cols() != dim) throw std::invalid_argument("givens_augment: column count mismatch");
  if (new_rhs.size() != new_rows.rows()) throw std::invalid_argument("givens_augment: rhs length mismatch");

  Eigen::RowVector<Scalar, Eigen::Dynamic> row(dim);
  for (Eigen::Index k = 0; k < new_rows.rows(); ++k) {
    row = new_rows.row(k);
    Scalar rhs = new_rhs(k);
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (row(j) == Scalar(0)) continue;
      const Scalar a = sys.R(j, j);
      const Scalar g = row(j);
      const Scalar r = std::hypot(a, g);
      const Scalar cs = a / r;
      const Scalar sn = g / r;
      const Eigen::Index tail = dim - j;
      // Rotate (R row j, incoming row) over columns j..dim-1; the leading
      // entries of both are already zero.
      Eigen::RowVector<Scalar, Eigen::Dynamic> top =
          cs * sys.R.row(j).tail(tail) + sn * row.tail(tail);
      row.tail(tail) = -sn * sys.R.row(j).tail(tail) + cs * row.tail(tail);
      sys.R.row(j).tail(tail) = top;
      const Scalar top_rhs = cs * sys.c(j) + sn * rhs;
      rhs = -sn * sys.c(j) + cs * rhs;
      sys.c(j) = top_rhs;
      row(j) = Scalar(0);
    }
    // Fully eliminated row: the leftover rhs feeds the constant term.
    sys.residual_norm_sq += rhs * rhs;
  }
}

template <typename Scalar, typename DerivedA, typename DerivedB>
SquareRootSystem<Scalar> givens_augment(SquareRootSystem<Scalar> sys,
                                        const Eigen::MatrixBase<DerivedA>& new_rows,
                                        const Eigen::MatrixBase<DerivedB>& new_rhs) {
  givens_augment_in_place(sys, new_rows, new_rhs);
  return sys;
}

// Solves R x = c by back substitution. Throws SingularSystemError on a
// diagonal entry below the relative tolerance.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> back_substitute(const SquareRootSystem<Scalar>& sys) {
  const Eigen::Index dim = sys.dimension();
  const Scalar tol = sys.singular_tolerance();
  Eigen::Vector<Scalar, Eigen::Dynamic> x(dim);
  for (Eigen::Index i = dim - 1; i >= 0; --i) {
    const Scalar diag = sys.R(i, i);
    if (std::abs(diag) <= tol) throw SingularSystemError(i, static_cast<double>(diag));
    Scalar sum = sys.c(i);
    if (i + 1 < dim) sum -= sys.R.row(i).tail(dim - i - 1).dot(x.tail(dim - i - 1));
    x(i) = sum / diag;
  }
  return x;
}

}  // namespace ice
