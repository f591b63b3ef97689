// Spectral projection from a reordered complex Schur form.
//
// T = Q U Q*, with U upper triangular. Adjacent diagonal entries are swapped
// by unitary rotations until every selected eigenvalue precedes every
// unselected one, U = [A C; 0 B]. Solving A Y - Y B = -C block-diagonalizes U,
// and the projection onto the A-invariant subspace along the B-invariant one
// is Q [I -Y; 0 0] Q*.

#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "uergo/error.hpp"
#include "uergo/specmat.hpp"

namespace uergo {

namespace {

// Relative pivot threshold for the eigenvector kernels.
constexpr double kKernelTol = 1e-10;

// Orthonormal kernel basis from a full-pivoting LU of the exact matrix.
template <class M>
M lu_kernel(const M& m) {
  Eigen::FullPivLU<M> lu(m);
  lu.setThreshold(kKernelTol * static_cast<double>(m.rows()));
  if (lu.rank() == m.cols()) return M(m.rows(), 0);
  const M k = lu.kernel();
  return Eigen::HouseholderQR<M>(k).householderQ() * M::Identity(k.rows(), k.cols());
}

// Swaps U(k,k) and U(k+1,k+1) with a rotation G whose first column spans the
// eigenvector of the 2x2 block for U(k+1,k+1).
void swap_adjacent(CDense& u, CDense& q, Eigen::Index k) {
  const Complex a = u(k, k);
  const Complex b = u(k + 1, k + 1);
  if (a == b) return;
  Complex v1 = u(k, k + 1);
  Complex v2 = b - a;
  const double norm = std::hypot(std::abs(v1), std::abs(v2));
  v1 /= norm;
  v2 /= norm;
  // G = [v1 -conj(v2); v2 conj(v1)]
  Eigen::Matrix2cd g;
  g << v1, -std::conj(v2), v2, std::conj(v1);
  u.middleRows(k, 2) = g.adjoint() * u.middleRows(k, 2);
  u.middleCols(k, 2) = u.middleCols(k, 2) * g;
  q.middleCols(k, 2) = q.middleCols(k, 2) * g;
  u(k + 1, k) = 0.0;
  u(k, k) = b;
  u(k + 1, k + 1) = a;
}

}  // namespace

CDense schur_spectral_projection(const ComplexMatrix& t, const std::function<bool(Complex)>& inside) {
  const CDense& a = t.dense();
  const Eigen::Index n = a.rows();
  Eigen::ComplexSchur<CDense> schur(a, true);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericFailure, "complex Schur iteration did not converge");
  }
  CDense u = schur.matrixT().triangularView<Eigen::Upper>();
  CDense q = schur.matrixU();

  std::vector<bool> selected(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) selected[static_cast<std::size_t>(i)] = inside(u(i, i));

  // Stable bubble: move selected entries to the front, preserving relative order.
  Eigen::Index placed = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!selected[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index k = i - 1; k >= placed; --k) {
      swap_adjacent(u, q, k);
      std::swap(selected[static_cast<std::size_t>(k)], selected[static_cast<std::size_t>(k + 1)]);
    }
    ++placed;
  }
  const Eigen::Index m = placed;
  if (m == 0) return CDense::Zero(n, n);
  if (m == n) return CDense::Identity(n, n);

  const CDense a11 = u.topLeftCorner(m, m);
  const CDense b22 = u.bottomRightCorner(n - m, n - m);
  const CDense c12 = u.topRightCorner(m, n - m);

  // Column-wise Bartels-Stewart for A Y - Y B = -C with A, B upper triangular.
  CDense y = CDense::Zero(m, n - m);
  for (Eigen::Index j = 0; j < n - m; ++j) {
    CVector rhs = -c12.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs += y.col(i) * b22(i, j);
    CDense shifted = a11;
    shifted.diagonal().array() -= b22(j, j);
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }

  CDense p_schur = CDense::Zero(n, n);
  p_schur.topLeftCorner(m, m).setIdentity();
  p_schur.topRightCorner(m, n - m) = -y;
  return q * p_schur * q.adjoint();
}

CDense eigenvector_spectral_projection(const ComplexMatrix& t, std::span<const Complex> values) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  const bool real = t.dense().imag().isZero(0.0);
  const Eigen::MatrixXd re = t.dense().real();
  std::vector<CDense> right;
  std::vector<CDense> left;
  Eigen::Index cols = 0;
  for (Complex lambda : values) {
    // Real T: conj(lambda) has the conjugate kernels, real lambda real ones.
    const auto partner = std::find_if(values.begin(), values.end(), [&](Complex mu) {
      return mu.imag() > 0.0 && std::abs(mu - std::conj(lambda)) <= 1e-12;
    });
    if (real && lambda.imag() < 0.0 && partner != values.end()) {
      const auto i = static_cast<std::size_t>(partner - values.begin());
      // Partners precede when sorted; otherwise fall through and factor.
      if (i < right.size()) {
        right.push_back(right[i].conjugate());
        left.push_back(left[i].conjugate());
        cols += right.back().cols();
        continue;
      }
    }
    if (real && lambda.imag() == 0.0) {
      Eigen::MatrixXd m = -re;
      m.diagonal().array() += lambda.real();
      right.push_back(lu_kernel(m).cast<Complex>());
      left.push_back(lu_kernel(Eigen::MatrixXd(m.transpose())).cast<Complex>());
    } else {
      CDense m = -t.dense();
      m.diagonal().array() += lambda;
      right.push_back(lu_kernel(m));
      left.push_back(lu_kernel(CDense(m.adjoint())));
    }
    if (right.back().cols() != left.back().cols()) {
      throw Error(ErrorKind::NumericFailure, "left and right eigenspaces differ in dimension");
    }
    cols += right.back().cols();
  }
  if (cols == 0) return CDense::Zero(n, n);
  CDense v(n, cols);
  CDense w(n, cols);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < right.size(); ++i) {
    v.middleCols(at, right[i].cols()) = right[i];
    w.middleCols(at, left[i].cols()) = left[i];
    at += right[i].cols();
  }
  const CDense gram = w.adjoint() * v;
  const Eigen::FullPivLU<CDense> lu(gram);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::NumericFailure, "W* V is singular: an eigenvalue is not semi-simple");
  }
  return v * lu.solve(CDense(w.adjoint()));
}

}  // namespace uergo
