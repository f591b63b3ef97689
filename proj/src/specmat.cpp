#include "uergo/specmat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <iomanip>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "uergo/error.hpp"
#include "moduli.hpp"

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace uergo {

namespace {

// Resolvents of nilpotent-heavy matrices produce long runs of subnormal
// intermediates; flushing them to zero halves the quadrature cost. MXCSR is
// per-thread, and the previous mode is restored on exit.
class FlushSubnormals {
 public:
#if defined(__SSE2__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040U); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

constexpr double kSpectrumOneTol = 1e-6;

std::string describe(const CDense& m) {
  std::ostringstream os;
  os << "n=" << m.rows() << ", max|entry|=" << max_abs(m);
  return os.str();
}

}  // namespace

ComplexMatrix::ComplexMatrix(CDense entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0) throw Error(ErrorKind::InvalidInput, "empty matrix");
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorKind::InvalidInput, "matrix is " + std::to_string(entries_.rows()) + "x" +
                                             std::to_string(entries_.cols()) + ", not square");
  }
  if (!entries_.allFinite()) throw Error(ErrorKind::InvalidInput, "matrix has non-finite entries");
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return ComplexMatrix(CDense::Identity(k, k));
}

ComplexMatrix ComplexMatrix::zero(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return ComplexMatrix(CDense::Zero(k, k));
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> diag) {
  const auto k = static_cast<Eigen::Index>(diag.size());
  CDense m = CDense::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) m(i, i) = diag[static_cast<std::size_t>(i)];
  return ComplexMatrix(std::move(m));
}

ComplexMatrix ComplexMatrix::from_real(const Eigen::MatrixXd& entries) {
  return ComplexMatrix(entries.cast<Complex>());
}

ComplexMatrix ComplexMatrix::from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  CDense m(n, n);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != n) throw Error(ErrorKind::InvalidInput, "ragged matrix rows");
    Eigen::Index j = 0;
    for (const auto& v : row) m(i, j++) = v;
    ++i;
  }
  return ComplexMatrix(std::move(m));
}

bool ComplexMatrix::is_real() const { return entries_.imag().isZero(0.0); }

double ComplexMatrix::max_abs() const { return uergo::max_abs(entries_); }

// |z| via sqrt(|z|^2): vectorizes, unlike hypot. Only magnitudes outside
// roughly [1e-154, 1e154] lose accuracy, far from any tolerance used here.
double max_abs(const CDense& m) {
  return detail::reduce_moduli(m, [](const auto& a) { return a.maxCoeff(); });
}

// --- eigenvalues ------------------------------------------------------------

SpectrumReport summarize_spectrum(std::span<const Complex> eigenvalues, double cluster_radius) {
  SpectrumReport rep;
  const std::size_t n = eigenvalues.size();
  rep.dimension = n;
  rep.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());

  // Single-linkage clustering.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(eigenvalues[i] - eigenvalues[j]) <= cluster_radius) parent[find(i)] = find(j);
    }
  }
  std::vector<std::size_t> root_index(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_index[r] == n) {
      root_index[r] = rep.distinct.size();
      rep.distinct.push_back({Complex{0.0, 0.0}, 0, 0});
    }
    auto& sv = rep.distinct[root_index[r]];
    sv.value += eigenvalues[i];
    ++sv.algebraic_multiplicity;
  }
  for (auto& sv : rep.distinct) {
    sv.value /= static_cast<double>(sv.algebraic_multiplicity);
    sv.geometric_multiplicity = sv.algebraic_multiplicity == 1 ? 1 : 0;
  }
  auto phase = [](Complex z) {
    double a = std::arg(z);
    return a < 0 ? a + 2.0 * std::numbers::pi : a;
  };
  std::sort(rep.distinct.begin(), rep.distinct.end(), [&](const SpectralValue& a, const SpectralValue& b) {
    const double ma = std::abs(a.value);
    const double mb = std::abs(b.value);
    if (std::abs(ma - mb) > cluster_radius) return ma > mb;
    return phase(a.value) < phase(b.value);
  });

  for (const Complex& z : eigenvalues) rep.spectral_radius = std::max(rep.spectral_radius, std::abs(z));

  std::size_t at_one = rep.distinct.size();
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.distinct.size(); ++i) {
    const double d = std::abs(rep.distinct[i].value - 1.0);
    if (d < nearest) {
      nearest = d;
      at_one = i;
    }
  }
  if (nearest > kSpectrumOneTol) at_one = rep.distinct.size();
  for (std::size_t i = 0; i < rep.distinct.size(); ++i) {
    if (i == at_one) continue;
    rep.gap_at_one = std::min(rep.gap_at_one, std::abs(rep.distinct[i].value - 1.0));
  }
  return rep;
}

SpectrumReport eigen(const ComplexMatrix& t, const EigenOptions& options) {
  const CDense& a = t.dense();
  const Eigen::Index n = a.rows();
  std::vector<Complex> values(static_cast<std::size_t>(n));
  double backward = 0.0;
  if (t.is_real()) {
    // Real Schur form: about four times cheaper than the complex iteration.
    const Eigen::MatrixXd ar = a.real();
    Eigen::RealSchur<Eigen::MatrixXd> schur(ar, true);
    if (schur.info() != Eigen::Success) {
      throw Error(ErrorKind::NumericFailure, "Schur iteration did not converge (" + describe(a) + ")");
    }
    const Eigen::MatrixXd& u = schur.matrixT();
    const Eigen::MatrixXd& q = schur.matrixU();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == n - 1 || u(i + 1, i) == 0.0) {
        values[static_cast<std::size_t>(i)] = u(i, i);
        continue;
      }
      // 2x2 block: complex conjugate pair, scaled against overflow.
      const double p = 0.5 * (u(i, i) - u(i + 1, i + 1));
      const double big = std::max({std::abs(p), std::abs(u(i + 1, i)), std::abs(u(i, i + 1))});
      const double p0 = p / big;
      const double z = big * std::sqrt(std::abs(p0 * p0 + (u(i + 1, i) / big) * (u(i, i + 1) / big)));
      values[static_cast<std::size_t>(i)] = Complex(u(i + 1, i + 1) + p, z);
      values[static_cast<std::size_t>(i + 1)] = Complex(u(i + 1, i + 1) + p, -z);
      ++i;
    }
    backward = (ar * q - q * u).norm() + (q.transpose() * q - Eigen::MatrixXd::Identity(n, n)).norm() * ar.norm();
  } else {
    Eigen::ComplexSchur<CDense> schur(a, true);
    if (schur.info() != Eigen::Success) {
      throw Error(ErrorKind::NumericFailure, "complex Schur iteration did not converge (" + describe(a) + ")");
    }
    const CDense& u = schur.matrixT();
    const CDense& q = schur.matrixU();
    for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = u(i, i);
    const CDense upper = u.triangularView<Eigen::Upper>();
    backward = (a * q - q * upper).norm() + (q.adjoint() * q - CDense::Identity(n, n)).norm() * a.norm();
  }

  SpectrumReport rep = summarize_spectrum(values, options.cluster_radius);

  // lambda is an exact eigenvalue of T + E with ||E|| <= ||TQ - QU|| + ||Q*Q - I|| ||T||.
  rep.residual_bound = backward;
  const double budget = 1e-10 * static_cast<double>(n) * t.max_abs();
  if (rep.residual_bound > budget) {
    throw Error(ErrorKind::NumericFailure, "Schur backward error " + std::to_string(rep.residual_bound) +
                                               " exceeds " + std::to_string(budget) + " (" + describe(a) + ")");
  }

  if (options.geometric) {
    for (auto& sv : rep.distinct) {
      if (sv.algebraic_multiplicity == 1) continue;
      CDense shifted = -a;
      shifted.diagonal().array() += sv.value;
      const auto dim = static_cast<std::size_t>(kernel_basis(shifted, options.kernel_tol).cols());
      sv.geometric_multiplicity = std::clamp<std::size_t>(dim, 1, sv.algebraic_multiplicity);
    }
    rep.geometric_computed = true;
  }
  return rep;
}

// --- resolvent and contour projection ---------------------------------------

ComplexMatrix resolvent(const ComplexMatrix& t, Complex lambda) {
  const CDense& a = t.dense();
  const Eigen::Index n = a.rows();
  Eigen::ComplexEigenSolver<CDense> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericFailure, "eigenvalue iteration did not converge (" + describe(a) + ")");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(solver.eigenvalues()(i) - lambda) <= 1e-10) {
      std::ostringstream os;
      os << "lambda = " << lambda << " lies within 1e-10 of the eigenvalue " << solver.eigenvalues()(i);
      throw Error(ErrorKind::SingularResolvent, os.str());
    }
  }
  CDense shifted = -a;
  shifted.diagonal().array() += lambda;
  CDense r = shifted.partialPivLu().inverse();
  const double residual = max_abs(shifted * r - CDense::Identity(n, n));
  if (!(residual <= 1e-8)) {
    throw Error(ErrorKind::SingularResolvent, "inverse residual " + std::to_string(residual) + " exceeds 1e-8");
  }
  return ComplexMatrix(std::move(r));
}

namespace {

// (lambda I - H)^{-1} for upper Hessenberg H: adjacent-row pivoting keeps the
// elimination O(n^2), leaving one triangular solve.
void hessenberg_resolvent(const CDense& h, Complex lambda, CDense& m, CDense& out) {
  const Eigen::Index n = h.rows();
  m = -h;
  m.diagonal().array() += lambda;
  out.setIdentity(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
      m.row(k).tail(n - k).swap(m.row(k + 1).tail(n - k));
      out.row(k).swap(out.row(k + 1));
    }
    if (m(k + 1, k) == Complex{0.0, 0.0}) continue;
    const Complex mult = m(k + 1, k) / m(k, k);
    m.row(k + 1).tail(n - k - 1) -= mult * m.row(k).tail(n - k - 1);
    m(k + 1, k) = 0.0;
    out.row(k + 1).head(k + 2) -= mult * out.row(k).head(k + 2);
  }
  m.triangularView<Eigen::Upper>().solveInPlace(out);
}

CDense trapezoid_projection(const CDense& a, double radius, Complex center, std::size_t nodes, bool real_symmetric) {
  const Eigen::Index n = a.rows();
  // One Hessenberg reduction A = Q H Q* serves every node.
  CDense h;
  CDense q;
  if (real_symmetric) {
    Eigen::HessenbergDecomposition<Eigen::MatrixXd> hd(a.real());
    h = hd.matrixH().cast<Complex>();
    q = Eigen::MatrixXd(hd.matrixQ()).cast<Complex>();
  } else {
    Eigen::HessenbergDecomposition<CDense> hd(a);
    h = hd.matrixH();
    q = hd.matrixQ();
  }
  const FlushSubnormals flush;
  CDense acc = CDense::Zero(n, n);
  CDense work(n, n);
  CDense inv(n, n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(nodes);
  const std::size_t last = real_symmetric ? nodes / 2 : nodes - 1;
  for (std::size_t j = 0; j <= last; ++j) {
    const Complex offset = std::polar(radius, step * static_cast<double>(j));
    double weight = 1.0;
    if (real_symmetric && j != 0 && j != nodes / 2) weight = 2.0;
    hessenberg_resolvent(h, center + offset, work, inv);
    acc.noalias() += (weight * offset) * inv;
  }
  acc /= static_cast<double>(nodes);
  CDense p = q * acc * q.adjoint();
  if (real_symmetric) p = p.real().cast<Complex>();
  return p;
}

}  // namespace

ContourProjection contour_projection(const ComplexMatrix& t, double radius, std::size_t nodes, Complex center) {
  const CDense& a = t.dense();
  Eigen::ComplexEigenSolver<CDense> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericFailure, "eigenvalue iteration did not converge (" + describe(a) + ")");
  }
  std::vector<Complex> values(solver.eigenvalues().begin(), solver.eigenvalues().end());
  return contour_projection(t, radius, nodes, center, values);
}

ContourProjection contour_projection(const ComplexMatrix& t, double radius, std::size_t nodes, Complex center,
                                     std::span<const Complex> eigenvalues) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw Error(ErrorKind::InvalidInput, "contour radius must be > 0");
  if (nodes < 16) throw Error(ErrorKind::InvalidInput, "contour quadrature needs at least 16 nodes");
  for (const Complex& z : eigenvalues) {
    if (std::abs(std::abs(z - center) - radius) <= 1e-8) {
      std::ostringstream os;
      os << "eigenvalue " << z << " lies within 1e-8 of the contour |lambda - " << center << "| = " << radius;
      throw Error(ErrorKind::BadRadius, os.str());
    }
  }
  const CDense& a = t.dense();
  const bool real_symmetric = t.is_real() && center.imag() == 0.0;
  std::size_t n_nodes = nodes + (nodes % 2);
  ContourProjection out;
  double previous = std::numeric_limits<double>::infinity();
  bool stagnated = false;
  for (;;) {
    out.projection = trapezoid_projection(a, radius, center, n_nodes, real_symmetric);
    out.nodes = n_nodes;
    out.idempotency_residual = max_abs(out.projection * out.projection - out.projection);
    out.commutation_residual = max_abs(out.projection * a - a * out.projection);
    const double worst = std::max(out.idempotency_residual, out.commutation_residual);
    if (worst <= 1e-8) return out;
    // Aliasing error falls geometrically with the node count; a residual that
    // does not at least halve is rounding, which more nodes cannot remove.
    if (worst > 0.5 * previous) {
      stagnated = true;
      break;
    }
    previous = worst;
    if (n_nodes * 2 > 4096) break;
    n_nodes *= 2;
  }
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << "projection residuals (idempotency " << out.idempotency_residual
     << ", commutation " << out.commutation_residual << ") exceed 1e-8 at " << out.nodes << " nodes"
     << (stagnated ? " (rounding-limited)" : "");
  throw Error(ErrorKind::QuadratureFailure, os.str());
}

std::size_t quadrature_nodes_for(double inner_radius, double rho, double outer_radius) {
  const double q = std::max(inner_radius / rho, rho / outer_radius);
  if (!(q < 1.0)) return 4096;
  if (q <= 0.0) return 16;
  const double needed = std::log(1e-15) / std::log(q);
  std::size_t nodes = 16;
  while (static_cast<double>(nodes) < needed && nodes < 4096) nodes *= 2;
  return nodes;
}

// --- norms ------------------------------------------------------------------

const char* NormKind::name() const noexcept {
  switch (tag_) {
    case Tag::Sup: return "sup";
    case Tag::L1: return "l1";
    case Tag::L2: return "l2";
  }
  return "?";
}

double operator_norm(const CDense& t, const NormKind& kind) {
  const Eigen::Index n = t.rows();
  if (kind.tag() != NormKind::Tag::Sup && static_cast<Eigen::Index>(kind.measure().size()) != n) {
    throw Error(ErrorKind::InvalidInput, std::string(kind.name()) + " measure has " +
                                             std::to_string(kind.measure().size()) + " atoms for a " +
                                             std::to_string(n) + "-dimensional operator");
  }
  switch (kind.tag()) {
    case NormKind::Tag::Sup:
      return detail::max_row_sum(t);
    case NormKind::Tag::L1: {
      const auto mu = kind.measure();
      const Eigen::Map<const Eigen::VectorXd> w(mu.data(), n);
      return detail::reduce_moduli(t, [&w](const auto& a) {
        return ((w.transpose() * a).array() / w.transpose().array()).maxCoeff();
      });
    }
    case NormKind::Tag::L2: {
      const auto mu = kind.measure();
      CDense scaled(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          scaled(i, j) = t(i, j) * std::sqrt(mu[static_cast<std::size_t>(i)] / mu[static_cast<std::size_t>(j)]);
        }
      }
      // sigma_max^2 is the top eigenvalue of A* A; BDCSVD is avoided (see
      // kernel_basis).
      if (n == 0) return 0.0;
      const Eigen::SelfAdjointEigenSolver<CDense> es(scaled.adjoint() * scaled, Eigen::EigenvaluesOnly);
      return std::sqrt(std::max(es.eigenvalues()(n - 1), 0.0));
    }
  }
  return 0.0;
}

double operator_norm(const ComplexMatrix& t, const NormKind& kind) { return operator_norm(t.dense(), kind); }

PowerNormSequence power_norm_sequence(const ComplexMatrix& t, const NormKind& kind, std::size_t n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidInput, "power_norm_sequence needs n_max >= 1");
  PowerNormSequence seq;
  const LeftMultiplier mult(t.dense());
  CDense power = t.dense();
  for (std::size_t k = 1; k <= n_max; ++k) {
    const double norm = power.allFinite() ? operator_norm(power, kind) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(norm)) {
      seq.divergent = true;
      break;
    }
    seq.norms.push_back(norm);
    if (k < n_max) power = mult.apply(power);
  }
  return seq;
}

// --- kernels and helpers ----------------------------------------------------

CDense kernel_basis(const CDense& t, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "kernel tolerance must be > 0");
  const Eigen::Index n = t.cols();
  // Eigen 3.4.0's divide-and-conquer SVD can fail an index assertion (or read
  // out of bounds) on exactly deflating 0/1 matrices; one-sided Jacobi is slower
  // but robust.
  Eigen::JacobiSVD<CDense, Eigen::ColPivHouseholderQRPreconditioner> svd(t, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (smax == 0.0) return CDense::Identity(n, n);
  const double threshold = tol * smax * static_cast<double>(n);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > threshold) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

CDense kernel_basis(const ComplexMatrix& t, double tol) { return kernel_basis(t.dense(), tol); }

LeftMultiplier::LeftMultiplier(const CDense& t) : dense_(&t) {
  const Eigen::Index n = t.rows();
  column_.assign(static_cast<std::size_t>(n), -1);
  value_.assign(static_cast<std::size_t>(n), Complex{0.0, 0.0});
  structured_ = true;
  for (Eigen::Index i = 0; i < n && structured_; ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      if (t(i, j) == Complex{0.0, 0.0}) continue;
      if (column_[static_cast<std::size_t>(i)] >= 0) {
        structured_ = false;
        break;
      }
      column_[static_cast<std::size_t>(i)] = j;
      value_[static_cast<std::size_t>(i)] = t(i, j);
    }
  }
}

CDense LeftMultiplier::apply(const CDense& x) const {
  if (!structured_) return (*dense_) * x;
  CDense out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index c = column_[static_cast<std::size_t>(i)];
    if (c < 0) {
      out.row(i).setZero();
    } else {
      out.row(i) = value_[static_cast<std::size_t>(i)] * x.row(c);
    }
  }
  return out;
}

CDense matrix_power(const CDense& t, std::uint64_t k) {
  CDense result = CDense::Identity(t.rows(), t.cols());
  CDense base = t;
  while (k > 0) {
    if (k & 1U) result = result * base;
    k >>= 1U;
    if (k > 0) base = base * base;
  }
  return result;
}

double span_residual(const CDense& basis, const CDense& vectors) {
  double worst = 0.0;
  if (basis.cols() == 0) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) worst = std::max(worst, vectors.col(j).norm());
    return worst;
  }
  Eigen::ColPivHouseholderQR<CDense> qr(basis);
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    const CVector coeff = qr.solve(vectors.col(j));
    worst = std::max(worst, (vectors.col(j) - basis * coeff).norm());
  }
  return worst;
}

}  // namespace uergo
