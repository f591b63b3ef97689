#pragma once

// Dense complex spectral engine: eigenvalues with multiplicities, resolvents,
// contour-integral (Riesz) projections, a Schur-based projection used as an
// independent cross-check, operator norms and numerical kernels.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uergo/dynsys.hpp"

namespace uergo {

using Complex = std::complex<double>;
using CDense = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Square matrix with finite entries. Row index = output coordinate.
class ComplexMatrix {
 public:
  /// Throws ErrorKind::InvalidInput if empty, not square or not finite.
  explicit ComplexMatrix(CDense entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix zero(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> diag);
  static ComplexMatrix from_real(const Eigen::MatrixXd& entries);
  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows);

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const CDense& dense() const noexcept { return entries_; }
  Complex operator()(std::size_t row, std::size_t col) const {
    return entries_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }
  bool is_real() const;
  double max_abs() const;

 private:
  CDense entries_;
};

struct SpectralValue {
  Complex value;
  std::size_t algebraic_multiplicity = 1;
  std::size_t geometric_multiplicity = 1;
};

struct SpectrumReport {
  std::size_t dimension = 0;
  /// All n eigenvalues, repeated by algebraic multiplicity.
  std::vector<Complex> eigenvalues;
  /// Eigenvalues clustered within the clustering radius.
  std::vector<SpectralValue> distinct;
  double spectral_radius = 0.0;
  /// Distance from 1 to the nearest spectral value other than the one at 1;
  /// +infinity when there is no other value.
  double gap_at_one = std::numeric_limits<double>::infinity();
  /// Bound on sigma_min(lambda I - T) for every reported lambda (Schur backward error).
  double residual_bound = 0.0;
  bool geometric_computed = false;
};

struct EigenOptions {
  double cluster_radius = 1e-8;
  /// Compute geometric multiplicities through kernel_basis for clusters of
  /// algebraic multiplicity > 1 (simple eigenvalues are trivially 1).
  bool geometric = true;
  double kernel_tol = 1e-12;
};

SpectrumReport eigen(const ComplexMatrix& t, const EigenOptions& options = {});

/// Builds the clustered summary of an explicit list of eigenvalues.
SpectrumReport summarize_spectrum(std::span<const Complex> eigenvalues, double cluster_radius = 1e-8);

/// (lambda I - T)^{-1}. Throws SingularResolvent when lambda lies within
/// 1e-10 of the spectrum or the inverse residual exceeds 1e-8.
ComplexMatrix resolvent(const ComplexMatrix& t, Complex lambda);

struct ContourProjection {
  CDense projection;
  std::size_t nodes = 0;
  double idempotency_residual = 0.0;  // max |P^2 - P|
  double commutation_residual = 0.0;  // max |PT - TP|
};

/// Riesz projection (1/2 pi i) \oint_{|lambda - center| = radius} R(lambda, T) d lambda
/// by the trapezoidal rule on `nodes` equispaced points. Node count doubles on
/// idempotency/commutation failure (> 1e-8) up to 4096.
/// Throws BadRadius if an eigenvalue lies within 1e-8 of the contour and
/// QuadratureFailure if the cap is reached.
ContourProjection contour_projection(const ComplexMatrix& t, double radius, std::size_t nodes = 256,
                                     Complex center = 0.0);
ContourProjection contour_projection(const ComplexMatrix& t, double radius, std::size_t nodes,
                                     Complex center, std::span<const Complex> eigenvalues);

/// Smallest power-of-two node count in [16, 4096] for which the trapezoidal
/// aliasing bound max(inner/rho, rho/outer)^nodes falls below 1e-15.
std::size_t quadrature_nodes_for(double inner_radius, double rho, double outer_radius = 1.0);

/// Spectral projection onto the invariant subspace of the eigenvalues
/// selected by `inside`, along the complementary invariant subspace. Computed
/// from a reordered complex Schur form and a triangular Sylvester solve; shares
/// no code with contour_projection.
CDense schur_spectral_projection(const ComplexMatrix& t, const std::function<bool(Complex)>& inside);

/// Projection onto the sum of eigenspaces ker(lambda - T), lambda in `values`,
/// along the complementary invariant subspace: V (W* V)^-1 W* with V, W right
/// and left kernel bases. Valid when every value is semi-simple; the kernels
/// come from pivoted LU factorizations of the shifted matrices themselves, so
/// no Schur backward error is amplified by non-normal blocks. Throws NumericFailure if W* V is
/// singular (a value is not semi-simple).
CDense eigenvector_spectral_projection(const ComplexMatrix& t, std::span<const Complex> values);

class NormKind {
 public:
  enum class Tag { Sup, L1, L2 };

  static NormKind sup() { return NormKind(Tag::Sup, {}); }
  static NormKind l1(FiniteMeasure mu) { return NormKind(Tag::L1, mu.weights()); }
  static NormKind l2(FiniteMeasure mu) { return NormKind(Tag::L2, mu.weights()); }

  Tag tag() const noexcept { return tag_; }
  std::span<const double> measure() const noexcept { return measure_; }
  const char* name() const noexcept;

 private:
  NormKind(Tag tag, std::span<const double> measure) : tag_(tag), measure_(measure.begin(), measure.end()) {}
  Tag tag_;
  std::vector<double> measure_;
};

/// SUP: max row sum of |T_ij|. L1(mu): max_j sum_i mu_i |T_ij| / mu_j.
/// L2(mu): largest singular value of D^{1/2} T D^{-1/2}, D = diag(mu).
double operator_norm(const CDense& t, const NormKind& kind);
double operator_norm(const ComplexMatrix& t, const NormKind& kind);

struct PowerNormSequence {
  std::vector<double> norms;  // ||T^n|| for n = 1..len
  bool divergent = false;     // overflow stopped the sequence early
};

PowerNormSequence power_norm_sequence(const ComplexMatrix& t, const NormKind& kind, std::size_t n_max);

/// Orthonormal basis (as columns) of the right singular vectors whose
/// singular value is <= tol * sigma_max * n.
CDense kernel_basis(const CDense& t, double tol);
CDense kernel_basis(const ComplexMatrix& t, double tol);

/// Left multiplication by T that uses the one-entry-per-row structure of
/// weighted composition matrices when present (O(n^2) instead of O(n^3)).
class LeftMultiplier {
 public:
  explicit LeftMultiplier(const CDense& t);
  CDense apply(const CDense& x) const;
  bool structured() const noexcept { return structured_; }

 private:
  const CDense* dense_;
  bool structured_ = false;
  std::vector<Eigen::Index> column_;
  std::vector<Complex> value_;
};

CDense matrix_power(const CDense& t, std::uint64_t k);
double max_abs(const CDense& m);

/// Least-squares residual max_j ||v_j - B B^+ v_j|| of the columns of `vectors`
/// against span(basis).
double span_residual(const CDense& basis, const CDense& vectors);

}  // namespace uergo
