#include "uergo/latops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "uergo/error.hpp"

namespace uergo {

namespace {

constexpr double kStructuralTol = 1e-13;
constexpr double kSampledTol = 1e-14;

ComplexMatrix build_matrix(const FiniteMap& map, std::span<const double> weights) {
  const auto n = static_cast<Eigen::Index>(map.size());
  CDense m = CDense::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto i = static_cast<std::size_t>(x);
    if (weights[i] != 0.0) m(x, static_cast<Eigen::Index>(map(i))) = weights[i];
  }
  return ComplexMatrix(std::move(m));
}

struct StructuralVerdict {
  bool ok = true;
  std::string reason;
};

StructuralVerdict structural_check(const CDense& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double row_max = a.row(i).cwiseAbs().maxCoeff();
    if (row_max == 0.0) continue;
    Eigen::Index nonzeros = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const Complex v = a(i, j);
      const double mag = std::abs(v);
      if (mag <= kStructuralTol * row_max) continue;
      ++nonzeros;
      if (std::abs(v.imag()) > kStructuralTol * mag) {
        return {false, "row " + std::to_string(i) + " has a non-real entry"};
      }
      if (v.real() < 0.0) return {false, "row " + std::to_string(i) + " has a negative entry"};
    }
    if (nonzeros > 1) return {false, "row " + std::to_string(i) + " has more than one nonzero entry"};
  }
  return {};
}

}  // namespace

WeightedCompositionOperator::WeightedCompositionOperator(FiniteMap map, std::vector<double> weights)
    : map_(std::move(map)), weights_(std::move(weights)), matrix_(ComplexMatrix::zero(1)) {
  if (weights_.size() != map_.size()) {
    throw Error(ErrorKind::InvalidInput, "weights have length " + std::to_string(weights_.size()) +
                                             ", expected " + std::to_string(map_.size()));
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i])) throw Error(ErrorKind::InvalidInput, "non-finite weight");
    if (weights_[i] < 0.0) {
      throw Error(ErrorKind::NotALatticeHomomorphism, "weight w(" + std::to_string(i) + ") is negative");
    }
  }
  matrix_ = build_matrix(map_, weights_);
}

std::optional<WeightedCompositionOperator> WeightedCompositionOperator::from_matrix(const ComplexMatrix& t) {
  const CDense& a = t.dense();
  if (!structural_check(a).ok) return std::nullopt;
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<State> image(n);
  std::vector<double> weights(n, 0.0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto x = static_cast<std::size_t>(i);
    image[x] = x;
    Eigen::Index col = 0;
    const double mag = a.row(i).cwiseAbs().maxCoeff(&col);
    if (mag > 0.0) {
      image[x] = static_cast<std::size_t>(col);
      weights[x] = a(i, col).real();
    }
  }
  return WeightedCompositionOperator(FiniteMap(std::move(image)), std::move(weights));
}

CVector WeightedCompositionOperator::apply(const CVector& f) const {
  if (static_cast<std::size_t>(f.size()) != size()) throw Error(ErrorKind::InvalidInput, "vector size mismatch");
  CVector out(f.size());
  for (std::size_t x = 0; x < size(); ++x) {
    out(static_cast<Eigen::Index>(x)) = weights_[x] * f(static_cast<Eigen::Index>(map_(x)));
  }
  return out;
}

double WeightedCompositionOperator::cycle_spectral_radius() const {
  const auto cs = cycle_structure(map_);
  double best = 0.0;
  for (const auto& cycle : cs.cycles) {
    // Geometric mean via logs to stay finite on long cycles.
    double log_sum = 0.0;
    bool zero = false;
    for (State s : cycle.states) {
      if (weights_[s] == 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(weights_[s]);
    }
    if (zero) continue;
    best = std::max(best, std::exp(log_sum / static_cast<double>(cycle.length())));
  }
  return best;
}

WeightedCompositionOperator WeightedCompositionOperator::power(std::uint64_t k) const {
  const std::size_t n = size();
  // result = (id, 1); base = (phi, w). Composition: (a then b) has
  // image b(a(x)) and weight w_a(x) * w_b(a(x)).
  std::vector<State> r_map(n), b_map(map_.image().begin(), map_.image().end());
  std::vector<double> r_w(n, 1.0), b_w = weights_;
  for (std::size_t x = 0; x < n; ++x) r_map[x] = x;
  while (k > 0) {
    if (k & 1U) {
      for (std::size_t x = 0; x < n; ++x) {
        r_w[x] *= b_w[r_map[x]];
        r_map[x] = b_map[r_map[x]];
      }
    }
    k >>= 1U;
    if (k == 0) break;
    std::vector<State> sq_map(n);
    std::vector<double> sq_w(n);
    for (std::size_t x = 0; x < n; ++x) {
      sq_w[x] = b_w[x] * b_w[b_map[x]];
      sq_map[x] = b_map[b_map[x]];
    }
    b_map = std::move(sq_map);
    b_w = std::move(sq_w);
  }
  return WeightedCompositionOperator(FiniteMap(std::move(r_map)), std::move(r_w));
}

CDense power_apply(const ComplexMatrix& t, std::uint64_t k, const CDense& x) {
  if (static_cast<std::size_t>(x.rows()) != t.size()) throw Error(ErrorKind::InvalidInput, "size mismatch");
  if (const auto w = WeightedCompositionOperator::from_matrix(t)) {
    const auto pk = w->power(k);
    CDense out(x.rows(), x.cols());
    for (std::size_t i = 0; i < pk.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      out.row(row) = pk.weights()[i] * x.row(static_cast<Eigen::Index>(pk.map()(i)));
    }
    return out;
  }
  return matrix_power(t.dense(), k) * x;
}

WeightedCompositionOperator koopman_matrix(const FiniteMap& map) {
  return WeightedCompositionOperator(map, std::vector<double>(map.size(), 1.0));
}

WeightedCompositionOperator weighted_composition(const FiniteMap& map, std::vector<double> weights) {
  return WeightedCompositionOperator(map, std::move(weights));
}

double modulus_defect(const ComplexMatrix& t, const CVector& f) {
  const CDense& a = t.dense();
  const CVector tf = a * f;
  const CVector abs_f = f.cwiseAbs().cast<Complex>();
  const CVector t_abs_f = a * abs_f;
  const Eigen::VectorXd scale = a.cwiseAbs() * f.cwiseAbs();
  double worst = 0.0;
  for (Eigen::Index x = 0; x < a.rows(); ++x) {
    if (scale(x) == 0.0) continue;
    const double diff = std::abs(Complex{std::abs(tf(x)), 0.0} - t_abs_f(x));
    worst = std::max(worst, diff / scale(x));
  }
  return worst;
}

LatticeHomCheck check_lattice_homomorphism(const ComplexMatrix& t, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::InvalidInput, "lattice-homomorphism check needs trials >= 1");
  LatticeHomCheck out;
  const auto structural = structural_check(t.dense());
  out.structural = structural.ok;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.1, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const auto n = static_cast<Eigen::Index>(t.size());
  out.sampled = true;
  for (std::size_t k = 0; k < trials; ++k) {
    CVector f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = std::polar(radius(rng), angle(rng));
    const double defect = modulus_defect(t, f);
    if (defect > kSampledTol) {
      out.sampled = false;
      out.witness = f;
      out.violation = defect;
      break;
    }
  }
  if (out.structural != out.sampled) {
    throw Error(ErrorKind::InternalInconsistency,
                std::string("structural lattice check says ") + (out.structural ? "yes" : "no") +
                    " but the modulus sampler says " + (out.sampled ? "yes" : "no") +
                    (structural.reason.empty() ? "" : " (" + structural.reason + ")"));
  }
  out.is_lattice_hom = out.structural;
  out.reason = structural.reason;
  return out;
}

bool one_in_spectrum_check(const ComplexMatrix& t) {
  if (!check_lattice_homomorphism(t).is_lattice_hom) {
    throw Error(ErrorKind::InvalidHypothesis, "operator is not a lattice homomorphism");
  }
  const auto rep = eigen(t, {.geometric = false});
  if (std::abs(rep.spectral_radius - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidHypothesis, "spectral radius " + std::to_string(rep.spectral_radius) + " != 1");
  }
  return std::any_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                     [](Complex z) { return std::abs(z - 1.0) <= 1e-6; });
}

bool quasi_interior_check(std::span<const double> h) {
  return std::all_of(h.begin(), h.end(), [](double v) { return v > 0.0; });
}

bool quasi_interior_check(const CVector& h) {
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h(i).imag() != 0.0 || !(h(i).real() > 0.0)) return false;
  }
  return true;
}

// --- gallery ----------------------------------------------------------------

std::vector<std::string_view> gallery_names() {
  return {"am_diag_half_one", "l1_constant_map", "c_limit_truncation", "l1_doubling_truncation"};
}

std::vector<std::size_t> doubling_tail_coordinates(std::size_t n) {
  std::vector<std::size_t> coords(n);
  for (std::size_t j = 0; j < n; ++j) coords[j] = j + 1;
  return coords;
}

GalleryInstance gallery(std::string_view name, std::size_t n) {
  auto ones = [](std::size_t k) { return CVector::Ones(static_cast<Eigen::Index>(k)); };

  if (name == "am_diag_half_one") {
    auto w = weighted_composition(FiniteMap::identity(2), {0.5, 1.0});
    GalleryInstance g{std::string(name), 0, w.matrix(), NormKind::sup(), std::nullopt, ones(2), std::nullopt, w, {}};
    g.expect.spectrum = {1.0, 0.5};
    g.expect.unit_fixed = false;
    g.expect.stab_dimension = 1;
    g.expect.nilpotent_on_stab = false;
    g.expect.operator_norm = 1.0;
    return g;
  }
  if (name == "l1_constant_map") {
    const auto map = FiniteMap::constant(2, 0);
    auto k = koopman_matrix(map);
    const auto mu = FiniteMeasure::counting(2);
    GalleryInstance g{std::string(name), 0, k.matrix(), NormKind::l1(mu), mu, ones(2), map, k, {}};
    g.expect.spectrum = {1.0, 0.0};
    g.expect.stab_dimension = 1;
    g.expect.nilpotent_on_stab = true;
    g.expect.nilpotency_index = 1;
    g.expect.operator_norm = 2.0;
    g.expect.eventual_period = EventualPeriod{1, 1};
    return g;
  }
  if (name == "c_limit_truncation") {
    if (n < 2) throw Error(ErrorKind::InvalidInput, "c_limit_truncation needs n >= 2");
    const auto map = FiniteMap::constant(n, n - 1);
    auto k = koopman_matrix(map);
    GalleryInstance g{std::string(name), n, k.matrix(), NormKind::sup(), std::nullopt, ones(n), map, k, {}};
    g.expect.spectrum = {1.0, 0.0};
    g.expect.stab_dimension = n - 1;
    g.expect.nilpotent_on_stab = true;
    g.expect.nilpotency_index = 1;
    g.expect.operator_norm = 1.0;
    g.expect.eventual_period = EventualPeriod{1, 1};
    return g;
  }
  if (name == "l1_doubling_truncation") {
    if (n < 1) throw Error(ErrorKind::InvalidInput, "l1_doubling_truncation needs n >= 1");
    // State 0 is the cell [1, 2]; state j >= 1 is the dyadic cell [2^-j, 2^(1-j)).
    // x -> 2x moves cell j onto cell j - 1 and fixes [1, 2].
    std::vector<State> image(n + 1);
    std::vector<double> mass(n + 1);
    image[0] = 0;
    mass[0] = 1.0;
    for (std::size_t j = 1; j <= n; ++j) {
      image[j] = j - 1;
      mass[j] = std::ldexp(1.0, -static_cast<int>(j));
    }
    const FiniteMap map(std::move(image));
    const FiniteMeasure mu(std::move(mass));
    auto k = koopman_matrix(map);
    GalleryInstance g{std::string(name), n, k.matrix(), NormKind::l1(mu), mu, ones(n + 1), map, k, {}};
    g.expect.spectrum = {1.0, 0.0};
    g.expect.stab_dimension = n;
    g.expect.nilpotent_on_stab = true;
    g.expect.nilpotency_index = n;
    g.expect.operator_norm = n >= 1 ? 1.5 : 1.0;
    g.expect.eventual_period = EventualPeriod{n, 1};
    return g;
  }
  throw Error(ErrorKind::UnknownName, "no gallery instance named '" + std::string(name) + "'");
}

}  // namespace uergo
