#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "formdom/error.hpp"
#include "formdom/form.hpp"
#include "formdom/grid.hpp"
#include "formdom/sampling.hpp"

namespace formdom {

/// Off-diagonal threshold of the discrete first Beurling-Deny criterion.
inline constexpr double kMetzlerTol = 1e-12;

/// Matrix of T(t) in the pointwise basis, zero outside the form domain.
struct KernelMatrix {
  double time = 0.0;
  ComplexMatrix entries;

  RealMatrix real() const { return entries.real(); }
  Index size() const noexcept { return entries.rows(); }
};

/// Spectral factorization of the symmetrized generator L_s = M^{-1/2} A M^{-1/2}
/// on the mask. The generator itself is L = M^{-1} A; T(t) = exp(-tL) on S,
/// extended by zero elsewhere.
class SemigroupEvaluator {
 public:
  explicit SemigroupEvaluator(FormMatrix form) : form_(std::move(form)) {
    require(form_.is_hermitian(), ErrorKind::NotHermitian, "semigroup needs a Hermitian form");
    require(is_accretive(form_), ErrorKind::NotAccretive, "semigroup needs an accretive form");

    const DomainMask& mask = form_.mask();
    const RealVector mu = mask.restrict_vector(form_.grid().weights());
    sqrt_mass_ = mu.cwiseSqrt();
    inv_sqrt_mass_ = sqrt_mass_.cwiseInverse();

    const ComplexMatrix local = mask.restrict_matrix(form_.coeffs());
    const ComplexMatrix sym = inv_sqrt_mass_.asDiagonal() * local * inv_sqrt_mass_.asDiagonal();
    if (form_.has_real_coeffs()) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym.real());
      eigenvalues_ = eig.eigenvalues();
      eigenvectors_ = eig.eigenvectors().cast<Complex>();
    } else {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
      eigenvalues_ = eig.eigenvalues();
      eigenvectors_ = eig.eigenvectors();
    }

    const double radius = eigenvalues_.cwiseAbs().maxCoeff();
    require(eigenvalues_.minCoeff() >= -kAccretiveTol * radius, ErrorKind::NotAccretive,
            "symmetrized generator has a negative eigenvalue");
    const ComplexMatrix rebuilt =
        eigenvectors_ * eigenvalues_.cast<Complex>().asDiagonal() * eigenvectors_.adjoint();
    const double sym_norm = sym.norm();
    require((sym - rebuilt).norm() <= 1e-10 * std::max(sym_norm, 1e-300) || sym_norm == 0.0,
            ErrorKind::SolverDiverged, "spectral factorization reconstruction error too large");
    verify_operator_identity();
  }

  const FormMatrix& form() const noexcept { return form_; }
  const Grid& grid() const noexcept { return form_.grid(); }
  const DomainMask& mask() const noexcept { return form_.mask(); }
  Index size() const noexcept { return form_.size(); }

  /// Ascending eigenvalues of L (equal to those of L_s).
  const RealVector& eigenvalues() const noexcept { return eigenvalues_; }
  /// Orthonormal eigenvectors of L_s, in mask coordinates.
  const ComplexMatrix& eigenvectors() const noexcept { return eigenvectors_; }

  /// L = M^{-1} A on the mask, extended by zero.
  ComplexMatrix generator() const {
    const DomainMask& mask = form_.mask();
    const ComplexMatrix local = mask.restrict_matrix(form_.coeffs());
    const RealVector inv_mu = sqrt_mass_.cwiseAbs2().cwiseInverse();
    return mask.extend_matrix(ComplexMatrix(inv_mu.asDiagonal() * local));
  }

  KernelMatrix kernel(double t) const {
    require(t >= 0.0, ErrorKind::NegativeTime, "kernel at negative time " + std::to_string(t));
    return {t, form_.mask().extend_matrix(local_kernel(eigenvalues_.unaryExpr(
                   [t](double lambda) { return std::exp(-t * lambda); })))};
  }

  /// lim_{t->inf} T(t): projector onto ker L (eigenvalues below tol * spectral radius).
  KernelMatrix limit_projector(double tol = 1e-10) const {
    const double cutoff = tol * std::max(1.0, eigenvalues_.cwiseAbs().maxCoeff());
    return {std::numeric_limits<double>::infinity(),
            form_.mask().extend_matrix(local_kernel(
                eigenvalues_.unaryExpr([cutoff](double lambda) { return lambda <= cutoff ? 1.0 : 0.0; })))};
  }

  FunctionVec evolve(double t, const FunctionVec& u) const {
    require(u.size() == size(), ErrorKind::DimensionMismatch, "evolve: function length differs from grid size");
    require(t >= 0.0, ErrorKind::NegativeTime, "evolve at negative time " + std::to_string(t));
    const DomainMask& mask = form_.mask();
    const ComplexVector local = mask.restrict_vector(u.values());
    const RealVector decay = eigenvalues_.unaryExpr([t](double lambda) { return std::exp(-t * lambda); });
    const ComplexVector evolved =
        inv_sqrt_mass_.cwiseProduct(eigenvectors_ * decay.cwiseProduct(eigenvectors_.adjoint() *
                                                                       sqrt_mass_.cwiseProduct(local)).eval());
    return FunctionVec(u.grid_ptr(), ComplexVector(mask.extend_vector(evolved)));
  }

 private:
  ComplexMatrix local_kernel(const RealVector& spectral_factor) const {
    return inv_sqrt_mass_.asDiagonal() * eigenvectors_ * spectral_factor.asDiagonal() *
           eigenvectors_.adjoint() * sqrt_mass_.asDiagonal();
  }

  /// a(u, v) = <Lu, v>_{L^2_mu} on 20 seeded random pairs from the domain.
  void verify_operator_identity() const {
    Rng rng = substream(0x5eed, "semigroup.operator-identity");
    std::normal_distribution<double> normal;
    const DomainMask& mask = form_.mask();
    const ComplexMatrix gen = generator();
    for (int trial = 0; trial < 20; ++trial) {
      ComplexVector u = ComplexVector::Zero(size());
      ComplexVector v = ComplexVector::Zero(size());
      for (const Index x : mask.indices()) {
        u[x] = Complex(normal(rng), normal(rng));
        v[x] = Complex(normal(rng), normal(rng));
      }
      const Complex lhs = v.dot(form_.coeffs() * u);
      const ComplexVector lu = gen * u;
      Complex rhs = 0.0;
      for (Index x = 0; x < size(); ++x) rhs += grid().weight(x) * lu[x] * std::conj(v[x]);
      const double scale = std::max(1.0, form_.coeffs().norm() * u.norm() * v.norm());
      require(std::abs(lhs - rhs) <= 1e-9 * scale, ErrorKind::SolverDiverged,
              "operator associated with the form does not reproduce it");
    }
  }

  FormMatrix form_;
  RealVector sqrt_mass_;
  RealVector inv_sqrt_mass_;
  RealVector eigenvalues_;
  ComplexMatrix eigenvectors_;
};

inline SemigroupEvaluator make_evaluator(const FormMatrix& f) { return SemigroupEvaluator(f); }

inline KernelMatrix kernel(const SemigroupEvaluator& ev, double t) { return ev.kernel(t); }

inline FunctionVec evolve(const SemigroupEvaluator& ev, double t, const FunctionVec& u) {
  return ev.evolve(t, u);
}

struct PositivityCheck {
  bool holds = true;
  double time = 0.0;
  double min_entry = 0.0;
  Index row = 0;
  Index col = 0;
};

/// Smallest real part of the kernel and where it sits.
inline PositivityCheck min_entry_of(const KernelMatrix& k, double tol) {
  PositivityCheck out;
  out.time = k.time;
  out.min_entry = std::numeric_limits<double>::infinity();
  double worst_imag = 0.0;
  for (Index q = 0; q < k.size(); ++q)
    for (Index p = 0; p < k.size(); ++p) {
      const Complex e = k.entries(p, q);
      worst_imag = std::max(worst_imag, std::abs(e.imag()));
      if (e.real() < out.min_entry) {
        out.min_entry = e.real();
        out.row = p;
        out.col = q;
      }
    }
  out.holds = out.min_entry >= -tol && worst_imag <= tol;
  return out;
}

inline PositivityCheck is_positive_at(const SemigroupEvaluator& ev, double t, double tol) {
  return min_entry_of(ev.kernel(t), tol);
}

/// Discrete first Beurling-Deny criterion: the real form generates a positive
/// semigroup iff every off-diagonal entry inside the mask is <= 0.
inline bool is_positivity_preserving_generator(const FormMatrix& f) {
  require(is_real_form(f), ErrorKind::NotRealForm, "positivity criterion needs a real form");
  const auto idx = f.mask().indices();
  for (const Index q : idx)
    for (const Index p : idx)
      if (p != q && f.coeffs()(p, q).real() > kMetzlerTol) return false;
  return true;
}

/// Smallest sampled t0 such that T(t) is entrywise >= -tol for every sampled
/// t in [t0, t_max]. Absent when the last sample up to t_max is not positive.
inline std::optional<double> find_positivity_time(const SemigroupEvaluator& ev, double t_max,
                                                  std::span<const double> times, double tol) {
  require(!times.empty(), ErrorKind::EmptyTimeGrid, "positivity scan needs sample times");
  require(t_max > 0.0, ErrorKind::BadConfig, "t_max must be positive");
  require(std::is_sorted(times.begin(), times.end()), ErrorKind::BadConfig, "time grid must be sorted");
  std::optional<double> t0;
  for (auto it = times.rbegin(); it != times.rend(); ++it) {
    if (*it > t_max) continue;
    if (!is_positive_at(ev, *it, tol).holds) break;
    t0 = *it;
  }
  return t0;
}

/// Minimal kernel entry at each sample time (columns t, min_entry, argmin_row, argmin_col).
inline std::vector<PositivityCheck> min_entry_series(const SemigroupEvaluator& ev, std::span<const double> times,
                                                     double tol) {
  std::vector<PositivityCheck> series;
  series.reserve(times.size());
  for (const double t : times) series.push_back(is_positive_at(ev, t, tol));
  return series;
}

/// n points log-spaced in [lo, hi], endpoints included.
inline std::vector<double> log_spaced_times(double lo, double hi, int n) {
  require(lo > 0.0 && hi >= lo && n >= 1, ErrorKind::BadConfig, "bad log-spaced time grid");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    t[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo)));
  }
  t.back() = hi;
  return t;
}

inline std::vector<double> linear_times(double lo, double hi, int n) {
  require(lo >= 0.0 && hi >= lo && n >= 1, ErrorKind::BadConfig, "bad linear time grid");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    t[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return t;
}

}  // namespace formdom
