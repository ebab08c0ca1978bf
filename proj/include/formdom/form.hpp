#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "formdom/error.hpp"
#include "formdom/grid.hpp"

namespace formdom {

/// Relative PSD tolerance used by the accretivity check.
inline constexpr double kAccretiveTol = 1e-10;

/// A sesquilinear form on L^2_mu with a coordinate-mask domain.
///
/// Storage convention: a(u, v) = sum_{p,q} A(p,q) u_q conj(v_p), i.e. a(u,v) = v^* A u.
/// Rows and columns off the mask must be zero. Closedness is automatic in
/// finite dimension and is not checked.
class FormMatrix {
 public:
  FormMatrix(GridPtr grid, DomainMask mask, ComplexMatrix coeffs)
      : grid_(std::move(grid)), mask_(std::move(mask)), coeffs_(std::move(coeffs)) {
    require(grid_ != nullptr, ErrorKind::BadConfig, "form needs a grid");
    const Index n = grid_->size();
    require(coeffs_.rows() == n && coeffs_.cols() == n, ErrorKind::DimensionMismatch,
            "form matrix is " + std::to_string(coeffs_.rows()) + "x" + std::to_string(coeffs_.cols()) +
                " on a grid of " + std::to_string(n) + " nodes");
    require(mask_.grid_size() == n, ErrorKind::DimensionMismatch, "mask size differs from grid size");
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < n; ++p) {
        require(coeffs_(p, q) == Complex(0.0) || (mask_.contains(p) && mask_.contains(q)),
                ErrorKind::SupportViolation,
                "coefficient (" + std::to_string(p) + "," + std::to_string(q) + ") lies off the domain mask");
      }
    hermitian_ = coeffs_ == coeffs_.adjoint();
    real_ = (coeffs_.imag().array() == 0.0).all();
  }

  /// Accepts any real or complex Eigen expression.
  template <typename Derived>
  FormMatrix(GridPtr grid, DomainMask mask, const Eigen::MatrixBase<Derived>& coeffs)
      : FormMatrix(std::move(grid), std::move(mask), ComplexMatrix(coeffs.template cast<Complex>())) {}

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const DomainMask& mask() const noexcept { return mask_; }
  const ComplexMatrix& coeffs() const noexcept { return coeffs_; }
  RealMatrix real_coeffs() const { return coeffs_.real(); }
  Index size() const noexcept { return coeffs_.rows(); }

  /// Exact entrywise test A == A^*.
  bool is_hermitian() const noexcept { return hermitian_; }
  bool has_real_coeffs() const noexcept { return real_; }

  /// Hermitian part restricted to mask coordinates.
  ComplexMatrix hermitian_part_on_mask() const {
    const ComplexMatrix local = mask_.restrict_matrix(coeffs_);
    return (local + local.adjoint()) / 2.0;
  }

 private:
  GridPtr grid_;
  DomainMask mask_;
  ComplexMatrix coeffs_;
  bool hermitian_ = false;
  bool real_ = false;
};

namespace detail {

inline void require_in_domain(const FormMatrix& f, const FunctionVec& u, const char* which) {
  require(u.size() == f.size(), ErrorKind::DimensionMismatch,
          std::string("function ") + which + " has wrong length");
  require_same_grid(f.grid(), u.grid());
  if (const auto bad = u.first_violation(f.mask()))
    throw Error(ErrorKind::SupportViolation, std::string("function ") + which + " is nonzero at node " +
                                                 std::to_string(*bad) + " outside the form domain");
}

inline double spectral_radius_bound(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace detail

/// a(u, v) = sum_{p,q} A_{pq} u_q conj(v_p).
inline Complex eval_form(const FormMatrix& f, const FunctionVec& u, const FunctionVec& v) {
  detail::require_in_domain(f, u, "u");
  detail::require_in_domain(f, v, "v");
  return v.values().dot(f.coeffs() * u.values());
}

/// <u, v> = sum_x mu_x u_x conj(v_x).
inline Complex l2_inner(const Grid& g, const FunctionVec& u, const FunctionVec& v) {
  require(u.size() == g.size() && v.size() == g.size(), ErrorKind::DimensionMismatch,
          "l2_inner: function length differs from grid size");
  Complex acc = 0.0;
  for (Index x = 0; x < g.size(); ++x) acc += g.weight(x) * u[x] * std::conj(v[x]);
  return acc;
}

inline double l2_norm(const Grid& g, const FunctionVec& u) { return std::sqrt(l2_inner(g, u, u).real()); }

/// ||u||_{D(a)} = sqrt(Re a(u) + ||u||^2).
inline double form_norm(const FormMatrix& f, const FunctionVec& u) {
  const double energy = eval_form(f, u, u).real();
  const double mass = l2_inner(f.grid(), u, u).real();
  const double scale = detail::spectral_radius_bound(f.coeffs()) * u.values().squaredNorm();
  if (energy < -kAccretiveTol * scale)
    throw Error(ErrorKind::NotAccretive, "Re a(u) = " + std::to_string(energy) + " < 0");
  return std::sqrt(std::max(energy, 0.0) + mass);
}

/// True iff the Hermitian part of A on the mask is PSD, up to
/// kAccretiveTol times its spectral radius.
inline bool is_accretive(const FormMatrix& f) {
  const ComplexMatrix h = f.hermitian_part_on_mask();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h, Eigen::EigenvaluesOnly);
  const RealVector& lambda = eig.eigenvalues();
  const double radius = lambda.cwiseAbs().maxCoeff();
  return lambda.minCoeff() >= -kAccretiveTol * radius;
}

/// Matrix of the D(a) inner product on mask coordinates: G = Herm(A)|_S + diag(mu)|_S.
/// For real symmetric A this is Re A + M.
inline ComplexMatrix gram_matrix(const FormMatrix& f) {
  require(is_accretive(f), ErrorKind::NotAccretive, "gram_matrix needs an accretive form");
  ComplexMatrix g = f.hermitian_part_on_mask();
  const auto idx = f.mask().indices();
  for (Index k = 0; k < g.rows(); ++k) g(k, k) += f.grid().weight(idx[static_cast<std::size_t>(k)]);
  return g;
}

/// Reality of the generated semigroup; in the coordinate model this is
/// equivalent to all coefficients being real.
inline bool is_real_form(const FormMatrix& f) { return f.has_real_coeffs(); }

struct IdealCheck {
  bool holds = false;
  /// A node of S_a outside S_ahat when the inclusion fails.
  std::optional<Index> witness;
};

/// D(a) is an ideal of D(ahat); for coordinate masks this is S_a within S_ahat.
inline IdealCheck ideal_check(const FormMatrix& a, const FormMatrix& ahat) {
  require_same_grid(a.grid(), ahat.grid());
  const auto witness = a.mask().first_not_in(ahat.mask());
  return {!witness.has_value(), witness};
}

/// A_{pq} = 0 whenever dist(p, q) > r. Range 0 is exact locality (A diagonal).
inline bool is_local_at_range(const FormMatrix& f, double r) {
  const Grid& g = f.grid();
  for (Index q = 0; q < f.size(); ++q)
    for (Index p = 0; p < f.size(); ++p)
      if (f.coeffs()(p, q) != Complex(0.0) && p != q && g.beyond_range(p, q, r)) return false;
  return true;
}

inline bool is_local_at_range(const FormMatrix& f) {
  return is_local_at_range(f, f.grid().default_locality_range());
}

}  // namespace formdom
