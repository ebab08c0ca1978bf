#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "formdom/domination.hpp"
#include "formdom/error.hpp"
#include "formdom/form.hpp"
#include "formdom/grid.hpp"
#include "formdom/sampling.hpp"

namespace formdom {

using SparseReal = Eigen::SparseMatrix<double>;

/// A positive measure on grid x grid, stored as masses nu_xy on node pairs
/// (against indicator functions, not densities). The domain is the form
/// domain whose functions the measure is integrated against.
class ProductMeasure {
 public:
  ProductMeasure(GridPtr grid, SparseReal entries, DomainMask domain)
      : grid_(std::move(grid)), entries_(std::move(entries)), domain_(std::move(domain)) {
    require(grid_ != nullptr, ErrorKind::BadConfig, "measure needs a grid");
    const Index n = grid_->size();
    require(entries_.rows() == n && entries_.cols() == n, ErrorKind::DimensionMismatch,
            "measure matrix size differs from grid size");
    require(domain_.grid_size() == n, ErrorKind::DimensionMismatch, "measure domain size differs from grid size");
    entries_.prune(0.0);
    entries_.makeCompressed();
    for (Index k = 0; k < entries_.outerSize(); ++k)
      for (SparseReal::InnerIterator it(entries_, k); it; ++it)
        require(std::isfinite(it.value()) && it.value() >= 0.0, ErrorKind::BadConfig,
                "measure has negative mass at (" + std::to_string(it.row()) + "," + std::to_string(it.col()) + ")");
    const SparseReal transposed = entries_.transpose();
    symmetric_ = (SparseReal(entries_ - transposed).norm() == 0.0);
  }

  ProductMeasure(GridPtr grid, SparseReal entries)
      : ProductMeasure(grid, std::move(entries), DomainMask::all(grid->size())) {}

  static ProductMeasure from_dense(GridPtr grid, const RealMatrix& masses, DomainMask domain) {
    return ProductMeasure(std::move(grid), SparseReal(masses.sparseView()), std::move(domain));
  }

  static ProductMeasure zero(GridPtr grid) {
    const Index n = grid->size();
    return ProductMeasure(std::move(grid), SparseReal(n, n));
  }

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const SparseReal& entries() const noexcept { return entries_; }
  const DomainMask& domain() const noexcept { return domain_; }
  RealMatrix dense() const { return RealMatrix(entries_); }
  bool is_symmetric() const noexcept { return symmetric_; }
  Index nonzeros() const { return entries_.nonZeros(); }
  double mass(Index x, Index y) const { return entries_.coeff(x, y); }

  /// nu(B) for a set of node pairs.
  double measure_of(std::span<const std::pair<Index, Index>> pairs) const {
    double total = 0.0;
    for (const auto& [x, y] : pairs) total += entries_.coeff(x, y);
    return total;
  }

  /// Coefficients of b_nu in the form storage convention: A_yx = nu_xy.
  RealMatrix coefficient_matrix() const { return dense().transpose(); }

 private:
  GridPtr grid_;
  SparseReal entries_;
  DomainMask domain_;
  bool symmetric_ = false;
};

/// nu_xy = Psi(1_x, 1_y) with Psi = a - ahat, for x, y in the domain of a.
/// Raises NotDominated when Psi has negative mass on an indicator pair; does
/// not otherwise check domination.
inline ProductMeasure difference_measure(const FormMatrix& a, const FormMatrix& ahat) {
  require_same_grid(a.grid(), ahat.grid());
  require(is_real_form(a) && is_real_form(ahat), ErrorKind::NotRealForm, "measure extraction needs real forms");
  require(ideal_check(a, ahat).holds, ErrorKind::NotDominated, "form domain is not an ideal of the dominating domain");
  const RealMatrix diff = a.real_coeffs() - ahat.real_coeffs();
  std::vector<Eigen::Triplet<double>> triplets;
  for (const Index x : a.mask().indices())
    for (const Index y : a.mask().indices()) {
      const double m = diff(y, x);
      require(m >= 0.0, ErrorKind::NotDominated,
              "difference form is negative on the indicator pair (" + std::to_string(x) + "," + std::to_string(y) + ")");
      if (m != 0.0) triplets.emplace_back(x, y, m);
    }
  const Index n = a.size();
  SparseReal entries(n, n);
  entries.setFromTriplets(triplets.begin(), triplets.end());
  return ProductMeasure(a.grid_ptr(), std::move(entries), a.mask());
}

/// Representation measure of a dominated pair, a = ahat + b_nu on D(a).
inline ProductMeasure extract_nu(const FormMatrix& a, const FormMatrix& ahat) {
  const DominationVerdict verdict = check_domination_form(a, ahat);
  if (!verdict.holds) {
    std::string where;
    if (verdict.witness)
      where = " (witness pair " + std::to_string(verdict.witness->row) + "," + std::to_string(verdict.witness->col) + ")";
    throw Error(ErrorKind::NotDominated, "pair is not dominated" + where);
  }
  return difference_measure(a, ahat);
}

/// (nu(B) + nu(reflected B)) / 2.
inline ProductMeasure symmetrize(const ProductMeasure& nu) {
  if (nu.is_symmetric()) return nu;
  const SparseReal transposed = nu.entries().transpose();
  SparseReal sym = (nu.entries() + transposed) * 0.5;
  return ProductMeasure(nu.grid_ptr(), std::move(sym), nu.domain());
}

/// b_nu(u, v) = sum_{x,y} nu_xy u_x conj(v_y).
inline Complex apply_nu_form(const ProductMeasure& nu, const FunctionVec& u, const FunctionVec& v) {
  require(u.size() == nu.grid().size() && v.size() == nu.grid().size(), ErrorKind::DimensionMismatch,
          "apply_nu_form: function length differs from grid size");
  Complex acc = 0.0;
  const SparseReal& e = nu.entries();
  for (Index k = 0; k < e.outerSize(); ++k)
    for (SparseReal::InnerIterator it(e, k); it; ++it) acc += it.value() * u[it.row()] * std::conj(v[it.col()]);
  return acc;
}

struct LowerBoundCheck {
  bool holds = true;
  int samples = 0;
  std::uint64_t seed = 0;
  std::optional<std::pair<ComplexVector, ComplexVector>> witness;
  std::optional<std::size_t> explicit_witness;
  double witness_gap = 0.0;
};

/// Monte-Carlo check of Re b_nu(u,v) >= ahat(|u|,|v|) - Re ahat(u,v) on
/// admissible pairs (u conj(v) >= 0) from the measure's domain. Explicit
/// witnesses are tried before random pairs.
inline LowerBoundCheck check_lower_bound(const ProductMeasure& nu, const FormMatrix& ahat, int num_samples,
                                         std::uint64_t seed,
                                         std::span<const std::pair<ComplexVector, ComplexVector>> witnesses = {}) {
  require_same_grid(nu.grid(), ahat.grid());
  require(nu.domain().is_subset_of(ahat.mask()), ErrorKind::PreconditionsNotMet,
          "measure domain is not contained in the dominating form domain");
  LowerBoundCheck out;
  out.seed = seed;
  const ComplexMatrix& Ahat = ahat.coeffs();
  const RealMatrix n_abs = nu.dense();
  const RealMatrix ahat_abs = Ahat.cwiseAbs();
  auto fails = [&](const ComplexVector& u, const ComplexVector& v) {
    const RealVector au = u.cwiseAbs();
    const RealVector av = v.cwiseAbs();
    const FunctionVec fu(nu.grid_ptr(), u);
    const FunctionVec fv(nu.grid_ptr(), v);
    const double lhs = apply_nu_form(nu, fu, fv).real();
    const double rhs = av.dot(Ahat.real() * au) - v.dot(Ahat * u).real();
    const double scale = au.dot(n_abs * av) + 2.0 * av.dot(ahat_abs * au);
    if (lhs - rhs >= -1e-10 * std::max(1.0, scale)) return false;
    out.holds = false;
    out.witness_gap = lhs - rhs;
    out.witness = std::make_pair(u, v);
    return true;
  };
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const auto& [u, v] = witnesses[i];
    require(u.size() == nu.grid().size() && v.size() == nu.grid().size(), ErrorKind::DimensionMismatch,
            "lower-bound witness has wrong length");
    for (Index x = 0; x < u.size(); ++x) {
      const Complex p = u[x] * std::conj(v[x]);
      require(p.real() >= 0.0 && p.imag() == 0.0, ErrorKind::BadConfig, "lower-bound witness violates u conj(v) >= 0");
      require((u[x] == Complex(0.0) && v[x] == Complex(0.0)) || nu.domain().contains(x), ErrorKind::SupportViolation,
              "lower-bound witness leaves the measure domain");
    }
    if (fails(u, v)) {
      out.explicit_witness = i;
      return out;
    }
  }
  AdmissiblePairSampler sampler(nu.domain(), substream(seed, "representation.lower-bound"));
  for (int s = 0; s < num_samples; ++s) {
    const auto [u, v] = sampler.next();
    ++out.samples;
    if (fails(u, v)) break;
  }
  return out;
}

struct DominanceCheck {
  bool holds = true;
  int samples = 0;
  std::uint64_t seed = 0;
  std::optional<std::pair<RealVector, RealVector>> witness;
  /// Index into the caller's explicit witnesses when one of them failed.
  std::optional<std::size_t> explicit_witness;
  double value = 0.0;
  double diagonal_part = 0.0;
  double offdiagonal_part = 0.0;
};

namespace detail {

struct DominanceSplit {
  double diagonal = 0.0;
  double offdiagonal = 0.0;
  double scale = 0.0;
};

inline DominanceSplit dominance_split(const ProductMeasure& nu, const RealVector& u, const RealVector& v) {
  DominanceSplit s;
  const SparseReal& e = nu.entries();
  for (Index k = 0; k < e.outerSize(); ++k)
    for (SparseReal::InnerIterator it(e, k); it; ++it) {
      const double term = it.value() * u[it.row()] * v[it.col()];
      (it.row() == it.col() ? s.diagonal : s.offdiagonal) += term;
      s.scale += std::abs(term);
    }
  return s;
}

}  // namespace detail

/// Monte-Carlo test of int u(x) v(y) dnu >= 0 for real u, v with uv >= 0,
/// reported as diagonal mass against off-diagonal mass. Explicit witnesses
/// are tried before random pairs.
inline DominanceCheck check_diagonal_dominance(const ProductMeasure& nu, int num_samples, std::uint64_t seed,
                                               std::span<const std::pair<RealVector, RealVector>> witnesses = {}) {
  require(nu.is_symmetric(), ErrorKind::PreconditionsNotMet, "diagonal dominance is defined for symmetric measures");
  DominanceCheck out;
  out.seed = seed;
  auto fails = [&](const RealVector& u, const RealVector& v) {
    const auto split = detail::dominance_split(nu, u, v);
    const double value = split.diagonal + split.offdiagonal;
    if (value >= -1e-10 * std::max(1.0, split.scale)) return false;
    out.holds = false;
    out.value = value;
    out.diagonal_part = split.diagonal;
    out.offdiagonal_part = split.offdiagonal;
    out.witness = std::make_pair(u, v);
    return true;
  };
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const auto& [u, v] = witnesses[i];
    require(u.size() == nu.grid().size() && v.size() == nu.grid().size(), ErrorKind::DimensionMismatch,
            "dominance witness has wrong length");
    require((u.array() * v.array() >= 0.0).all(), ErrorKind::BadConfig, "dominance witness violates uv >= 0");
    if (fails(u, v)) {
      out.explicit_witness = i;
      return out;
    }
  }
  AdmissiblePairSampler sampler(nu.domain(), substream(seed, "representation.diagonal-dominance"), false);
  for (int s = 0; s < num_samples; ++s) {
    const auto [u, v] = sampler.next();
    ++out.samples;
    if (fails(u.real(), v.real())) return out;
  }
  return out;
}

/// nu_xy = 0 whenever dist(x, y) > r; r = 0 means support on the diagonal.
inline bool support_locality(const ProductMeasure& nu, double r) {
  const SparseReal& e = nu.entries();
  for (Index k = 0; k < e.outerSize(); ++k)
    for (SparseReal::InnerIterator it(e, k); it; ++it)
      if (it.row() != it.col() && nu.grid().beyond_range(it.row(), it.col(), r)) return false;
  return true;
}

}  // namespace formdom
