#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formdom/error.hpp"
#include "formdom/form.hpp"
#include "formdom/grid.hpp"
#include "formdom/representation.hpp"

namespace formdom {

using NodePair = std::pair<Index, Index>;

struct SolverParams {
  int max_iters = 20000;
  double step_size = 1.0;  // ADMM penalty
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
};

/// min ||G^{1/2} W G^{1/2}||_* over real W with W_xy >= 1 on the target set.
/// All indices are mask coordinates (0..k-1).
struct CapacityProblem {
  RealMatrix gram;
  RealVector mass_weights;
  std::vector<NodePair> target;
  SolverParams solver;

  Index size() const noexcept { return gram.rows(); }

  CapacityProblem with_target(std::vector<NodePair> pairs) const {
    CapacityProblem p = *this;
    p.target = std::move(pairs);
    return p;
  }

  /// (mu x mu)(B).
  double product_mass() const {
    double m = 0.0;
    for (const auto& [x, y] : target) m += mass_weights[x] * mass_weights[y];
    return m;
  }
};

struct CapacityResult {
  double value = 0.0;          // objective of the certificate: an upper bound on cap
  double lower_bound = 0.0;    // dual certificate value
  RealMatrix certificate;      // feasible W
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

namespace detail {

inline void validate_problem(const CapacityProblem& p) {
  const Index k = p.gram.rows();
  require(k >= 1 && p.gram.cols() == k, ErrorKind::DimensionMismatch, "capacity gram matrix must be square");
  require(p.mass_weights.size() == k, ErrorKind::DimensionMismatch, "capacity mass weights have wrong length");
  require(p.solver.max_iters > 0 && p.solver.step_size > 0.0 && p.solver.primal_tol > 0.0 && p.solver.dual_tol > 0.0,
          ErrorKind::BadConfig, "capacity solver parameters must be positive");
  for (const auto& [x, y] : p.target)
    require(x >= 0 && x < k && y >= 0 && y < k, ErrorKind::BadConfig,
            "capacity target pair (" + std::to_string(x) + "," + std::to_string(y) + ") lies outside the mask");
}

struct SymmetricRoot {
  RealMatrix basis;
  RealVector eigenvalues;
  RealMatrix root;
  RealMatrix inverse_root;
};

inline SymmetricRoot symmetric_root(const RealMatrix& g) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(g);
  require(eig.eigenvalues().minCoeff() > 0.0, ErrorKind::BadConfig, "capacity gram matrix is not positive definite");
  SymmetricRoot r;
  r.basis = eig.eigenvectors();
  r.eigenvalues = eig.eigenvalues();
  r.root = r.basis * r.eigenvalues.cwiseSqrt().asDiagonal() * r.basis.transpose();
  r.inverse_root = r.basis * r.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * r.basis.transpose();
  return r;
}

inline double nuclear_norm(const RealMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(m).singularValues().sum();
}

inline double operator_norm(const RealMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<RealMatrix>(m).singularValues()(0);
}

/// Singular-value soft-thresholding: prox of threshold * ||.||_*.
inline RealMatrix shrink_singular_values(const RealMatrix& m, double threshold) {
  Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector s = (svd.singularValues().array() - threshold).max(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// Power of two near the gram diagonal; dividing by it is exact, which
/// makes the solver path invariant under G -> 4^k G.
inline double power_of_two_scale(const RealMatrix& g) {
  const double d = g.diagonal().cwiseAbs().maxCoeff();
  return d > 0.0 ? std::exp2(std::round(std::log2(d))) : 1.0;
}

}  // namespace detail

/// ||w||_{D(a) (x)_pi D(a)} = ||G^{1/2} W G^{1/2}||_*.
inline double projective_norm(const RealMatrix& gram, const RealMatrix& w) {
  const auto root = detail::symmetric_root(gram);
  return detail::nuclear_norm(root.root * w * root.root);
}

/// Optimal decomposition W = sum_i u_i v_i^T with sum ||u_i||_G ||v_i||_G equal
/// to the projective norm, read off the SVD of G^{1/2} W G^{1/2}.
inline std::vector<std::pair<RealVector, RealVector>> optimal_decomposition(const RealMatrix& gram,
                                                                           const RealMatrix& w) {
  const auto root = detail::symmetric_root(gram);
  Eigen::JacobiSVD<RealMatrix> svd(root.root * w * root.root, Eigen::ComputeThinU | Eigen::ComputeThinV);
  std::vector<std::pair<RealVector, RealVector>> terms;
  for (Index i = 0; i < svd.singularValues().size(); ++i) {
    const double s = svd.singularValues()(i);
    if (s == 0.0) continue;
    terms.emplace_back(RealVector(std::sqrt(s) * root.inverse_root * svd.matrixU().col(i)),
                       RealVector(std::sqrt(s) * root.inverse_root * svd.matrixV().col(i)));
  }
  return terms;
}

/// Capacity problem for a form: gram = Re(Herm A) + M on the mask, target
/// given in full-grid node indices (must lie in S x S).
inline CapacityProblem make_capacity_problem(const FormMatrix& f, std::span<const NodePair> target_full,
                                             SolverParams solver = {}) {
  CapacityProblem p;
  p.gram = gram_matrix(f).real();
  p.mass_weights = f.mask().restrict_vector(f.grid().weights());
  p.solver = solver;
  std::vector<Index> local(static_cast<std::size_t>(f.size()), -1);
  const auto idx = f.mask().indices();
  for (std::size_t k = 0; k < idx.size(); ++k) local[static_cast<std::size_t>(idx[k])] = static_cast<Index>(k);
  for (const auto& [x, y] : target_full) {
    require(f.mask().contains(x) && f.mask().contains(y), ErrorKind::BadConfig,
            "capacity target pair (" + std::to_string(x) + "," + std::to_string(y) + ") lies outside the form domain");
    p.target.emplace_back(local[static_cast<std::size_t>(x)], local[static_cast<std::size_t>(y)]);
  }
  return p;
}

/// Solves the capacity problem by ADMM on the splitting Z = G^{1/2} W G^{1/2},
/// X = W: singular-value soft-thresholding for Z, projection onto
/// {X_B >= 1} for X, and an exact W solve in the eigenbasis of G. The
/// returned certificate is always feasible, so value is an upper bound on
/// cap(B) even without convergence; lower_bound comes from a scaled dual point.
inline CapacityResult capacity(const CapacityProblem& p) {
  detail::validate_problem(p);
  const Index k = p.size();
  CapacityResult out;
  out.certificate = RealMatrix::Zero(k, k);
  if (p.target.empty()) {
    out.converged = true;
    return out;
  }

  const double scale = detail::power_of_two_scale(p.gram);
  const auto root = detail::symmetric_root(p.gram / scale);
  const RealMatrix& h = root.root;
  const RealMatrix& q = root.basis;
  const RealVector& d = root.eigenvalues;
  RealMatrix denom(k, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < k; ++i) denom(i, j) = d[i] * d[j] + 1.0;

  auto project = [&](RealMatrix m) {
    for (const auto& [x, y] : p.target) m(x, y) = std::max(m(x, y), 1.0);
    return m;
  };
  {
    RealMatrix ones = RealMatrix::Ones(k, k);
    const RealMatrix projected = project(ones);
    require(projected == ones, ErrorKind::InfeasibleTarget, "all-ones tensor must be feasible");
  }

  const double rho = p.solver.step_size;
  RealMatrix x = project(RealMatrix::Zero(k, k));
  RealMatrix w = x;
  RealMatrix z = h * w * h;
  RealMatrix u1 = RealMatrix::Zero(k, k);
  RealMatrix u2 = RealMatrix::Zero(k, k);

  double best_upper = detail::nuclear_norm(h * x * h);
  RealMatrix best_x = x;
  double best_lower = 0.0;

  // Any W with W_B > 0 becomes feasible after division by min_B W.
  auto consider = [&](const RealMatrix& cand) {
    const double upper = detail::nuclear_norm(h * cand * h);
    if (upper < best_upper) {
      best_upper = upper;
      best_x = cand;
    }
  };
  auto consider_scaled = [&](const RealMatrix& cand) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : p.target) m = std::min(m, cand(i, j));
    if (m > 0.0 && std::isfinite(m)) consider(project(cand / m));
  };

  auto dual_bound = [&](const RealMatrix& y1) {
    const RealMatrix full = h * y1 * h;
    RealMatrix lambda = RealMatrix::Zero(k, k);
    for (const auto& [i, j] : p.target) lambda(i, j) = std::max(full(i, j), 0.0);
    const double spectral = detail::operator_norm(root.inverse_root * lambda * root.inverse_root);
    return lambda.sum() / std::max(1.0, spectral);
  };

  for (int it = 1; it <= p.solver.max_iters; ++it) {
    const RealMatrix rhs = h * (z - u1) * h + (x - u2);
    w = q * ((q.transpose() * rhs * q).cwiseQuotient(denom)) * q.transpose();
    const RealMatrix hwh = h * w * h;
    const RealMatrix z_old = z;
    const RealMatrix x_old = x;
    z = detail::shrink_singular_values(hwh + u1, 1.0 / rho);
    x = project(w + u2);
    u1 += hwh - z;
    u2 += w - x;

    const double primal = std::sqrt((hwh - z).squaredNorm() + (w - x).squaredNorm());
    const double dual = rho * (h * (z - z_old) * h + (x - x_old)).norm();
    require(std::isfinite(primal) && std::isfinite(dual), ErrorKind::SolverDiverged,
            "capacity iteration produced non-finite residuals");
    out.iterations = it;
    out.primal_residual = primal;
    out.dual_residual = dual;

    if (it % 10 == 0 || it == p.solver.max_iters) {
      consider(x);
      consider_scaled(w);
      consider_scaled(root.inverse_root * z * root.inverse_root);
      best_lower = std::max(best_lower, dual_bound(rho * u1));
      const double gap = (best_upper - best_lower) * scale;
      if (gap <= p.solver.dual_tol * std::max(1.0, best_upper * scale)) {
        out.converged = true;
        break;
      }
    }
  }
  out.value = best_upper * scale;
  out.lower_bound = best_lower * scale;
  out.certificate = std::move(best_x);
  return out;
}

inline bool is_polar(const CapacityProblem& p, double tol) { return capacity(p).value <= tol; }

namespace detail {

inline std::vector<NodePair> set_union(std::vector<NodePair> a, const std::vector<NodePair>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

inline bool is_subset(std::vector<NodePair> a, std::vector<NodePair> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace detail

struct SubadditivityCheck {
  double cap_a = 0.0;
  double cap_b = 0.0;
  double cap_union = 0.0;
  bool subadditive = false;  // cap(A u B) <= cap(A) + cap(B) + slack
  bool monotone = false;     // cap(A), cap(B) <= cap(A u B) + slack
  bool holds() const noexcept { return subadditive && monotone; }
};

/// Subadditivity on A u B, plus monotonicity of both parts against the union.
inline SubadditivityCheck check_subadditivity(const CapacityProblem& pa, const CapacityProblem& pb,
                                              double slack = 1e-5) {
  require(pa.gram == pb.gram && pa.mass_weights == pb.mass_weights, ErrorKind::GridMismatch,
          "subadditivity needs problems on the same form");
  SubadditivityCheck out;
  out.cap_a = capacity(pa).value;
  out.cap_b = capacity(pb).value;
  out.cap_union = capacity(pa.with_target(detail::set_union(pa.target, pb.target))).value;
  out.subadditive = out.cap_union <= out.cap_a + out.cap_b + slack;
  out.monotone = out.cap_a <= out.cap_union + slack && out.cap_b <= out.cap_union + slack;
  return out;
}

/// cap(A) <= cap(B) for A within B.
inline bool check_monotone(const CapacityProblem& pa, const CapacityProblem& pb, double slack = 1e-5) {
  require(detail::is_subset(pa.target, pb.target), ErrorKind::PreconditionsNotMet, "monotonicity needs A within B");
  return capacity(pa).value <= capacity(pb).value + slack;
}

/// ||M^{1/2} G^{-1/2}||^2 mu(S): with W >= 1 on B,
/// m(B) <= sqrt(m(B)) ||W||_{L^2} <= sqrt(m(B)) ||M^{1/2}G^{-1/2}||^2 ||W||_pi.
inline double measure_bound_constant(const CapacityProblem& p) {
  const auto root = detail::symmetric_root(p.gram);
  const double embed = detail::operator_norm(p.mass_weights.cwiseSqrt().asDiagonal() * root.inverse_root);
  return embed * embed * p.mass_weights.sum();
}

struct MeasureBoundCheck {
  double product_mass = 0.0;
  double capacity = 0.0;
  double constant = 0.0;  // the embedding constant C
  double ratio = 0.0;     // product_mass / capacity, the smallest C valid for this B
  bool ok = false;
};

/// (mu x mu)(B) <= C cap(B).
inline MeasureBoundCheck check_measure_bound(const CapacityProblem& p) {
  MeasureBoundCheck out;
  out.product_mass = p.product_mass();
  out.capacity = capacity(p).value;
  out.constant = measure_bound_constant(p);
  out.ratio = out.capacity > 0.0 ? out.product_mass / out.capacity : 0.0;
  out.ok = out.product_mass <= out.constant * out.capacity + p.solver.dual_tol * std::max(1.0, out.capacity);
  return out;
}

struct ChebyshevCheck {
  std::vector<NodePair> superlevel;
  double capacity = 0.0;
  double norm = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/// cap{|w| > lambda} <= 2 ||w||_pi / lambda, w in mask coordinates.
inline ChebyshevCheck check_chebyshev(const CapacityProblem& template_problem, const RealMatrix& w, double lambda) {
  require(lambda > 0.0, ErrorKind::BadConfig, "Chebyshev level must be positive");
  require(w.rows() == template_problem.size() && w.cols() == template_problem.size(), ErrorKind::DimensionMismatch,
          "tensor coefficient matrix has wrong size");
  ChebyshevCheck out;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (std::abs(w(i, j)) > lambda) out.superlevel.emplace_back(i, j);
  out.capacity = capacity(template_problem.with_target(out.superlevel)).value;
  out.norm = projective_norm(template_problem.gram, w);
  out.bound = 2.0 * out.norm / lambda;
  out.ok = out.capacity <= out.bound + template_problem.solver.dual_tol * std::max(1.0, out.bound);
  return out;
}

/// Continuity constant of b_nu on D(a): ||G^{-1/2} N G^{-1/2}||_op with N the
/// masses restricted to mask coordinates.
inline double nu_continuity_constant(const ProductMeasure& nu, const DomainMask& mask, const RealMatrix& gram) {
  const auto root = detail::symmetric_root(gram);
  const RealMatrix local = mask.restrict_matrix(nu.dense());
  return detail::operator_norm(root.inverse_root * local * root.inverse_root);
}

struct AbsContinuityCheck {
  double constant = 0.0;
  std::vector<double> nu_mass;
  std::vector<double> capacity;
  bool ok = true;
  std::optional<std::size_t> first_failure;
};

/// nu(B) <= C cap(B) for each sampled B (mask coordinates).
inline AbsContinuityCheck check_nu_abs_continuity(const ProductMeasure& nu, const DomainMask& mask,
                                                  const CapacityProblem& template_problem,
                                                  std::span<const std::vector<NodePair>> sets, double constant,
                                                  double tol = 1e-6) {
  require(mask.size() == template_problem.size(), ErrorKind::DimensionMismatch, "mask does not match capacity problem");
  AbsContinuityCheck out;
  out.constant = constant;
  const RealMatrix local = mask.restrict_matrix(nu.dense());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    double mass = 0.0;
    for (const auto& [x, y] : sets[s]) mass += local(x, y);
    const double cap = mass == 0.0 && sets[s].empty() ? 0.0 : capacity(template_problem.with_target(sets[s])).value;
    out.nu_mass.push_back(mass);
    out.capacity.push_back(cap);
    if (mass > constant * cap + tol && out.ok) {
      out.ok = false;
      out.first_failure = s;
    }
  }
  return out;
}

}  // namespace formdom
