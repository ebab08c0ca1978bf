#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "formdom/error.hpp"

namespace formdom {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Relative slack used when comparing internode distances against a range.
/// Coordinates such as i*h are not exactly representable, so |x_{i+1}-x_i|
/// may exceed h by a few ulps.
inline constexpr double kDistanceSlack = 1e-12;

/// A finite measure space: nodes with strictly positive weights and spatial
/// coordinates (one row per node).
class Grid {
 public:
  Grid(RealVector weights, RealMatrix coords, std::string name = "grid")
      : weights_(std::move(weights)), coords_(std::move(coords)), name_(std::move(name)) {
    require(weights_.size() >= 1, ErrorKind::BadConfig, "grid needs at least one node");
    require(coords_.rows() == weights_.size(), ErrorKind::DimensionMismatch,
            "grid coords have " + std::to_string(coords_.rows()) + " rows for " +
                std::to_string(weights_.size()) + " nodes");
    for (Index i = 0; i < weights_.size(); ++i) {
      require(std::isfinite(weights_[i]) && weights_[i] > 0.0, ErrorKind::BadConfig,
              "grid weight at node " + std::to_string(i) + " is not strictly positive");
    }
  }

  Index size() const noexcept { return weights_.size(); }
  const RealVector& weights() const noexcept { return weights_; }
  double weight(Index i) const { return weights_[i]; }
  const RealMatrix& coords() const noexcept { return coords_; }
  const std::string& name() const noexcept { return name_; }
  double total_mass() const { return weights_.sum(); }

  double distance(Index p, Index q) const { return (coords_.row(p) - coords_.row(q)).norm(); }

  /// Smallest nonzero distance between two nodes; zero for a one-node grid.
  double min_positive_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (Index p = 0; p < size(); ++p)
      for (Index q = p + 1; q < size(); ++q) {
        const double d = distance(p, q);
        if (d > 0.0) best = std::min(best, d);
      }
    return std::isfinite(best) ? best : 0.0;
  }

  /// Range used for grid-scale locality when the caller gives none.
  double default_locality_range() const { return 1.5 * min_positive_distance(); }

  /// True when dist(p,q) lies beyond r, with kDistanceSlack absorbing rounding.
  bool beyond_range(Index p, Index q, double r) const {
    return distance(p, q) > r + kDistanceSlack * std::max(1.0, r);
  }

  bool same_as(const Grid& other) const {
    return this == &other || (size() == other.size() && weights_ == other.weights_ &&
                              coords_ == other.coords_);
  }

 private:
  RealVector weights_;
  RealMatrix coords_;
  std::string name_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline void require_same_grid(const Grid& a, const Grid& b) {
  require(a.same_as(b), ErrorKind::GridMismatch,
          "objects live on different grids ('" + a.name() + "' vs '" + b.name() + "')");
}

/// The support S of a coordinate-subspace form domain {u : u = 0 off S}.
class DomainMask {
 public:
  DomainMask(Index grid_size, std::vector<Index> support) : member_(grid_size, false) {
    require(grid_size >= 1, ErrorKind::BadConfig, "mask needs a nonempty grid");
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    require(!support.empty(), ErrorKind::BadConfig, "domain mask must be nonempty");
    for (const Index i : support) {
      require(i >= 0 && i < grid_size, ErrorKind::BadConfig,
              "mask index " + std::to_string(i) + " out of range");
      member_[static_cast<std::size_t>(i)] = true;
    }
    support_ = std::move(support);
  }

  static DomainMask all(Index grid_size) {
    std::vector<Index> idx(static_cast<std::size_t>(grid_size));
    for (Index i = 0; i < grid_size; ++i) idx[static_cast<std::size_t>(i)] = i;
    return DomainMask(grid_size, std::move(idx));
  }

  /// All nodes except the first and last (1-D Dirichlet constraint).
  static DomainMask interior(Index grid_size) {
    require(grid_size >= 3, ErrorKind::BadConfig, "interior mask needs at least 3 nodes");
    std::vector<Index> idx;
    for (Index i = 1; i + 1 < grid_size; ++i) idx.push_back(i);
    return DomainMask(grid_size, std::move(idx));
  }

  Index grid_size() const noexcept { return static_cast<Index>(member_.size()); }
  Index size() const noexcept { return static_cast<Index>(support_.size()); }
  bool contains(Index i) const {
    return i >= 0 && i < grid_size() && member_[static_cast<std::size_t>(i)];
  }
  std::span<const Index> indices() const noexcept { return support_; }
  bool is_full() const noexcept { return size() == grid_size(); }

  /// First node of this mask that the other mask lacks, if any.
  std::optional<Index> first_not_in(const DomainMask& other) const {
    for (const Index i : support_)
      if (!other.contains(i)) return i;
    return std::nullopt;
  }

  bool is_subset_of(const DomainMask& other) const {
    return grid_size() == other.grid_size() && !first_not_in(other).has_value();
  }

  bool operator==(const DomainMask& other) const { return member_ == other.member_; }

  /// Restriction: full coordinates -> mask coordinates.
  template <typename Vec>
  auto restrict_vector(const Vec& full) const {
    Eigen::Matrix<typename Vec::Scalar, Eigen::Dynamic, 1> out(size());
    for (Index k = 0; k < size(); ++k) out[k] = full[support_[static_cast<std::size_t>(k)]];
    return out;
  }

  /// Extension by zero: mask coordinates -> full coordinates.
  template <typename Vec>
  auto extend_vector(const Vec& local) const {
    Eigen::Matrix<typename Vec::Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<typename Vec::Scalar, Eigen::Dynamic, 1>::Zero(grid_size());
    for (Index k = 0; k < size(); ++k) out[support_[static_cast<std::size_t>(k)]] = local[k];
    return out;
  }

  template <typename Mat>
  auto restrict_matrix(const Mat& full) const {
    Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(size(), size());
    for (Index j = 0; j < size(); ++j)
      for (Index i = 0; i < size(); ++i)
        out(i, j) = full(support_[static_cast<std::size_t>(i)], support_[static_cast<std::size_t>(j)]);
    return out;
  }

  template <typename Mat>
  auto extend_matrix(const Mat& local) const {
    using Out = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Out out = Out::Zero(grid_size(), grid_size());
    for (Index j = 0; j < size(); ++j)
      for (Index i = 0; i < size(); ++i)
        out(support_[static_cast<std::size_t>(i)], support_[static_cast<std::size_t>(j)]) = local(i, j);
    return out;
  }

 private:
  std::vector<bool> member_;
  std::vector<Index> support_;
};

/// A function on the grid, i.e. an element of L^2_mu.
class FunctionVec {
 public:
  FunctionVec(GridPtr grid, ComplexVector values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(grid_ != nullptr, ErrorKind::BadConfig, "function needs a grid");
    require(values_.size() == grid_->size(), ErrorKind::DimensionMismatch,
            "function has " + std::to_string(values_.size()) + " values on a grid of " +
                std::to_string(grid_->size()) + " nodes");
  }

  template <typename Derived>
  FunctionVec(GridPtr grid, const Eigen::MatrixBase<Derived>& values)
      : FunctionVec(std::move(grid), ComplexVector(values.template cast<Complex>())) {}

  static FunctionVec constant(GridPtr grid, Complex value) {
    const Index n = grid->size();
    return FunctionVec(std::move(grid), ComplexVector(ComplexVector::Constant(n, value)));
  }

  static FunctionVec indicator(GridPtr grid, Index node) {
    ComplexVector v = ComplexVector::Zero(grid->size());
    v[node] = 1.0;
    return FunctionVec(std::move(grid), std::move(v));
  }

  const Grid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const ComplexVector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  Complex operator[](Index i) const { return values_[i]; }

  FunctionVec modulus() const { return FunctionVec(grid_, RealVector(values_.cwiseAbs())); }

  /// Index of the first nonzero entry off the mask, if any.
  std::optional<Index> first_violation(const DomainMask& mask) const {
    for (Index i = 0; i < size(); ++i)
      if (values_[i] != Complex(0.0) && !mask.contains(i)) return i;
    return std::nullopt;
  }

 private:
  GridPtr grid_;
  ComplexVector values_;
};

}  // namespace formdom
