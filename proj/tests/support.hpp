#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "formdom/form.hpp"
#include "formdom/grid.hpp"
#include "formdom/sampling.hpp"

namespace formdom::testing {

/// Unit weights, nodes at 0, 1, ..., n-1 on a line.
inline GridPtr unit_grid(Index n) {
  RealMatrix coords(n, 1);
  for (Index i = 0; i < n; ++i) coords(i, 0) = static_cast<double>(i);
  return std::make_shared<const Grid>(RealVector::Ones(n), coords, "unit");
}

/// Weights in [0.5, 2], nodes on a line with unit spacing.
inline GridPtr random_grid(Index n, Rng& rng) {
  std::uniform_real_distribution<double> w(0.5, 2.0);
  RealVector weights(n);
  RealMatrix coords(n, 1);
  for (Index i = 0; i < n; ++i) {
    weights[i] = w(rng);
    coords(i, 0) = static_cast<double>(i);
  }
  return std::make_shared<const Grid>(weights, coords, "random");
}

inline RealMatrix random_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> g;
  RealMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline RealMatrix random_spd(Index n, Rng& rng, double shift = 0.1) {
  const RealMatrix b = random_matrix(n, n, rng);
  return b * b.transpose() + shift * RealMatrix::Identity(n, n);
}

/// Symmetric Metzler-negative matrix: off-diagonal <= 0 (a fraction exactly 0),
/// diagonal chosen so the matrix is weakly diagonally dominant plus slack.
inline RealMatrix random_metzler_spd(Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix a = RealMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i)
      if (u(rng) < 0.7) a(i, j) = a(j, i) = -2.0 * u(rng);
  for (Index i = 0; i < n; ++i) a(i, i) = -a.row(i).sum() + u(rng);
  return a;
}

inline ComplexVector random_vector(Index n, Rng& rng, const DomainMask& mask, bool complex = true) {
  std::normal_distribution<double> g;
  ComplexVector v = ComplexVector::Zero(n);
  for (const Index x : mask.indices()) v[x] = complex ? Complex(g(rng), g(rng)) : Complex(g(rng), 0.0);
  return v;
}

inline DomainMask random_mask(Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Index> idx;
  for (Index i = 0; i < n; ++i)
    if (u(rng) < 0.7) idx.push_back(i);
  if (idx.empty()) idx.push_back(0);
  return DomainMask(n, idx);
}

/// Embeds a k x k matrix (k = mask size) into n x n on the mask.
inline RealMatrix on_mask(const DomainMask& mask, const RealMatrix& local) { return mask.extend_matrix(local); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline FormMatrix full_form(GridPtr g, const RealMatrix& a) { return FormMatrix(g, DomainMask::all(g->size()), a); }

struct RandomPair {
  FormMatrix a;
  FormMatrix ahat;
};

// Dominated pairs are built entrywise from the criterion; the others break
// exactly one inequality by a visible margin or shrink the ideal.
inline RandomPair random_pair(Rng& rng, bool dominated) {
  std::uniform_int_distribution<int> size(2, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const Index n = size(rng);
    const auto g = random_grid(n, rng);
    const RealMatrix ahat = random_metzler_spd(n, rng);
    RealMatrix a = ahat;
    for (Index q = 0; q < n; ++q)
      for (Index p = q + 1; p < n; ++p) {
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        a(p, q) = a(q, p) = sign * unit(rng) * std::abs(ahat(p, q));
      }
    for (Index p = 0; p < n; ++p) a(p, p) += unit(rng);
    FormMatrix fhat = full_form(g, ahat);
    if (!dominated) {
      std::uniform_int_distribution<Index> node(0, n - 1);
      const Index p = node(rng);
      Index q = node(rng);
      while (q == p) q = node(rng);
      const int mode = static_cast<int>(unit(rng) * 3);
      if (mode == 0) {
        a(p, p) = ahat(p, p) - 0.3 - unit(rng);
      } else if (mode == 1) {
        const double m = std::abs(ahat(p, q)) + 0.3 + unit(rng);
        a(p, q) = a(q, p) = unit(rng) < 0.5 ? m : -m;
        a(p, p) += m;
        a(q, q) += m;
      } else {
        // a keeps the full mask while ahat loses node p.
        std::vector<Index> keep;
        for (Index i = 0; i < n; ++i)
          if (i != p) keep.push_back(i);
        const DomainMask small(n, keep);
        fhat = FormMatrix(g, small, small.extend_matrix(RealMatrix(small.restrict_matrix(ahat))));
      }
    }
    FormMatrix fa = full_form(g, a);
    if (is_accretive(fa)) return {fa, fhat};
  }
}

}  // namespace formdom::testing
