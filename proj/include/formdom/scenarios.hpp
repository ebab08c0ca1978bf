#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "formdom/domination.hpp"
#include "formdom/error.hpp"
#include "formdom/form.hpp"
#include "formdom/grid.hpp"
#include "formdom/representation.hpp"
#include "formdom/semigroup.hpp"

namespace formdom {

/// Parameters of the 1-D model problems on (0, length).
struct ScenarioConfig {
  int n = 64;
  double length = 1.0;
  double lambda = 1.0;
  double robin_beta = 1.0;
  std::vector<double> times = log_spaced_times(1e-3, 10.0, 200);
  double t_max = 10.0;
  double tol = 1e-10;

  double spacing() const { return length / (n - 1); }
};

namespace detail {

inline void require_nodes(const ScenarioConfig& cfg) {
  require(cfg.n >= 3, ErrorKind::BadConfig, "scenario needs n >= 3, got " + std::to_string(cfg.n));
  require(cfg.length > 0.0 && std::isfinite(cfg.length), ErrorKind::BadConfig, "interval length must be positive");
}

inline void require_lambda(const ScenarioConfig& cfg) {
  require(cfg.lambda > 0.0 && std::isfinite(cfg.lambda), ErrorKind::BadConfig, "lambda must be a positive real");
}

}  // namespace detail

/// Uniform nodes x_i = i h on [0, length], lumped P1 mass (h/2 at the ends, h inside).
inline GridPtr interval_grid(const ScenarioConfig& cfg) {
  detail::require_nodes(cfg);
  const double h = cfg.spacing();
  RealVector weights = RealVector::Constant(cfg.n, h);
  weights[0] = weights[cfg.n - 1] = h / 2.0;
  RealMatrix coords(cfg.n, 1);
  for (int i = 0; i < cfg.n; ++i) coords(i, 0) = i * h;
  coords(cfg.n - 1, 0) = cfg.length;
  return std::make_shared<const Grid>(std::move(weights), std::move(coords),
                                      "interval[n=" + std::to_string(cfg.n) + "]");
}

/// P1 stiffness of int u' conj(v)' on all nodes: tridiagonal, off-diagonal -1/h.
inline RealMatrix stiffness_1d(const ScenarioConfig& cfg) {
  detail::require_nodes(cfg);
  const double h = cfg.spacing();
  RealMatrix a = RealMatrix::Zero(cfg.n, cfg.n);
  for (int e = 0; e + 1 < cfg.n; ++e) {
    a(e, e) += 1.0 / h;
    a(e + 1, e + 1) += 1.0 / h;
    a(e, e + 1) -= 1.0 / h;
    a(e + 1, e) -= 1.0 / h;
  }
  return a;
}

inline FormMatrix neumann_form_1d(const ScenarioConfig& cfg, GridPtr grid) {
  return FormMatrix(std::move(grid), DomainMask::all(cfg.n), stiffness_1d(cfg));
}
inline FormMatrix neumann_form_1d(const ScenarioConfig& cfg) { return neumann_form_1d(cfg, interval_grid(cfg)); }

/// Same stiffness on the interior nodes; rows and columns of the endpoints vanish.
inline FormMatrix dirichlet_form_1d(const ScenarioConfig& cfg, GridPtr grid) {
  const DomainMask mask = DomainMask::interior(cfg.n);
  RealMatrix a = stiffness_1d(cfg);
  a.row(0).setZero();
  a.col(0).setZero();
  a.row(cfg.n - 1).setZero();
  a.col(cfg.n - 1).setZero();
  return FormMatrix(std::move(grid), mask, a);
}
inline FormMatrix dirichlet_form_1d(const ScenarioConfig& cfg) { return dirichlet_form_1d(cfg, interval_grid(cfg)); }

/// Neumann stiffness plus beta u(0)conj(v(0)) + beta u(1)conj(v(1)).
inline FormMatrix robin_form_1d(const ScenarioConfig& cfg, GridPtr grid) {
  require(cfg.robin_beta >= 0.0 && std::isfinite(cfg.robin_beta), ErrorKind::BadConfig, "Robin beta must be >= 0");
  RealMatrix a = stiffness_1d(cfg);
  a(0, 0) += cfg.robin_beta;
  a(cfg.n - 1, cfg.n - 1) += cfg.robin_beta;
  return FormMatrix(std::move(grid), DomainMask::all(cfg.n), a);
}
inline FormMatrix robin_form_1d(const ScenarioConfig& cfg) { return robin_form_1d(cfg, interval_grid(cfg)); }

/// Neumann stiffness plus lambda (u(0) + u(1)) conj(v(0) + v(1)): the boundary
/// coupling matrix [[lambda, lambda], [lambda, lambda]] on the two endpoints.
/// Point values are trace functionals and carry no h-weighting.
inline FormMatrix nonlocal_boundary_form(const ScenarioConfig& cfg, GridPtr grid) {
  detail::require_lambda(cfg);
  RealMatrix a = stiffness_1d(cfg);
  const int last = cfg.n - 1;
  a(0, 0) += cfg.lambda;
  a(last, last) += cfg.lambda;
  a(0, last) += cfg.lambda;
  a(last, 0) += cfg.lambda;
  return FormMatrix(std::move(grid), DomainMask::all(cfg.n), a);
}
inline FormMatrix nonlocal_boundary_form(const ScenarioConfig& cfg) {
  return nonlocal_boundary_form(cfg, interval_grid(cfg));
}

/// Lebesgue measure on ([0,1/2] x [1/2,1]) u ([1/2,1] x [0,1/2]) discretized by
/// product quadrature: nu_xy = w_x w_y when x and y fall on opposite halves.
inline ProductMeasure remark_counterexample_measure(const ScenarioConfig& cfg, GridPtr grid) {
  detail::require_nodes(cfg);
  require(cfg.n >= 4 && cfg.n % 2 == 0, ErrorKind::BadConfig, "counterexample measure needs an even n >= 4");
  const double half = cfg.length / 2.0;
  RealMatrix masses = RealMatrix::Zero(cfg.n, cfg.n);
  for (int x = 0; x < cfg.n; ++x)
    for (int y = 0; y < cfg.n; ++y) {
      const bool x_left = grid->coords()(x, 0) <= half;
      const bool y_left = grid->coords()(y, 0) <= half;
      if (x_left != y_left) masses(x, y) = grid->weight(x) * grid->weight(y);
    }
  return ProductMeasure::from_dense(grid, masses, DomainMask::all(cfg.n));
}
inline ProductMeasure remark_counterexample_measure(const ScenarioConfig& cfg) {
  return remark_counterexample_measure(cfg, interval_grid(cfg));
}

/// +1 on [0, 1/2], -1 on (1/2, 1]: the witness against diagonal dominance.
inline RealVector step_function(const Grid& grid, double length = 1.0) {
  RealVector u(grid.size());
  for (Index i = 0; i < grid.size(); ++i) u[i] = grid.coords()(i, 0) <= length / 2.0 ? 1.0 : -1.0;
  return u;
}

struct EventualPositivityReport {
  double lambda = 0.0;
  int n = 0;
  std::optional<double> t_first_negative;
  std::optional<double> t0_sampled;
  std::vector<PositivityCheck> min_entry_series;
  /// Dirichlet <= T <= Neumann in the domination order at every sampled t >= t0.
  std::optional<bool> sandwiched_after_t0;
  /// Earliest sampled t after which the sandwich holds at every later sample.
  std::optional<double> t_sandwich;
};

namespace detail {

inline bool sandwiched_at(const SemigroupEvaluator& low, const SemigroupEvaluator& mid, const SemigroupEvaluator& high,
                          double t, double tol) {
  const std::vector<double> single{t};
  return compare_kernels(low, mid, single, tol).holds && compare_kernels(mid, high, single, tol).holds;
}

}  // namespace detail

/// Scans T(t) for the nonlocal boundary form over cfg.times up to cfg.t_max.
inline EventualPositivityReport eventual_positivity_experiment(const ScenarioConfig& cfg, const FormMatrix& form) {
  EventualPositivityReport report;
  report.lambda = cfg.lambda;
  report.n = cfg.n;
  const SemigroupEvaluator ev(form);
  std::vector<double> times;
  for (const double t : cfg.times)
    if (t <= cfg.t_max) times.push_back(t);
  require(!times.empty(), ErrorKind::EmptyTimeGrid, "no sample times up to t_max");
  report.min_entry_series = min_entry_series(ev, times, cfg.tol);
  for (const auto& s : report.min_entry_series)
    if (!s.holds) {
      report.t_first_negative = s.time;
      break;
    }
  report.t0_sampled = find_positivity_time(ev, cfg.t_max, times, cfg.tol);

  const SemigroupEvaluator dirichlet(dirichlet_form_1d(cfg, form.grid_ptr()));
  const SemigroupEvaluator neumann(neumann_form_1d(cfg, form.grid_ptr()));
  std::vector<bool> sandwiched;
  for (const double t : times) sandwiched.push_back(detail::sandwiched_at(dirichlet, ev, neumann, t, 1e-9));
  if (report.t0_sampled) {
    bool all = true;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] >= *report.t0_sampled) all = all && sandwiched[i];
    report.sandwiched_after_t0 = all;
  }
  for (std::size_t i = times.size(); i-- > 0;) {
    if (!sandwiched[i]) break;
    report.t_sandwich = times[i];
  }
  return report;
}

inline EventualPositivityReport eventual_positivity_experiment(const ScenarioConfig& cfg) {
  return eventual_positivity_experiment(cfg, nonlocal_boundary_form(cfg));
}

}  // namespace formdom
