#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "formdom/scenarios.hpp"
#include "formdom/semigroup.hpp"
#include "support.hpp"

using namespace formdom;
using namespace formdom::testing;

namespace {

// Operator norm of K on L^2_mu: ||M^{1/2} K M^{-1/2}||_2.
double l2mu_norm(const Grid& g, const ComplexMatrix& k) {
  const RealVector s = g.weights().cwiseSqrt();
  const ComplexMatrix c = s.asDiagonal() * k * s.cwiseInverse().asDiagonal();
  return Eigen::JacobiSVD<ComplexMatrix>(c).singularValues()(0);
}

}  // namespace

TEST(Evaluator, ZeroFormIsIdentity) {
  const auto g = unit_grid(4);
  const SemigroupEvaluator ev(full_form(g, RealMatrix::Zero(4, 4)));
  EXPECT_TRUE(ev.eigenvalues().isZero());
  for (const double t : {0.0, 0.7, 10.0}) EXPECT_TRUE(ev.kernel(t).entries.isApprox(ComplexMatrix::Identity(4, 4)));
}

TEST(Evaluator, MassMatrixGivesScalarDecay) {
  Rng rng = substream(10, "mass");
  const auto g = random_grid(5, rng);
  const SemigroupEvaluator ev(full_form(g, g->weights().asDiagonal().toDenseMatrix()));
  EXPECT_TRUE(ev.generator().isApprox(ComplexMatrix::Identity(5, 5), 1e-14));
  const auto k = ev.kernel(2.0);
  EXPECT_TRUE(k.entries.isApprox(std::exp(-2.0) * ComplexMatrix::Identity(5, 5), 1e-12));
}

TEST(Evaluator, DirichletEigenvaluesMatchClosedForm) {
  for (const int n : {5, 17, 64}) {
    ScenarioConfig cfg;
    cfg.n = n;
    const SemigroupEvaluator ev(dirichlet_form_1d(cfg));
    const double h = cfg.spacing();
    const int m = n - 2;
    ASSERT_EQ(ev.eigenvalues().size(), m);
    for (int k = 1; k <= m; ++k) {
      const double exact = 2.0 / (h * h) * (1.0 - std::cos(k * std::numbers::pi / (m + 1)));
      EXPECT_NEAR(ev.eigenvalues()[k - 1], exact, 1e-9 * exact) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Evaluator, RejectsNonHermitianAndNonAccretive) {
  const auto g = unit_grid(2);
  RealMatrix skew(2, 2);
  skew << 1, 1, 0, 1;
  try {
    SemigroupEvaluator ev(full_form(g, skew));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotHermitian);
  }
  try {
    SemigroupEvaluator ev(full_form(g, -RealMatrix::Identity(2, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAccretive);
  }
}

TEST(Kernel, IdentityAtZeroOnMask) {
  ScenarioConfig cfg;
  cfg.n = 7;
  const SemigroupEvaluator ev(dirichlet_form_1d(cfg));
  const auto k = ev.kernel(0.0).entries;
  const DomainMask mask = DomainMask::interior(7);
  EXPECT_TRUE(k.isApprox(mask.extend_matrix(ComplexMatrix(ComplexMatrix::Identity(5, 5))), 1e-12));
  EXPECT_THROW(ev.kernel(-1e-3), Error);
}

TEST(Kernel, NeumannTendsToConstantProjector) {
  ScenarioConfig cfg;
  cfg.n = 16;
  const auto f = neumann_form_1d(cfg);
  const SemigroupEvaluator ev(f);
  const RealVector& mu = f.grid().weights();
  const RealMatrix projector = RealVector::Ones(16) * mu.transpose() / mu.sum();
  EXPECT_TRUE(ev.kernel(200.0).real().isApprox(projector, 1e-10));
  EXPECT_TRUE(ev.limit_projector().real().isApprox(projector, 1e-10));
}

TEST(Kernel, MatchesMatrixExponentialOfGenerator) {
  Rng rng = substream(11, "expm");
  const auto g = random_grid(6, rng);
  const DomainMask mask(6, {0, 1, 3, 4});
  const RealMatrix a = mask.extend_matrix(RealMatrix(random_spd(4, rng)));
  const SemigroupEvaluator ev(FormMatrix(g, mask, a));
  const RealMatrix l_local = mask.restrict_matrix(ev.generator().real());
  for (const double t : {0.01, 0.5, 3.0}) {
    const RealMatrix ref = mask.extend_matrix(RealMatrix((-t * l_local).exp()));
    EXPECT_LE((ev.kernel(t).real() - ref).cwiseAbs().maxCoeff(), 1e-8) << "t=" << t;
  }
}

TEST(Kernel, SemigroupLaw) {
  Rng rng = substream(12, "law");
  std::uniform_real_distribution<double> time(0.0, 3.0);
  const auto g = random_grid(5, rng);
  const SemigroupEvaluator ev(full_form(g, random_spd(5, rng)));
  for (int s = 0; s < 20; ++s) {
    const double t = time(rng), r = time(rng);
    const ComplexMatrix lhs = ev.kernel(t + r).entries;
    const ComplexMatrix rhs = ev.kernel(t).entries * ev.kernel(r).entries;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  }
}

TEST(Kernel, ComplexHermitianFormMatchesExpm) {
  Rng rng = substream(13, "complex");
  const auto g = random_grid(4, rng);
  const ComplexMatrix b = random_matrix(4, 4, rng).cast<Complex>() + Complex(0, 1) * random_matrix(4, 4, rng).cast<Complex>();
  const ComplexMatrix a = b * b.adjoint();
  const SemigroupEvaluator ev(FormMatrix(g, DomainMask::all(4), a));
  const ComplexMatrix l = g->weights().cwiseInverse().asDiagonal() * a;
  const ComplexMatrix ref = (-0.3 * l).exp();
  EXPECT_LE((ev.kernel(0.3).entries - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Evolve, Examples) {
  ScenarioConfig cfg;
  cfg.n = 32;
  const auto neumann = neumann_form_1d(cfg);
  const SemigroupEvaluator ev_n(neumann);
  const auto one = FunctionVec::constant(neumann.grid_ptr(), 1.0);
  for (const double t : {0.0, 0.1, 1.0, 10.0})
    EXPECT_LE((ev_n.evolve(t, one).values() - one.values()).cwiseAbs().maxCoeff(), 1e-10);

  const auto dirichlet = dirichlet_form_1d(cfg, neumann.grid_ptr());
  const SemigroupEvaluator ev_d(dirichlet);
  Rng rng = substream(14, "evolve");
  const FunctionVec u(neumann.grid_ptr(), random_vector(32, rng, DomainMask::all(32)));
  const FunctionVec at0 = ev_d.evolve(0.0, u);
  EXPECT_TRUE(at0.values().isApprox(dirichlet.mask().extend_vector(dirichlet.mask().restrict_vector(u.values()))));
  double previous = l2_norm(neumann.grid(), at0);
  for (const double t : {0.1, 1.0}) {
    const double now = l2_norm(neumann.grid(), ev_d.evolve(t, u));
    EXPECT_LT(now, previous);
    previous = now;
  }
}

TEST(Evolve, AgreesWithKernel) {
  Rng rng = substream(15, "evolve-kernel");
  const auto g = random_grid(6, rng);
  const SemigroupEvaluator ev(full_form(g, random_spd(6, rng)));
  const ComplexVector u = random_vector(6, rng, DomainMask::all(6));
  EXPECT_TRUE(ev.evolve(0.4, FunctionVec(g, u)).values().isApprox(ev.kernel(0.4).entries * u, 1e-10));
  EXPECT_THROW(ev.evolve(-1.0, FunctionVec(g, u)), Error);
}

TEST(Semigroup, ContractionSelfAdjointnessReality) {
  Rng rng = substream(16, "invariants");
  const auto times = log_spaced_times(1e-3, 10.0, 12);
  for (int s = 0; s < 20; ++s) {
    const auto g = random_grid(5, rng);
    const DomainMask mask = random_mask(5, rng);
    const SemigroupEvaluator ev(FormMatrix(g, mask, mask.extend_matrix(RealMatrix(random_spd(mask.size(), rng, 0.0)))));
    for (const double t : times) {
      const auto k = ev.kernel(t);
      EXPECT_LE(l2mu_norm(*g, k.entries), 1.0 + 1e-10);
      EXPECT_TRUE(k.entries.imag().isZero(0.0));
      const FunctionVec u(g, random_vector(5, rng, DomainMask::all(5)));
      const FunctionVec v(g, random_vector(5, rng, DomainMask::all(5)));
      const Complex lhs = l2_inner(*g, FunctionVec(g, ComplexVector(k.entries * u.values())), v);
      const Complex rhs = l2_inner(*g, u, FunctionVec(g, ComplexVector(k.entries * v.values())));
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Positivity, Examples) {
  ScenarioConfig cfg;
  const SemigroupEvaluator neumann(neumann_form_1d(cfg));
  EXPECT_TRUE(is_positive_at(neumann, 0.0, 1e-10).holds);
  for (const double t : log_spaced_times(1e-3, 10.0, 20)) EXPECT_TRUE(is_positive_at(neumann, t, 1e-10).holds);

  const SemigroupEvaluator nonlocal(nonlocal_boundary_form(cfg));
  const auto p = is_positive_at(nonlocal, 0.01, 1e-10);
  EXPECT_FALSE(p.holds);
  EXPECT_LT(p.min_entry, 0.0);
  // The negative entry couples the two ends, away from the corner itself.
  EXPECT_NE(p.row, p.col);
}

TEST(Positivity, GeneratorCriterionExamples) {
  const auto g = unit_grid(3);
  EXPECT_TRUE(is_positivity_preserving_generator(full_form(g, RealVector{{1, 2, 3}}.asDiagonal().toDenseMatrix())));
  ScenarioConfig cfg;
  EXPECT_TRUE(is_positivity_preserving_generator(neumann_form_1d(cfg)));
  EXPECT_TRUE(is_positivity_preserving_generator(dirichlet_form_1d(cfg)));
  EXPECT_FALSE(is_positivity_preserving_generator(nonlocal_boundary_form(cfg)));
  ComplexMatrix c = ComplexMatrix::Identity(3, 3);
  c(0, 1) = Complex(0, -1);
  c(1, 0) = Complex(0, 1);
  try {
    is_positivity_preserving_generator(FormMatrix(g, DomainMask::all(3), c));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotRealForm);
  }
}

TEST(Positivity, MetzlerCriterionMatchesSampledKernels) {
  Rng rng = substream(17, "metzler");
  const auto times = log_spaced_times(1e-3, 10.0, 50);
  int positive = 0, negative = 0;
  for (int s = 0; s < 200; ++s) {
    const auto g = random_grid(5, rng);
    RealMatrix a;
    if (s % 2 == 0) {
      a = random_metzler_spd(5, rng);
    } else {
      a = random_spd(5, rng, 0.05);
    }
    const auto f = full_form(g, a);
    const SemigroupEvaluator ev(f);
    bool sampled = true;
    for (const double t : times) sampled = sampled && is_positive_at(ev, t, 1e-9).holds;
    EXPECT_EQ(is_positivity_preserving_generator(f), sampled) << "sample " << s;
    (sampled ? positive : negative)++;
  }
  EXPECT_GT(positive, 50);
  EXPECT_GT(negative, 50);
}

TEST(PositivityTime, Examples) {
  ScenarioConfig cfg;
  const auto times = log_spaced_times(1e-3, 10.0, 200);
  const SemigroupEvaluator neumann(neumann_form_1d(cfg));
  std::vector<double> with_zero{0.0};
  with_zero.insert(with_zero.end(), times.begin(), times.end());
  EXPECT_EQ(find_positivity_time(neumann, 10.0, with_zero, 1e-10), 0.0);

  const SemigroupEvaluator nonlocal(nonlocal_boundary_form(cfg));
  const auto t0 = find_positivity_time(nonlocal, 10.0, times, 1e-10);
  ASSERT_TRUE(t0);
  EXPECT_GT(*t0, 0.0);
  EXPECT_LE(*t0, 10.0);

  // Kernel of [[1,1],[1,1]] has off-diagonal (e^{-2t} - 1)/2 < 0 for every t > 0.
  RealMatrix a(2, 2);
  a << 1, 1, 1, 1;
  const SemigroupEvaluator never(full_form(unit_grid(2), a));
  EXPECT_FALSE(find_positivity_time(never, 10.0, times, 1e-10).has_value());
  EXPECT_NEAR(never.kernel(1.0).real()(0, 1), (std::exp(-2.0) - 1.0) / 2.0, 1e-14);
}

TEST(PositivityTime, InputValidation) {
  const SemigroupEvaluator ev(full_form(unit_grid(2), RealMatrix::Identity(2, 2)));
  const std::vector<double> empty;
  try {
    find_positivity_time(ev, 1.0, empty, 1e-10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTimeGrid);
  }
  const std::vector<double> unsorted{1.0, 0.5};
  EXPECT_THROW(find_positivity_time(ev, 1.0, unsorted, 1e-10), Error);
  const std::vector<double> ok{0.5, 1.0};
  EXPECT_THROW(find_positivity_time(ev, 0.0, ok, 1e-10), Error);
  // Samples beyond t_max are ignored.
  EXPECT_EQ(find_positivity_time(ev, 0.7, ok, 1e-10), 0.5);
}

TEST(TimeGrids, EndpointsAndSpacing) {
  const auto t = log_spaced_times(1e-3, 10.0, 5);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t.front(), 1e-3);
  EXPECT_EQ(t.back(), 10.0);
  EXPECT_NEAR(t[1] / t[0], 10.0, 1e-12);
  const auto l = linear_times(0.0, 1.0, 3);
  EXPECT_EQ(l, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_THROW(log_spaced_times(0.0, 1.0, 3), Error);
  EXPECT_THROW(linear_times(1.0, 0.0, 3), Error);
}
