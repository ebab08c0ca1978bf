#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "formdom/form.hpp"
#include "formdom/scenarios.hpp"
#include "support.hpp"

using namespace formdom;
using namespace formdom::testing;

TEST(FormMatrix, RejectsCoefficientsOffMask) {
  const auto g = unit_grid(3);
  RealMatrix a = RealMatrix::Identity(3, 3);
  try {
    FormMatrix(g, DomainMask(3, {1, 2}), a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SupportViolation);
  }
  EXPECT_THROW(FormMatrix(g, DomainMask::all(3), RealMatrix::Identity(2, 2)), Error);
  EXPECT_THROW(FormMatrix(g, DomainMask::all(4), RealMatrix::Identity(3, 3)), Error);
}

TEST(EvalForm, ZeroFormVanishes) {
  const auto g = unit_grid(4);
  Rng rng = substream(1, "zero");
  const auto f = full_form(g, RealMatrix::Zero(4, 4));
  const FunctionVec u(g, random_vector(4, rng, DomainMask::all(4)));
  const FunctionVec v(g, random_vector(4, rng, DomainMask::all(4)));
  EXPECT_EQ(eval_form(f, u, v), Complex(0.0));
}

TEST(EvalForm, HermitianDiagonalIsReal) {
  const auto g = unit_grid(3);
  ComplexMatrix a(3, 3);
  a << 2.0, Complex(0, 1), 0.0, Complex(0, -1), 3.0, Complex(1, 1), 0.0, Complex(1, -1), 1.0;
  const FormMatrix f(g, DomainMask::all(3), a);
  ASSERT_TRUE(f.is_hermitian());
  Rng rng = substream(2, "herm");
  for (int s = 0; s < 20; ++s) {
    const FunctionVec u(g, random_vector(3, rng, DomainMask::all(3)));
    EXPECT_NEAR(eval_form(f, u, u).imag(), 0.0, 1e-12);
  }
}

TEST(EvalForm, StorageConvention) {
  // a(e_q, e_p) picks A(p, q).
  const auto g = unit_grid(2);
  RealMatrix a(2, 2);
  a << 1, 2, 3, 4;
  const auto f = full_form(g, a);
  EXPECT_EQ(eval_form(f, FunctionVec::indicator(g, 1), FunctionVec::indicator(g, 0)), Complex(2.0));
  EXPECT_EQ(eval_form(f, FunctionVec::indicator(g, 0), FunctionVec::indicator(g, 1)), Complex(3.0));
  // Antilinear in the second slot.
  const FunctionVec iu(g, ComplexVector{{Complex(0, 1), 0.0}});
  EXPECT_EQ(eval_form(f, FunctionVec::indicator(g, 0), iu), Complex(0, -1));
}

TEST(EvalForm, NeumannKillsConstants) {
  ScenarioConfig cfg;
  const auto f = neumann_form_1d(cfg);
  const auto one = FunctionVec::constant(f.grid_ptr(), 1.0);
  EXPECT_NEAR(std::abs(eval_form(f, one, one)), 0.0, 1e-10);
}

TEST(EvalForm, RejectsFunctionsOutsideDomain) {
  ScenarioConfig cfg;
  cfg.n = 5;
  const auto f = dirichlet_form_1d(cfg);
  const auto one = FunctionVec::constant(f.grid_ptr(), 1.0);
  try {
    eval_form(f, one, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SupportViolation);
  }
  const auto other = unit_grid(5);
  const FunctionVec foreign(other, RealVector::Zero(5));
  EXPECT_THROW(eval_form(f, foreign, foreign), Error);
}

TEST(L2Inner, Examples) {
  const auto g = unit_grid(4);
  const FunctionVec zero(g, RealVector::Zero(4));
  EXPECT_EQ(l2_inner(*g, zero, zero), Complex(0.0));
  EXPECT_EQ(l2_inner(*g, FunctionVec::indicator(g, 2), FunctionVec::indicator(g, 2)), Complex(1.0));
  const int n = 10;
  const auto w = std::make_shared<const Grid>(RealVector::Constant(n, 1.0 / n), RealMatrix::Zero(n, 1));
  const auto one = FunctionVec::constant(w, 1.0);
  EXPECT_NEAR(l2_inner(*w, one, one).real(), w->total_mass(), 1e-15);
}

TEST(FormNorm, Examples) {
  const auto g = unit_grid(3);
  const auto zero_form = full_form(g, RealMatrix::Zero(3, 3));
  EXPECT_EQ(form_norm(zero_form, FunctionVec(g, RealVector::Zero(3))), 0.0);
  EXPECT_DOUBLE_EQ(form_norm(zero_form, FunctionVec::indicator(g, 1)), 1.0);
  ScenarioConfig cfg;
  const auto neumann = neumann_form_1d(cfg);
  EXPECT_NEAR(form_norm(neumann, FunctionVec::constant(neumann.grid_ptr(), 1.0)), 1.0, 1e-12);
}

TEST(FormNorm, RejectsNonAccretiveDirection) {
  const auto g = unit_grid(2);
  const auto f = full_form(g, -RealMatrix::Identity(2, 2));
  try {
    form_norm(f, FunctionVec::indicator(g, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotAccretive);
  }
}

TEST(GramMatrix, Examples) {
  const auto g = unit_grid(3);
  EXPECT_TRUE(gram_matrix(full_form(g, RealMatrix::Zero(3, 3))).isApprox(ComplexMatrix::Identity(3, 3)));
  const RealVector d{{0.0, 1.5, 4.0}};
  const ComplexMatrix gd = gram_matrix(full_form(g, d.asDiagonal().toDenseMatrix()));
  EXPECT_EQ(gd, ComplexMatrix((d.array() + 1.0).matrix().cast<Complex>().asDiagonal().toDenseMatrix()));

  ScenarioConfig cfg;
  cfg.n = 3;
  const auto neumann = neumann_form_1d(cfg);
  // Hand assembly: h = 1/2, stiffness [[2,-2,0],[-2,4,-2],[0,-2,2]], masses (1/4, 1/2, 1/4).
  RealMatrix expected(3, 3);
  expected << 2.25, -2, 0, -2, 4.5, -2, 0, -2, 2.25;
  EXPECT_TRUE(gram_matrix(neumann).real().isApprox(expected, 1e-14));
  EXPECT_TRUE(gram_matrix(neumann).imag().isZero());
}

TEST(GramMatrix, LivesOnMaskCoordinates) {
  ScenarioConfig cfg;
  cfg.n = 6;
  const auto d = dirichlet_form_1d(cfg);
  EXPECT_EQ(gram_matrix(d).rows(), 4);
  EXPECT_THROW(gram_matrix(full_form(unit_grid(2), -RealMatrix::Identity(2, 2))), Error);
}

TEST(Accretive, Examples) {
  const auto g = unit_grid(3);
  EXPECT_TRUE(is_accretive(full_form(g, RealMatrix::Identity(3, 3))));
  EXPECT_FALSE(is_accretive(full_form(g, -RealMatrix::Identity(3, 3))));
  for (const int n : {5, 16, 64}) {
    ScenarioConfig cfg;
    cfg.n = n;
    EXPECT_TRUE(is_accretive(dirichlet_form_1d(cfg)));
  }
}

TEST(Accretive, SkewPartIsIgnored) {
  const auto g = unit_grid(2);
  RealMatrix a(2, 2);
  a << 1, 5, -5, 1;
  EXPECT_TRUE(is_accretive(full_form(g, a)));
}

TEST(RealForm, Examples) {
  const auto g = unit_grid(2);
  EXPECT_TRUE(is_real_form(full_form(g, RealMatrix::Identity(2, 2))));
  ComplexMatrix a = ComplexMatrix::Identity(2, 2);
  a(0, 1) = Complex(0, 1);
  EXPECT_FALSE(is_real_form(FormMatrix(g, DomainMask::all(2), a)));
  ScenarioConfig cfg;
  EXPECT_TRUE(is_real_form(nonlocal_boundary_form(cfg)));
}

TEST(IdealCheck, Examples) {
  ScenarioConfig cfg;
  cfg.n = 8;
  const auto grid = interval_grid(cfg);
  const auto n = neumann_form_1d(cfg, grid);
  const auto d = dirichlet_form_1d(cfg, grid);
  EXPECT_TRUE(ideal_check(n, n).holds);
  EXPECT_TRUE(ideal_check(d, n).holds);
  const auto reversed = ideal_check(n, d);
  EXPECT_FALSE(reversed.holds);
  ASSERT_TRUE(reversed.witness);
  EXPECT_TRUE(*reversed.witness == 0 || *reversed.witness == cfg.n - 1);
}

TEST(IdealCheck, IsAPartialOrderOnMasks) {
  Rng rng = substream(3, "ideal");
  const auto g = unit_grid(7);
  for (int s = 0; s < 100; ++s) {
    const DomainMask m1 = random_mask(7, rng), m2 = random_mask(7, rng), m3 = random_mask(7, rng);
    const FormMatrix f1(g, m1, RealMatrix::Zero(7, 7));
    const FormMatrix f2(g, m2, RealMatrix::Zero(7, 7));
    const FormMatrix f3(g, m3, RealMatrix::Zero(7, 7));
    EXPECT_TRUE(ideal_check(f1, f1).holds);
    if (ideal_check(f1, f2).holds && ideal_check(f2, f3).holds) {
      EXPECT_TRUE(ideal_check(f1, f3).holds);
    }
    if (ideal_check(f1, f2).holds && ideal_check(f2, f1).holds) {
      EXPECT_TRUE(m1 == m2);
    }
  }
}

TEST(Locality, Examples) {
  const auto g = unit_grid(4);
  EXPECT_TRUE(is_local_at_range(full_form(g, RealVector{{1, 2, 3, 4}}.asDiagonal().toDenseMatrix()), 0.0));
  ScenarioConfig cfg;
  const auto neumann = neumann_form_1d(cfg);
  EXPECT_TRUE(is_local_at_range(neumann, cfg.spacing()));
  EXPECT_FALSE(is_local_at_range(neumann, 0.0));
  EXPECT_TRUE(is_local_at_range(neumann));
  const auto nonlocal = nonlocal_boundary_form(cfg);
  EXPECT_FALSE(is_local_at_range(nonlocal, 0.999));
  EXPECT_FALSE(is_local_at_range(nonlocal, 0.5));
  EXPECT_TRUE(is_local_at_range(nonlocal, 1.0));
}

TEST(Locality, MonotoneInRange) {
  Rng rng = substream(4, "locality");
  std::uniform_real_distribution<double> r(0.0, 7.0);
  for (int s = 0; s < 50; ++s) {
    RealMatrix a = random_matrix(7, 7, rng);
    for (Index i = 0; i < 7; ++i)
      for (Index j = 0; j < 7; ++j)
        if (std::abs(a(i, j)) < 0.8) a(i, j) = 0.0;
    const auto f = full_form(unit_grid(7), a);
    const double r1 = r(rng), r2 = r1 + r(rng);
    if (is_local_at_range(f, r1)) {
      EXPECT_TRUE(is_local_at_range(f, r2));
    }
  }
}

TEST(FormProperties, HermitianSymmetry) {
  Rng rng = substream(5, "hermitian");
  const auto g = random_grid(5, rng);
  for (int s = 0; s < 50; ++s) {
    const ComplexMatrix b = random_matrix(5, 5, rng).cast<Complex>() +
                            Complex(0, 1) * random_matrix(5, 5, rng).cast<Complex>();
    const FormMatrix f(g, DomainMask::all(5), ComplexMatrix(b + b.adjoint()));
    const FunctionVec u(g, random_vector(5, rng, DomainMask::all(5)));
    const FunctionVec v(g, random_vector(5, rng, DomainMask::all(5)));
    const Complex uv = eval_form(f, u, v), vu = eval_form(f, v, u);
    EXPECT_LE(std::abs(uv - std::conj(vu)), 1e-12 * std::max(1.0, std::abs(uv)));
  }
}

TEST(FormProperties, NormAndGramConsistency) {
  Rng rng = substream(6, "gram");
  for (int s = 0; s < 100; ++s) {
    const auto g = random_grid(6, rng);
    const DomainMask mask = random_mask(6, rng);
    const RealMatrix local = random_spd(mask.size(), rng, 0.0);
    const FormMatrix f(g, mask, mask.extend_matrix(local));
    const ComplexVector uv = random_vector(6, rng, mask);
    const FunctionVec u(g, uv);
    const double norm = form_norm(f, u);
    const double direct = eval_form(f, u, u).real() + l2_inner(*g, u, u).real();
    EXPECT_LE(std::abs(norm * norm - direct), 1e-12 * direct);
    const ComplexVector ul = mask.restrict_vector(uv);
    const double via_gram = ul.dot(gram_matrix(f) * ul).real();
    EXPECT_LE(std::abs(via_gram - norm * norm), 1e-10 * norm * norm);
  }
}
