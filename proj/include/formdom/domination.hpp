#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "formdom/error.hpp"
#include "formdom/form.hpp"
#include "formdom/sampling.hpp"
#include "formdom/semigroup.hpp"

namespace formdom {

enum class DominationMethod { FormCriterion, MatrixCriterion, Sampled };

constexpr std::string_view to_string(DominationMethod m) {
  switch (m) {
    case DominationMethod::FormCriterion: return "form-criterion";
    case DominationMethod::MatrixCriterion: return "matrix-criterion";
    case DominationMethod::Sampled: return "sampled";
  }
  return "unknown";
}

struct DominationWitness {
  Index row = 0;
  Index col = 0;
  std::optional<double> time;
  double violation = 0.0;
};

/// Outcome of a domination test |T(t)u| <= That(t)|u|.
/// holds == false implies a witness or a failed ideal inclusion.
struct DominationVerdict {
  bool holds = false;
  DominationMethod method = DominationMethod::Sampled;
  std::optional<DominationWitness> witness;
  bool ideal_ok = false;
  std::vector<double> times;
};

inline std::vector<double> default_domination_times() { return log_spaced_times(1e-3, 10.0, 50); }

namespace detail {

/// Entrywise |K(t)| <= Khat(t) + tol at each sampled time; keeps the worst violation.
inline DominationVerdict compare_kernels(const SemigroupEvaluator& low, const SemigroupEvaluator& high,
                                         std::span<const double> times, double tol) {
  require_same_grid(low.grid(), high.grid());
  require(!times.empty(), ErrorKind::EmptyTimeGrid, "sampled domination needs sample times");
  DominationVerdict verdict;
  verdict.method = DominationMethod::Sampled;
  verdict.ideal_ok = low.mask().is_subset_of(high.mask());
  verdict.times.assign(times.begin(), times.end());
  double worst = 0.0;
  for (const double t : times) {
    const ComplexMatrix k = low.kernel(t).entries;
    const ComplexMatrix khat = high.kernel(t).entries;
    for (Index q = 0; q < k.cols(); ++q)
      for (Index p = 0; p < k.rows(); ++p) {
        const double excess = std::abs(k(p, q)) - khat(p, q).real() - tol;
        if (excess > worst) {
          worst = excess;
          verdict.witness = DominationWitness{p, q, t, excess + tol};
        }
      }
  }
  verdict.holds = !verdict.witness.has_value();
  return verdict;
}

inline void require_positive_dominator(const SemigroupEvaluator& high, std::span<const double> times, double tol) {
  if (is_real_form(high.form())) {
    require(is_positivity_preserving_generator(high.form()), ErrorKind::DominatorNotPositive,
            "dominating form has a positive off-diagonal coefficient");
    return;
  }
  for (const double t : times)
    require(is_positive_at(high, t, tol).holds, ErrorKind::DominatorNotPositive,
            "dominating kernel is not positive at t = " + std::to_string(t));
}

}  // namespace detail

/// Sampled kernel domination; That must generate a positive semigroup.
inline DominationVerdict check_domination_sampled(const SemigroupEvaluator& t_low, const SemigroupEvaluator& t_high,
                                                  std::span<const double> times, double tol) {
  require_same_grid(t_low.grid(), t_high.grid());
  detail::require_positive_dominator(t_high, times, tol);
  return detail::compare_kernels(t_low, t_high, times, tol);
}

/// Exact criterion for real symmetric forms with mask domains:
/// S_a within S_ahat, |A_pq| <= -Ahat_pq (p != q) and A_pp >= Ahat_pp on S_a.
inline DominationVerdict check_domination_form(const FormMatrix& a, const FormMatrix& ahat) {
  require_same_grid(a.grid(), ahat.grid());
  require(is_real_form(a) && is_real_form(ahat), ErrorKind::NotRealForm,
          "matrix domination criterion needs real forms");
  require(a.is_hermitian() && ahat.is_hermitian(), ErrorKind::NotHermitian,
          "matrix domination criterion needs symmetric forms");
  require(is_accretive(a) && is_accretive(ahat), ErrorKind::NotAccretive,
          "matrix domination criterion needs accretive forms");
  require(is_positivity_preserving_generator(ahat), ErrorKind::DominatorNotPositive,
          "dominating form has a positive off-diagonal coefficient");

  DominationVerdict verdict;
  verdict.method = DominationMethod::MatrixCriterion;
  const IdealCheck ideal = ideal_check(a, ahat);
  verdict.ideal_ok = ideal.holds;
  if (!ideal.holds) {
    verdict.witness = DominationWitness{*ideal.witness, *ideal.witness, std::nullopt, 1.0};
    return verdict;
  }
  const RealMatrix A = a.real_coeffs();
  const RealMatrix Ahat = ahat.real_coeffs();
  double worst = 0.0;
  for (const Index q : a.mask().indices())
    for (const Index p : a.mask().indices()) {
      const double excess = p == q ? Ahat(p, p) - A(p, p) : std::abs(A(p, q)) + Ahat(p, q);
      if (excess > worst) {
        worst = excess;
        verdict.witness = DominationWitness{p, q, std::nullopt, excess};
      }
    }
  verdict.holds = !verdict.witness.has_value();
  return verdict;
}

struct OuhabazCheck {
  bool holds = true;
  bool ideal_ok = true;
  int samples = 0;
  std::uint64_t seed = 0;
  /// Smallest observed Re a(u,v) - ahat(|u|,|v|), relative to the pair's magnitude.
  double worst_relative_slack = std::numeric_limits<double>::infinity();
  std::optional<std::pair<ComplexVector, ComplexVector>> witness;
};

/// Monte-Carlo test of ahat(|u|,|v|) <= Re a(u,v) over pairs with u conj(v) >= 0.
/// Works for complex Hermitian a; the dominator must be real and positive.
inline OuhabazCheck check_ouhabaz_sampled(const FormMatrix& a, const FormMatrix& ahat, int num_samples,
                                          std::uint64_t seed) {
  require_same_grid(a.grid(), ahat.grid());
  require(is_real_form(ahat), ErrorKind::NotRealForm, "dominating form must be real");
  require(is_positivity_preserving_generator(ahat), ErrorKind::DominatorNotPositive,
          "dominating form has a positive off-diagonal coefficient");
  OuhabazCheck out;
  out.seed = seed;
  if (!ideal_check(a, ahat).holds) {
    out.holds = false;
    out.ideal_ok = false;
    return out;
  }
  const ComplexMatrix& A = a.coeffs();
  const ComplexMatrix& Ahat = ahat.coeffs();
  const RealMatrix magnitude = A.cwiseAbs() + Ahat.cwiseAbs();
  AdmissiblePairSampler sampler(a.mask(), substream(seed, "domination.ouhabaz"));
  for (int s = 0; s < num_samples; ++s) {
    auto [u, v] = sampler.next();
    const RealVector au = u.cwiseAbs();
    const RealVector av = v.cwiseAbs();
    const double lhs = av.dot(Ahat.real() * au);
    const double rhs = v.dot(A * u).real();
    const double scale = av.dot(magnitude * au);
    const double slack = rhs - lhs;
    const double relative = scale > 0.0 ? slack / scale : 0.0;
    out.worst_relative_slack = std::min(out.worst_relative_slack, relative);
    ++out.samples;
    if (slack < -1e-10 * std::max(1.0, scale)) {
      out.holds = false;
      out.witness = std::make_pair(std::move(u), std::move(v));
      break;
    }
  }
  return out;
}

struct SandwichCheck {
  bool holds = false;
  DominationVerdict lower;  // low dominated by middle
  DominationVerdict upper;  // middle dominated by high
  bool middle_positive = false;
};

/// Tlow <= S <= Thigh in the domination order at every sampled time. When this
/// holds S must be positive; a non-positive S raises TheoremViolation.
inline SandwichCheck check_sandwich(const SemigroupEvaluator& t_low, const SemigroupEvaluator& middle,
                                    const SemigroupEvaluator& t_high, std::span<const double> times, double tol) {
  require_same_grid(t_low.grid(), middle.grid());
  require_same_grid(middle.grid(), t_high.grid());
  detail::require_positive_dominator(t_high, times, tol);
  SandwichCheck out;
  out.lower = detail::compare_kernels(t_low, middle, times, tol);
  out.upper = detail::compare_kernels(middle, t_high, times, tol);
  out.holds = out.lower.holds && out.upper.holds;
  out.middle_positive = true;
  for (const double t : times) out.middle_positive = out.middle_positive && is_positive_at(middle, t, tol).holds;
  if (out.holds && !out.middle_positive)
    throw Error(ErrorKind::TheoremViolation, "sandwiched semigroup is not positive");
  return out;
}

/// Domination by a form local at range r, together with positivity of T,
/// forces a to be local at range r. Returns true or raises.
inline bool locality_propagation_check(const FormMatrix& a, const FormMatrix& ahat, double r) {
  require(is_real_form(a), ErrorKind::PreconditionsNotMet, "form must be real");
  require(is_positivity_preserving_generator(a), ErrorKind::PreconditionsNotMet,
          "semigroup of the dominated form is not positive");
  require(check_domination_form(a, ahat).holds, ErrorKind::PreconditionsNotMet, "domination does not hold");
  require(is_local_at_range(ahat, r), ErrorKind::PreconditionsNotMet, "dominating form is not local at range");
  if (!is_local_at_range(a, r))
    throw Error(ErrorKind::TheoremViolation, "dominated positive form is not local at range " + std::to_string(r));
  return true;
}

/// A local real form on a mask domain (always a sublattice) generates a
/// positive semigroup. Returns true or raises.
inline bool locality_implies_positivity_check(const FormMatrix& a) {
  require(is_local_at_range(a, 0.0), ErrorKind::NotLocal, "form is not local");
  if (!is_positivity_preserving_generator(a))
    throw Error(ErrorKind::TheoremViolation, "local form fails the first Beurling-Deny criterion");
  return true;
}

}  // namespace formdom
