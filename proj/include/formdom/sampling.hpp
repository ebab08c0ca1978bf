#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>

#include "formdom/grid.hpp"

namespace formdom {

/// 64-bit FNV-1a; stable across platforms, used for substream names and config hashes.
constexpr std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

/// Independent generator for a named consumer of the run seed.
inline Rng substream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

/// Draws pairs (u, v) supported in a mask with u_x conj(v_x) >= 0 at every node.
///
/// Per node a shared sign in {-1, 0, +1} and independent log-uniform magnitudes
/// are drawn; each coordinate of u and v is additionally zeroed with a
/// per-sample dead-zone probability so sparse pairs (down to single
/// indicators) appear often. Complex samples multiply both u_x and v_x by the
/// same phase, either one global phase or one per node.
class AdmissiblePairSampler {
 public:
  AdmissiblePairSampler(const DomainMask& mask, Rng rng, bool complex_phases = true)
      : mask_(mask), rng_(std::move(rng)), complex_(complex_phases) {}

  std::pair<ComplexVector, ComplexVector> next() {
    const Index n = mask_.grid_size();
    ComplexVector u = ComplexVector::Zero(n);
    ComplexVector v = ComplexVector::Zero(n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> sign(-1, 1);
    const double keep = unit(rng_);
    const bool per_node_phase = complex_ && unit(rng_) < 0.5;
    const double global_phase = complex_ ? 2.0 * std::numbers::pi * unit(rng_) : 0.0;
    for (const Index x : mask_.indices()) {
      const int s = sign(rng_);
      const double mu = std::pow(10.0, 6.0 * unit(rng_) - 3.0);
      const double mv = std::pow(10.0, 6.0 * unit(rng_) - 3.0);
      const bool keep_u = unit(rng_) < keep;
      const bool keep_v = unit(rng_) < keep;
      Complex phase = 1.0;
      if (complex_) phase = std::polar(1.0, per_node_phase ? 2.0 * std::numbers::pi * unit(rng_) : global_phase);
      if (keep_u) u[x] = phase * static_cast<double>(s) * mu;
      if (keep_v) v[x] = phase * static_cast<double>(s) * mv;
    }
    return {std::move(u), std::move(v)};
  }

 private:
  DomainMask mask_;
  Rng rng_;
  bool complex_;
};

}  // namespace formdom
