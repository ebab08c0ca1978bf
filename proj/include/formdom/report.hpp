#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formdom/capacity.hpp"
#include "formdom/domination.hpp"
#include "formdom/error.hpp"
#include "formdom/representation.hpp"
#include "formdom/scenarios.hpp"
#include "formdom/semigroup.hpp"

#ifndef FORMDOM_VERSION
#define FORMDOM_VERSION "0.0.0"
#endif

namespace formdom {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = FORMDOM_VERSION;

/// Writes to "<path>.tmp" and renames over path.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot rename onto '" + path.string() + "'");
  }
}

/// UTC ISO-8601 timestamp; the fixed clock pins it to the epoch.
inline std::string timestamp(bool fixed_clock) {
  if (fixed_clock) return "1970-01-01T00:00:00Z";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// JSON cannot carry inf/nan; those become null.
inline json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

template <class T>
json optional_number(const std::optional<T>& x) {
  if (!x) return nullptr;
  return number(static_cast<double>(*x));
}

inline json to_json(const DominationWitness& w) {
  return json{{"row", w.row}, {"col", w.col}, {"time", optional_number(w.time)}, {"violation", number(w.violation)}};
}

inline json to_json(const DominationVerdict& v) {
  return json{{"holds", v.holds},
              {"method", std::string(to_string(v.method))},
              {"witness", v.witness ? to_json(*v.witness) : json(nullptr)},
              {"ideal_ok", v.ideal_ok},
              {"times", v.times}};
}

inline json vector_json(const ComplexVector& v) {
  json re = json::array(), im = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    re.push_back(v[i].real());
    im.push_back(v[i].imag());
  }
  return json{{"re", re}, {"im", im}};
}

inline json vector_json(const RealVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const OuhabazCheck& c) {
  json w = nullptr;
  if (c.witness) w = json{{"u", vector_json(c.witness->first)}, {"v", vector_json(c.witness->second)}};
  return json{{"holds", c.holds},
              {"ideal_ok", c.ideal_ok},
              {"samples", c.samples},
              {"seed", c.seed},
              {"worst_relative_slack", number(c.worst_relative_slack)},
              {"witness", w}};
}

inline json to_json(const PositivityCheck& p) {
  return json{{"holds", p.holds}, {"time", p.time}, {"min_entry", number(p.min_entry)}, {"row", p.row}, {"col", p.col}};
}

inline json to_json(const LowerBoundCheck& c) {
  json w = nullptr;
  if (c.witness) w = json{{"u", vector_json(c.witness->first)}, {"v", vector_json(c.witness->second)}};
  return json{{"holds", c.holds}, {"samples", c.samples}, {"seed", c.seed}, {"gap", c.witness_gap}, {"witness", w}};
}

inline json to_json(const DominanceCheck& c) {
  json w = nullptr;
  if (c.witness) w = json{{"u", vector_json(c.witness->first)}, {"v", vector_json(c.witness->second)}};
  return json{{"holds", c.holds},
              {"samples", c.samples},
              {"seed", c.seed},
              {"value", c.value},
              {"diagonal_part", c.diagonal_part},
              {"offdiagonal_part", c.offdiagonal_part},
              {"explicit_witness", c.explicit_witness ? json(*c.explicit_witness) : json(nullptr)},
              {"witness", w}};
}

inline json to_json(const CapacityResult& r) {
  return json{{"value", r.value},
              {"lower_bound", r.lower_bound},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"primal_residual", r.primal_residual},
              {"dual_residual", r.dual_residual}};
}

inline json to_json(const EventualPositivityReport& r) {
  return json{{"lambda", r.lambda},
              {"n", r.n},
              {"t_first_negative", optional_number(r.t_first_negative)},
              {"t0_sampled", optional_number(r.t0_sampled)},
              {"sandwiched_after_t0", r.sandwiched_after_t0 ? json(*r.sandwiched_after_t0) : json(nullptr)},
              {"t_sandwich", optional_number(r.t_sandwich)}};
}

/// Columns t, min_entry, argmin_row, argmin_col.
inline std::string min_entry_csv(const std::vector<PositivityCheck>& series) {
  std::ostringstream s;
  s << "t,min_entry,argmin_row,argmin_col\n";
  s << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : series) s << p.time << ',' << p.min_entry << ',' << p.row << ',' << p.col << '\n';
  return s.str();
}

/// Envelope shared by every report.
inline json report_envelope(const std::string& command, const std::string& config_hash, std::uint64_t seed,
                            bool fixed_clock) {
  return json{{"tool", "formdom"},
              {"version", kToolVersion},
              {"command", command},
              {"config_hash", config_hash},
              {"seed", seed},
              {"timestamp", timestamp(fixed_clock)}};
}

}  // namespace formdom
