#pragma once

#include <algorithm>
#include <cctype>
#include <complex>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "formdom/error.hpp"
#include "formdom/grid.hpp"

namespace formdom::mm {

enum class Field { Real, Integer, Complex, Pattern };
enum class Symmetry { General, Symmetric, SkewSymmetric, Hermitian };

struct MarketMatrix {
  ComplexMatrix values;
  Field field = Field::Real;
  Symmetry symmetry = Symmetry::General;
  bool is_complex() const noexcept { return field == Field::Complex; }
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] inline void fail(const std::string& source, long line, const std::string& message) {
  throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": " + message);
}

inline bool blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '%';
}

}  // namespace detail

/// Reads a Matrix Market file (coordinate or array; real, integer, complex or
/// pattern; general, symmetric, skew-symmetric or hermitian). Symmetric
/// storage is expanded. Malformed input raises ParseError with source:line.
inline MarketMatrix read(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) detail::fail(source, 1, "empty Matrix Market input");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") detail::fail(source, lineno, "missing %%MatrixMarket banner");
  if (detail::lower(object) != "matrix") detail::fail(source, lineno, "only 'matrix' objects are supported");
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);

  MarketMatrix out;
  if (field == "real") out.field = Field::Real;
  else if (field == "integer") out.field = Field::Integer;
  else if (field == "complex") out.field = Field::Complex;
  else if (field == "pattern") out.field = Field::Pattern;
  else detail::fail(source, lineno, "unknown field '" + field + "'");

  if (symmetry == "general") out.symmetry = Symmetry::General;
  else if (symmetry == "symmetric") out.symmetry = Symmetry::Symmetric;
  else if (symmetry == "skew-symmetric") out.symmetry = Symmetry::SkewSymmetric;
  else if (symmetry == "hermitian") out.symmetry = Symmetry::Hermitian;
  else detail::fail(source, lineno, "unknown symmetry '" + symmetry + "'");
  if (out.symmetry == Symmetry::Hermitian && out.field != Field::Complex)
    detail::fail(source, lineno, "hermitian symmetry requires a complex field");
  if (format != "coordinate" && format != "array") detail::fail(source, lineno, "unknown format '" + format + "'");
  if (format == "array" && out.field == Field::Pattern) detail::fail(source, lineno, "array format cannot be pattern");

  do {
    if (!std::getline(in, line)) detail::fail(source, lineno + 1, "missing size line");
    ++lineno;
  } while (detail::blank_or_comment(line));

  long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream size_line(line);
    auto check_dims = [&] {
      if (rows <= 0 || cols <= 0) detail::fail(source, lineno, "nonpositive matrix dimensions");
    };
    if (format == "coordinate") {
      if (!(size_line >> rows >> cols >> entries)) detail::fail(source, lineno, "expected 'rows cols entries'");
      check_dims();
      if (entries < 0) detail::fail(source, lineno, "negative entry count");
    } else {
      if (!(size_line >> rows >> cols)) detail::fail(source, lineno, "expected 'rows cols'");
      check_dims();
      entries = rows * cols;
      if (out.symmetry != Symmetry::General) {
        if (rows != cols) detail::fail(source, lineno, "symmetric array must be square");
        entries = out.symmetry == Symmetry::SkewSymmetric ? rows * (rows - 1) / 2 : rows * (rows + 1) / 2;
      }
    }
    if (rows > 1'000'000 || cols > 1'000'000 || rows * cols > 100'000'000)
      detail::fail(source, lineno, "matrix too large for dense storage");
  }
  out.values = ComplexMatrix::Zero(rows, cols);

  auto place = [&](long r, long c, Complex v) {
    out.values(r, c) = v;
    if (r == c) return;
    switch (out.symmetry) {
      case Symmetry::General: break;
      case Symmetry::Symmetric: out.values(c, r) = v; break;
      case Symmetry::SkewSymmetric: out.values(c, r) = -v; break;
      case Symmetry::Hermitian: out.values(c, r) = std::conj(v); break;
    }
  };

  long seen = 0;
  long array_pos = 0;
  while (seen < entries) {
    if (!std::getline(in, line))
      detail::fail(source, lineno + 1, "expected " + std::to_string(entries) + " entries, found " + std::to_string(seen));
    ++lineno;
    if (detail::blank_or_comment(line)) continue;
    std::istringstream entry(line);
    long r = 0, c = 0;
    if (format == "coordinate") {
      if (!(entry >> r >> c)) detail::fail(source, lineno, "expected 'row col' indices");
      if (r < 1 || r > rows || c < 1 || c > cols) detail::fail(source, lineno, "index out of range");
      --r;
      --c;
    } else {
      // Column-major; symmetric arrays store the lower triangle only.
      if (out.symmetry == Symmetry::General) {
        r = array_pos % rows;
        c = array_pos / rows;
      } else {
        long col = 0, remaining = array_pos;
        const long skip = out.symmetry == Symmetry::SkewSymmetric ? 1 : 0;
        while (remaining >= rows - col - skip) {
          remaining -= rows - col - skip;
          ++col;
        }
        c = col;
        r = col + skip + remaining;
      }
      ++array_pos;
    }
    if (format == "coordinate" && out.symmetry != Symmetry::General && r < c)
      detail::fail(source, lineno, "symmetric storage must list the lower triangle");
    Complex v = 1.0;
    if (out.field == Field::Complex) {
      double re = 0.0, im = 0.0;
      if (!(entry >> re >> im)) detail::fail(source, lineno, "expected 'real imag' value");
      v = Complex(re, im);
    } else if (out.field != Field::Pattern) {
      double re = 0.0;
      if (!(entry >> re)) detail::fail(source, lineno, "expected a numeric value");
      v = re;
    }
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) detail::fail(source, lineno, "non-finite value");
    std::string extra;
    if (entry >> extra) detail::fail(source, lineno, "trailing token '" + extra + "'");
    place(r, c, v);
    ++seen;
  }
  return out;
}

inline MarketMatrix read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open Matrix Market file '" + path + "'");
  return read(in, path);
}

namespace detail {

inline void write_value(std::ostream& out, Complex v, bool complex_field) {
  out << v.real();
  if (complex_field) out << ' ' << v.imag();
}

}  // namespace detail

/// Coordinate output with full round-trip precision. Symmetric/hermitian
/// modes store the lower triangle; they require the matrix to have that symmetry.
inline void write(std::ostream& out, const ComplexMatrix& m, Symmetry symmetry = Symmetry::General,
                  const std::string& comment = {}) {
  const bool complex_field = !(m.imag().array() == 0.0).all() || symmetry == Symmetry::Hermitian;
  if (symmetry == Symmetry::Symmetric)
    require(m == m.transpose(), ErrorKind::BadConfig, "matrix is not symmetric");
  if (symmetry == Symmetry::Hermitian)
    require(m == m.adjoint(), ErrorKind::BadConfig, "matrix is not hermitian");
  require(symmetry != Symmetry::SkewSymmetric, ErrorKind::BadConfig, "skew-symmetric output is not supported");
  const bool lower_only = symmetry != Symmetry::General;

  long count = 0;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = lower_only ? c : 0; r < m.rows(); ++r)
      if (m(r, c) != Complex(0.0)) ++count;

  out << "%%MatrixMarket matrix coordinate " << (complex_field ? "complex" : "real") << ' '
      << (symmetry == Symmetry::General ? "general" : symmetry == Symmetry::Symmetric ? "symmetric" : "hermitian")
      << '\n';
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string l;
    while (std::getline(lines, l)) out << "% " << l << '\n';
  }
  out << m.rows() << ' ' << m.cols() << ' ' << count << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = lower_only ? c : 0; r < m.rows(); ++r)
      if (m(r, c) != Complex(0.0)) {
        out << r + 1 << ' ' << c + 1 << ' ';
        detail::write_value(out, m(r, c), complex_field);
        out << '\n';
      }
}

inline void write(std::ostream& out, const RealMatrix& m, Symmetry symmetry = Symmetry::General,
                  const std::string& comment = {}) {
  write(out, ComplexMatrix(m.cast<Complex>()), symmetry, comment);
}

inline std::string to_string(const ComplexMatrix& m, Symmetry symmetry = Symmetry::General,
                             const std::string& comment = {}) {
  std::ostringstream s;
  write(s, m, symmetry, comment);
  return s.str();
}

inline std::string to_string(const RealMatrix& m, Symmetry symmetry = Symmetry::General,
                             const std::string& comment = {}) {
  return to_string(ComplexMatrix(m.cast<Complex>()), symmetry, comment);
}

}  // namespace formdom::mm
