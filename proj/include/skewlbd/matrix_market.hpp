#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skewlbd/pencil.hpp"

namespace skewlbd {

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

[[noreturn]] inline void mm_fail(const std::string& path, long line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

/// Reads a Matrix Market file (coordinate or array format; general,
/// symmetric or skew-symmetric storage).  Symmetry qualifiers are expanded
/// explicitly.  Complex and pattern fields are rejected.
inline SpMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);

  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) detail::mm_fail(path, 1, "empty file");
  ++lineno;

  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix")
    detail::mm_fail(path, lineno, "malformed MatrixMarket header: \"" + line + "\"");
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (format != "coordinate" && format != "array")
    detail::mm_fail(path, lineno, "unsupported format \"" + format + "\"");
  if (field != "real" && field != "integer")
    detail::mm_fail(path, lineno, "unsupported field type \"" + field + "\"");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
    detail::mm_fail(path, lineno, "unsupported symmetry \"" + symmetry + "\"");

  // skip comments and blank lines up to the size line
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    break;
  }
  std::istringstream size_ss(line);
  long rows = -1, cols = -1, nnz = -1;
  if (format == "coordinate") {
    if (!(size_ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      detail::mm_fail(path, lineno, "malformed size line");
  } else {
    if (!(size_ss >> rows >> cols) || rows < 0 || cols < 0)
      detail::mm_fail(path, lineno, "malformed size line");
  }

  std::vector<Eigen::Triplet<double>> trip;
  if (format == "coordinate") {
    trip.reserve(static_cast<std::size_t>(2 * nnz));
    long seen = 0;
    while (seen < nnz) {
      if (!std::getline(in, line)) detail::mm_fail(path, lineno + 1, "unexpected end of file");
      ++lineno;
      std::size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '%') continue;
      std::istringstream es(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v)) detail::mm_fail(path, lineno, "malformed entry");
      if (i < 1 || i > rows || j < 1 || j > cols) detail::mm_fail(path, lineno, "entry index out of range");
      ++seen;
      trip.emplace_back(i - 1, j - 1, v);
      if (i != j) {
        if (symmetry == "symmetric") trip.emplace_back(j - 1, i - 1, v);
        if (symmetry == "skew-symmetric") trip.emplace_back(j - 1, i - 1, -v);
      } else if (symmetry == "skew-symmetric" && v != 0.0) {
        detail::mm_fail(path, lineno, "nonzero diagonal in skew-symmetric matrix");
      }
    }
  } else {
    // array format: dense column-major; symmetric storage gives the lower triangle
    auto entries_expected = [&]() -> long {
      if (symmetry == "general") return rows * cols;
      if (symmetry == "symmetric") return rows * (rows + 1) / 2;
      return rows * (rows - 1) / 2;  // skew-symmetric, diagonal omitted
    }();
    long idx = 0;
    long i = (symmetry == "skew-symmetric") ? 1 : 0, j = 0;
    while (idx < entries_expected) {
      if (!std::getline(in, line)) detail::mm_fail(path, lineno + 1, "unexpected end of file");
      ++lineno;
      std::size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '%') continue;
      std::istringstream es(line);
      double v = 0.0;
      while (es >> v) {
        if (idx >= entries_expected) detail::mm_fail(path, lineno, "too many entries");
        if (v != 0.0) trip.emplace_back(i, j, v);
        if (i != j) {
          if (symmetry == "symmetric" && v != 0.0) trip.emplace_back(j, i, v);
          if (symmetry == "skew-symmetric" && v != 0.0) trip.emplace_back(j, i, -v);
        }
        ++idx;
        ++i;
        if (i == rows) {
          ++j;
          i = (symmetry == "general") ? 0 : (symmetry == "symmetric" ? j : j + 1);
        }
      }
    }
  }

  SpMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// Reads an n-by-1 Matrix Market array file as a dense vector.
inline Vector read_matrix_market_vector(const std::string& path) {
  SpMatrix m = read_matrix_market(path);
  if (m.cols() != 1) throw std::runtime_error(path + ": expected a single-column vector file");
  return Vector(m);
}

/// Writes a dense matrix as a Matrix Market array file (real general).
inline void write_matrix_market_array(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  out.precision(17);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) out << m(i, j) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace skewlbd
