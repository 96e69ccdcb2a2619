#pragma once

// Internal helpers shared by the JSON readers/writers. Writing is manual so
// float formatting stays pinned at 12 significant digits; reading goes
// through nlohmann::json.

#include <ostream>
#include <string>

#include "json.hpp"

#include "stratlca/format.hpp"
#include "stratlca/types.hpp"

namespace stratlca::jsonutil {

inline void write_vector(std::ostream& out, const Vector& v) {
  out << '[';
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ", ";
    out << to_sig12(v[i]);
  }
  out << ']';
}

/// Matrix as a list of rows.
inline void write_matrix_rows(std::ostream& out, const Matrix& m) {
  out << '[';
  for (Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out << ", ";
    out << '[';
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ", ";
      out << to_sig12(m(r, c));
    }
    out << ']';
  }
  out << ']';
}

[[noreturn]] inline void fail(const std::string& source, const std::string& what) {
  throw ParseError(source + ": " + what);
}

inline Vector parse_vector(const nlohmann::json& j, const std::string& source,
                           const std::string& key) {
  if (!j.is_array()) fail(source, "\"" + key + "\" must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(source, "\"" + key + "\" must hold numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Matrix parse_matrix_rows(const nlohmann::json& j, const std::string& source,
                                const std::string& key) {
  if (!j.is_array() || j.empty()) fail(source, "\"" + key + "\" must be a non-empty array");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      fail(source, "\"" + key + "\" rows must all have the same length");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

inline nlohmann::json parse_document(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(source, e.what());
  }
  return j;
}

template <class T>
T require(const nlohmann::json& j, const std::string& source, const std::string& key) {
  if (!j.contains(key)) fail(source, "missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(source, "bad \"" + key + "\": " + e.what());
  }
}

}  // namespace stratlca::jsonutil
