#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sketchls {

/// Operand shapes or sizes disagree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be symmetric is not (relative tolerance 1e-10 on the
/// largest entry).
struct NotSymmetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A nonpositive pivot was met while factoring a matrix that must be SPD.
struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
struct ParseError : std::runtime_error {
  std::size_t line;
  ParseError(const std::string& what, std::size_t line_no)
      : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

/// A data file with no records.
struct EmptyFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sketchls
