#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sketchls/errors.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/solvers.hpp"

namespace sketchls {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class SyntheticKind {
  Ar1,     // rows ~ N(0, Sigma), Sigma_ij = 0.5^{|i-j|/divisor}
  LowRank  // X = U V^T with standard normal factors
};

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Ar1;
  std::size_t n = 0;
  std::size_t p = 0;
  double decay_exponent_divisor = 1.0;  // Ar1: 1 well-conditioned, 10 ill-conditioned
  std::size_t rank = 0;                 // LowRank only
  double noise_std = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  DenseMatrix X;
  Vec y;
  Vec beta_star;
};

/// Linear-model data y = X beta* + eps, deterministic in the seed.
///
/// Ar1 rows are generated by the AR(1) recursion x_j = phi x_{j-1} +
/// sqrt(1-phi^2) z_j with phi = 0.5^{1/divisor}, whose stationary covariance
/// is exactly 0.5^{|i-j|/divisor}. Draw order: X entries (rows in order),
/// then beta* (uniform [0,1]), then the noise.
inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.p < 1)
    throw std::invalid_argument("gen_synthetic: n and p must be positive");
  if (spec.noise_std < 0.0)
    throw std::invalid_argument("gen_synthetic: noise_std must be >= 0");

  Rng rng(spec.seed);
  SyntheticData out;
  out.X = DenseMatrix(spec.n, spec.p);

  if (spec.kind == SyntheticKind::Ar1) {
    if (!(spec.decay_exponent_divisor > 0.0))
      throw std::invalid_argument("gen_synthetic: decay divisor must be positive");
    const double phi = std::pow(0.5, 1.0 / spec.decay_exponent_divisor);
    const double innov = std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 0; i < spec.n; ++i) {
      double prev = rng.normal();
      out.X(i, 0) = prev;
      for (std::size_t j = 1; j < spec.p; ++j) {
        prev = phi * prev + innov * rng.normal();
        out.X(i, j) = prev;
      }
    }
  } else {
    if (spec.rank < 1 || spec.rank > std::min(spec.n, spec.p))
      throw std::invalid_argument("gen_synthetic: rank must lie in [1, min(n, p)]");
    DenseMatrix U(spec.n, spec.rank);
    DenseMatrix V(spec.p, spec.rank);
    for (double& x : U.data) x = rng.normal();
    for (double& x : V.data) x = rng.normal();
    detail::emap(out.X) = detail::emap(U) * detail::emap(V).transpose();
  }

  out.beta_star.resize(spec.p);
  for (double& b : out.beta_star) b = rng.uniform();
  out.y = matvec(out.X, out.beta_star);
  for (double& yi : out.y) yi += spec.noise_std * rng.normal();
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

enum class DatasetFormat { LibsvmText, DenseCsv };

struct Dataset {
  DenseMatrix X;
  Vec y;
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string strip_comment_and_cr(const std::string& line) {
  std::string s = line;
  if (const auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  return s;
}

}  // namespace detail

/// Sparse "label idx:val ..." text with 1-based indices, densified with
/// zeros; '#' starts a comment. The feature count is the largest index seen.
inline Dataset load_libsvm(std::istream& in) {
  std::vector<double> labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::strip_comment_and_cr(line);
    std::istringstream tokens(body);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank or comment-only line

    double label;
    if (!detail::parse_double(tok, label))
      throw ParseError("libsvm: bad label '" + tok + "'", line_no);
    labels.push_back(label);
    rows.emplace_back();

    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError("libsvm: bad feature token '" + tok + "'", line_no);
      double idx_val, val;
      if (!detail::parse_double(tok.substr(0, colon), idx_val) ||
          idx_val < 1.0 || idx_val != std::floor(idx_val))
        throw ParseError("libsvm: bad feature index in '" + tok + "'", line_no);
      if (!detail::parse_double(tok.substr(colon + 1), val))
        throw ParseError("libsvm: bad feature value in '" + tok + "'", line_no);
      const auto idx = static_cast<std::size_t>(idx_val);
      rows.back().emplace_back(idx, val);
      max_index = std::max(max_index, idx);
    }

    auto& entries = rows.back();
    std::sort(entries.begin(), entries.end());
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (entries[k].first == entries[k - 1].first)
        throw ParseError(
            "libsvm: duplicate feature index " + std::to_string(entries[k].first),
            line_no);
  }

  if (labels.empty()) throw EmptyFileError("libsvm: no data lines");
  Dataset out;
  out.y = std::move(labels);
  out.X = DenseMatrix(out.y.size(), max_index);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [idx, val] : rows[i]) out.X(i, idx - 1) = val;
  return out;
}

/// CSV with the response in the first column; an optional header line is
/// detected by a non-numeric first field.
inline Dataset load_dense_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::strip_comment_and_cr(line);
    if (body.empty()) continue;

    std::vector<double> fields;
    std::istringstream ss(body);
    std::string cell;
    bool bad = false;
    while (std::getline(ss, cell, ',')) {
      // trim surrounding blanks
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      double v;
      if (!detail::parse_double(cell, v)) {
        bad = true;
        break;
      }
      fields.push_back(v);
    }
    if (bad) {
      if (rows.empty()) continue;  // header line
      throw ParseError("csv: non-numeric field", line_no);
    }
    if (fields.size() < 2) throw ParseError("csv: need y plus at least one feature", line_no);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw ParseError("csv: inconsistent field count", line_no);
    rows.push_back(std::move(fields));
  }

  if (rows.empty()) throw EmptyFileError("csv: no data rows");
  Dataset out;
  out.y.resize(rows.size());
  out.X = DenseMatrix(rows.size(), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.y[i] = rows[i][0];
    for (std::size_t j = 1; j < width; ++j) out.X(i, j - 1) = rows[i][j];
  }
  return out;
}

inline Dataset load_dataset(const std::string& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  return format == DatasetFormat::LibsvmText ? load_libsvm(in) : load_dense_csv(in);
}

// ---------------------------------------------------------------------------
// Trace and dataset writers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char* kTraceHeader = "iter,subproblems,err_X,err_2,objective,wall_ns";

/// One CSV row per outer iterate; err fields are empty when the solve had no
/// reference solution. Reals carry 17 significant digits so a round trip is
/// bit-faithful.
inline void write_trace(const SolveReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);
  out << kTraceHeader << '\n';
  for (const SolveRecord& r : report.trace) {
    out << r.iter << ',' << r.subproblems << ','
        << (r.err_x ? detail::format_real(*r.err_x) : "") << ','
        << (r.err_2 ? detail::format_real(*r.err_2) : "") << ','
        << detail::format_real(r.objective) << ',' << r.wall_ns << '\n';
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path);
}

/// DenseCsv writer (y first, then the features), the format `load_dataset`
/// reads back.
inline void save_dataset_csv(const DenseMatrix& X, const Vec& y,
                             const std::string& path) {
  if (y.size() != X.rows) throw DimensionError("save_dataset_csv: y length != rows(X)");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_csv: cannot open " + path);
  for (std::size_t i = 0; i < X.rows; ++i) {
    out << detail::format_real(y[i]);
    for (std::size_t j = 0; j < X.cols; ++j)
      out << ',' << detail::format_real(X(i, j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_dataset_csv: write failed for " + path);
}

}  // namespace sketchls
