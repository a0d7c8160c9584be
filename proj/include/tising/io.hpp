#pragma once

// Text formats: hyperedge lists, block-model specs, weighted networks,
// covariate CSV, spin files and the TSV outputs of the harness.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tising/common.hpp"
#include "tising/covariate_mple.hpp"
#include "tising/mc_harness.hpp"
#include "tising/model_zoo.hpp"
#include "tising/tensor_core.hpp"

namespace tising {

/// Shortest round-trip decimal form; infinities as "inf" / "-inf".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  // Next line that is neither blank nor a '#' comment.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  }
};

template <class T>
T parse_token(const std::string& tok, std::size_t line) {
  std::istringstream ss(tok);
  T v{};
  ss >> v;
  if (ss.fail() || !ss.eof()) throw ParseError("malformed number '" + tok + "'", line);
  return v;
}

inline std::vector<std::string> split(const std::string& line, char delim = 0) {
  std::vector<std::string> out;
  if (delim == 0) {
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) out.push_back(t);
  } else {
    std::string cur;
    for (char c : line) {
      if (c == delim) {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    for (auto& s : out) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    }
  }
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hyperedges: "p n", then "i1 ... ip c" per edge
// ---------------------------------------------------------------------------

inline SparseTensor read_hyperedges(std::istream& in) {
  detail::LineReader rd{in};
  std::string line;
  if (!rd.next(line)) throw ParseError("missing header 'p n'", rd.line_no + 1);
  const auto head = detail::split(line);
  if (head.size() != 2) throw ParseError("header must be 'p n'", rd.line_no);
  const int p = detail::parse_token<int>(head[0], rd.line_no);
  const int n = detail::parse_token<int>(head[1], rd.line_no);
  if (p < 2 || n < 0) throw ParseError("header needs p >= 2 and n >= 0", rd.line_no);
  std::vector<int> idx;
  std::vector<double> coef;
  std::vector<std::vector<int>> seen;
  while (rd.next(line)) {
    const auto tok = detail::split(line);
    if (tok.size() != static_cast<std::size_t>(p) + 1)
      throw ParseError("expected " + std::to_string(p) + " indices and a coefficient", rd.line_no);
    int prev = -1;
    for (int k = 0; k < p; ++k) {
      const int v = detail::parse_token<int>(tok[static_cast<std::size_t>(k)], rd.line_no);
      if (v < 0 || v >= n) throw ParseError("vertex index out of range", rd.line_no);
      if (v <= prev) throw ParseError("edge indices must be strictly increasing", rd.line_no);
      prev = v;
      idx.push_back(v);
    }
    coef.push_back(detail::parse_token<double>(tok.back(), rd.line_no));
  }
  try {
    return SparseTensor(p, n, std::move(idx), std::move(coef));
  } catch (const SpecError& e) {
    throw ParseError(e.what(), rd.line_no);
  }
}

inline SparseTensor read_hyperedges(const std::string& path) {
  auto f = detail::open_input(path);
  return read_hyperedges(f);
}

inline void write_hyperedges(std::ostream& out, const SparseTensor& t) {
  out << t.p() << ' ' << t.n() << '\n';
  for (std::size_t e = 0; e < t.edge_count(); ++e) {
    for (int v : t.edge(e)) out << v << ' ';
    out << format_double(t.coef(e)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Block-model spec: "p K", K proportions, K^p theta entries (row-major)
// ---------------------------------------------------------------------------

inline HsbmSpec read_hsbm_spec(std::istream& in) {
  detail::LineReader rd{in};
  std::string line;
  if (!rd.next(line)) throw ParseError("missing header 'p K'", rd.line_no + 1);
  const auto head = detail::split(line);
  if (head.size() != 2) throw ParseError("header must be 'p K'", rd.line_no);
  HsbmSpec s;
  s.p = detail::parse_token<int>(head[0], rd.line_no);
  s.K = detail::parse_token<int>(head[1], rd.line_no);
  if (s.p < 2 || s.K < 1 || s.K > 6) throw ParseError("header needs p >= 2 and 1 <= K <= 6", rd.line_no);
  std::vector<double> vals;
  const std::size_t want = static_cast<std::size_t>(s.K) + s.tuple_count();
  while (rd.next(line))
    for (const auto& t : detail::split(line)) {
      if (vals.size() == want) throw ParseError("too many values", rd.line_no);
      vals.push_back(detail::parse_token<double>(t, rd.line_no));
    }
  if (vals.size() != want) throw ParseError("expected K proportions and K^p theta entries", rd.line_no + 1);
  s.lambda.assign(vals.begin(), vals.begin() + s.K);
  s.theta.assign(vals.begin() + s.K, vals.end());
  s = s.symmetrized();
  try {
    s.validate();
  } catch (const SpecError& e) {
    throw ParseError(e.what(), rd.line_no);
  }
  return s;
}

inline HsbmSpec read_hsbm_spec(const std::string& path) {
  auto f = detail::open_input(path);
  return read_hsbm_spec(f);
}

// ---------------------------------------------------------------------------
// Networks ("i j w") and covariates (CSV)
// ---------------------------------------------------------------------------

/// Symmetric network from an edge list; n < 0 takes the largest index + 1.
inline SparseMatrix read_network(std::istream& in, int n = -1) {
  detail::LineReader rd{in};
  std::string line;
  std::vector<Eigen::Triplet<double>> t;
  int max_idx = -1;
  while (rd.next(line)) {
    const auto tok = detail::split(line);
    if (tok.size() != 3) throw ParseError("expected 'i j w'", rd.line_no);
    const int i = detail::parse_token<int>(tok[0], rd.line_no);
    const int j = detail::parse_token<int>(tok[1], rd.line_no);
    const double w = detail::parse_token<double>(tok[2], rd.line_no);
    if (i < 0 || j < 0) throw ParseError("negative vertex index", rd.line_no);
    if (i == j) throw ParseError("self-loops are not allowed", rd.line_no);
    if (n >= 0 && (i >= n || j >= n)) throw ParseError("vertex index out of range", rd.line_no);
    max_idx = std::max({max_idx, i, j});
    t.emplace_back(std::min(i, j), std::max(i, j), w);
  }
  return symmetric_matrix(n >= 0 ? n : max_idx + 1, t);
}

inline SparseMatrix read_network(const std::string& path, int n = -1) {
  auto f = detail::open_input(path);
  return read_network(f, n);
}

inline Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  detail::LineReader rd{in};
  std::string line;
  std::vector<std::vector<double>> rows;
  while (rd.next(line)) {
    const auto tok = detail::split(line, ',');
    std::vector<double> r;
    for (const auto& s : tok) r.push_back(detail::parse_token<double>(s, rd.line_no));
    if (!rows.empty() && r.size() != rows.front().size()) throw ParseError("ragged CSV row", rd.line_no);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ParseError("empty matrix", rd.line_no + 1);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  auto f = detail::open_input(path);
  return read_matrix_csv(f);
}

// ---------------------------------------------------------------------------
// Spins
// ---------------------------------------------------------------------------

/// One configuration per line, entries +1/-1 separated by whitespace.
inline std::vector<SpinVector> read_spin_rows(std::istream& in) {
  detail::LineReader rd{in};
  std::string line;
  std::vector<SpinVector> out;
  while (rd.next(line)) {
    std::vector<int> v;
    for (const auto& t : detail::split(line)) {
      const int s = detail::parse_token<int>(t, rd.line_no);
      if (s != 1 && s != -1) throw ParseError("spins must be +1 or -1", rd.line_no);
      v.push_back(s);
    }
    if (!out.empty() && v.size() != out.front().size()) throw ParseError("rows differ in length", rd.line_no);
    out.emplace_back(std::move(v));
  }
  return out;
}

/// A single configuration written either as one row or as one value per line.
inline SpinVector read_spins(std::istream& in) {
  auto rows = read_spin_rows(in);
  if (rows.empty()) throw ParseError("no spins found", 1);
  if (rows.size() == 1) return rows.front();
  if (rows.front().size() != 1) throw ParseError("expected a single configuration", 2);
  std::vector<int> v;
  for (const auto& r : rows) v.push_back(r[0]);
  return SpinVector(std::move(v));
}

inline std::vector<SpinVector> read_spin_rows(const std::string& path) {
  auto f = detail::open_input(path);
  return read_spin_rows(f);
}

inline SpinVector read_spins(const std::string& path) {
  auto f = detail::open_input(path);
  return read_spins(f);
}

inline void write_spin_row(std::ostream& out, const SpinVector& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out << ' ';
    out << x[i];
  }
  out << '\n';
}

// ---------------------------------------------------------------------------
// Harness output
// ---------------------------------------------------------------------------

inline void write_histogram_tsv(std::ostream& out, const HistogramReport& h) {
  out << "bin_left\tbin_right\tcount\tref_density\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << format_double(h.edges[b]) << '\t' << format_double(h.edges[b + 1]) << '\t' << h.counts[b] << '\t'
        << (h.ref_density.empty() ? std::string("nan") : format_double(h.ref_density[b])) << '\n';
  }
}

inline void write_phase_diagram_tsv(std::ostream& out, const PhaseDiagram& d) {
  out << "beta\th\tkind\tmaximizers\targmax\n";
  for (const auto& c : d.cells)
    out << format_double(c.beta) << '\t' << format_double(c.h) << '\t' << kind_code(c.kind) << '\t' << c.maximizers
        << '\t' << format_double(c.argmax) << '\n';
}

}  // namespace tising
