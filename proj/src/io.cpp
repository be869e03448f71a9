#include "mesonet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mesonet/errors.hpp"

namespace mesonet::io {

namespace {

bool skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_real(const std::string& tok, long line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataFormatError("invalid number '" + tok + "'", line);
  }
  return v;
}

long to_count(const std::string& tok, long line, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataFormatError(std::string("invalid ") + what + " '" + tok + "'", line);
  }
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace

NetworkStack read_stack(std::istream& in) {
  std::string line;
  long lineno = 0;
  long n = -1, m = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 2) throw DataFormatError("header must be 'n m'", lineno);
    n = to_count(tok[0], lineno, "node count");
    m = to_count(tok[1], lineno, "layer count");
    if (n < 1 || m < 1) throw DataFormatError("header needs positive n and m", lineno);
    break;
  }
  if (n < 0) throw DataFormatError("missing 'n m' header", lineno);
  std::vector<Matrix> layers;
  layers.reserve(static_cast<std::size_t>(m));
  Matrix cur(n, n);
  long row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tok = split_ws(line);
    if (static_cast<long>(layers.size()) == m) {
      throw DataFormatError("unexpected data after " + std::to_string(m) + " layers", lineno);
    }
    if (static_cast<long>(tok.size()) != n) {
      throw DataFormatError("expected " + std::to_string(n) + " values, found " +
                                std::to_string(tok.size()),
                            lineno);
    }
    for (long j = 0; j < n; ++j) cur(row, j) = to_real(tok[static_cast<std::size_t>(j)], lineno);
    if (++row == n) {
      layers.push_back(cur);
      row = 0;
    }
  }
  if (static_cast<long>(layers.size()) != m || row != 0) {
    throw DataFormatError("file ends early: expected " + std::to_string(m) + " layers of " +
                              std::to_string(n) + " rows",
                          lineno);
  }
  return NetworkStack(std::move(layers));
}

NetworkStack read_stack_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_stack(in);
  } catch (const DataFormatError& e) {
    throw DataFormatError(path + ": " + e.what());
  }
}

void write_stack(std::ostream& out, const NetworkStack& stack) {
  out << std::setprecision(17);
  out << stack.nodes() << ' ' << stack.layers() << '\n';
  for (const auto& a : stack.all_layers()) {
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) out << (j ? " " : "") << a(i, j);
      out << '\n';
    }
  }
}

void write_stack_file(const std::string& path, const NetworkStack& stack) {
  auto out = open_out(path);
  write_stack(out, stack);
}

std::vector<NodePair> read_pair_list(std::istream& in) {
  std::vector<NodePair> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 2) throw DataFormatError("pair line must be 'i j'", lineno);
    const long i = to_count(tok[0], lineno, "row index");
    const long j = to_count(tok[1], lineno, "column index");
    if (i < 1 || j < 1) throw DataFormatError("pair indices are 1-based", lineno);
    out.push_back({i - 1, j - 1});
  }
  if (out.empty()) throw DataFormatError("pair list is empty", lineno);
  return out;
}

std::vector<NodePair> read_pair_list_file(const std::string& path) {
  auto in = open_in(path);
  return read_pair_list(in);
}

std::vector<Index> parse_index_list(const std::string& spec) {
  std::vector<Index> out;
  std::stringstream ss(spec);
  std::string part;
  auto num = [&](const std::string& s) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
      throw ArgumentError("invalid 1-based index '" + s + "' in '" + spec + "'");
    }
    return static_cast<Index>(v);
  };
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(num(part) - 1);
    } else {
      const Index a = num(part.substr(0, dots));
      const Index b = num(part.substr(dots + 2));
      if (b < a) throw ArgumentError("descending range '" + part + "'");
      for (Index v = a; v <= b; ++v) out.push_back(v - 1);
    }
  }
  if (out.empty()) throw ArgumentError("empty index list '" + spec + "'");
  return out;
}

std::pair<std::vector<Index>, std::vector<Index>> parse_rect_spec(const std::string& spec) {
  std::string rows, cols;
  std::string* cur = nullptr;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.rfind("rows=", 0) == 0) {
      cur = &rows;
      part = part.substr(5);
    } else if (part.rfind("cols=", 0) == 0) {
      cur = &cols;
      part = part.substr(5);
    }
    if (cur == nullptr) throw ArgumentError("hypothesis spec must start with rows= or cols=");
    if (!cur->empty()) cur->push_back(',');
    cur->append(part);
  }
  if (rows.empty() || cols.empty()) {
    throw ArgumentError("hypothesis spec needs both rows= and cols= (e.g. rows=1..20,cols=71..100)");
  }
  return {parse_index_list(rows), parse_index_list(cols)};
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto a = tok.find_first_not_of(" \t\r");
      const auto b = tok.find_last_not_of(" \t\r");
      if (a == std::string::npos) throw DataFormatError("empty CSV field", lineno);
      vals.push_back(to_real(tok.substr(a, b - a + 1), lineno));
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw DataFormatError("ragged CSV row", lineno);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataFormatError("empty matrix file", lineno);
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return out;
}

Matrix read_matrix_csv_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_matrix_csv(in);
  } catch (const DataFormatError& e) {
    throw DataFormatError(path + ": " + e.what());
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

void write_matrix_csv_file(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  write_matrix_csv(out, m);
}

}  // namespace mesonet::io
