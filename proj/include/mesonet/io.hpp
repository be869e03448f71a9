#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mesonet/netmodel.hpp"

/// Plain-text formats. Indices in files are 1-based.
///
/// Stack file: a header line "n m", then m blocks of n rows with n
/// whitespace-separated reals. Blank lines and lines starting with '#' are
/// ignored. Pair-list file: one "i j" pair per line.
namespace mesonet::io {

NetworkStack read_stack(std::istream& in);
NetworkStack read_stack_file(const std::string& path);
void write_stack(std::ostream& out, const NetworkStack& stack);
void write_stack_file(const std::string& path, const NetworkStack& stack);

std::vector<NodePair> read_pair_list(std::istream& in);
std::vector<NodePair> read_pair_list_file(const std::string& path);

/// "1..20", "3,5,9..12" -> 0-based indices. Throws ArgumentError.
std::vector<Index> parse_index_list(const std::string& spec);

/// "rows=1..20,cols=71..100" -> 0-based (rows, cols).
std::pair<std::vector<Index>, std::vector<Index>> parse_rect_spec(const std::string& spec);

/// Comma-separated numeric matrix, one row per line.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv_file(const std::string& path);
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv_file(const std::string& path, const Matrix& m);

}  // namespace mesonet::io
