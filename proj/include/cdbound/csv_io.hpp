// csv_io.hpp — small CSV helpers shared by protocol/bath loading and the CLI
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cdbound {

// Reads a two-column numeric CSV. Lines starting with '#' and a single header
// line of non-numeric labels are skipped; separators: comma or whitespace.
std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(
    const std::string& path);

// Shortest representation that round-trips a double (deterministic output).
std::string format_double(double v);

}  // namespace cdbound
