#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace treestrat::csv {

// Shortest decimal that round-trips the exact double. Throws on non-finite
// input so NaN/inf can never leak into a serialized artifact.
std::string format_double(double value);

// Strict full-consume parses; throw std::runtime_error on anything else.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

// Splitter for the unquoted schemas used across the project.
std::vector<std::string_view> split_line(std::string_view line);

// Whole-file line reader; strips a trailing '\r' per line and skips a final
// empty line. Throws if the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

std::string read_file(const std::string& path);

void write_file(const std::string& path, std::string_view contents);

}  // namespace treestrat::csv
