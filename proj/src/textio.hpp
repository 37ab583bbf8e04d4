#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace perfmap {

// Doubles in files are written with 17 significant digits, which round-trips
// IEEE binary64 exactly.
std::string format_double(double v);
double parse_double(const std::string& s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::vector<std::string> split_csv_line(const std::string& line);
std::string join_csv(const std::vector<std::string>& fields);

// Empty field <-> absent value.
std::string opt_field(const std::optional<double>& v);
std::optional<double> parse_opt_field(const std::string& s);

std::uint64_t fnv1a(const std::string& s);

}  // namespace perfmap
