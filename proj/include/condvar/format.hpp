#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace condvar {

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

// Writes one CSV record; fields containing separators or quotes are quoted.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace condvar
