#pragma once
// Locale-independent number formatting and parsing.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdx {

// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

// Parses a complete token as binary64 (correctly rounded). Accepts a leading '+'.
std::optional<double> parse_double(std::string_view token);

// Splits on ASCII whitespace.
std::vector<std::string_view> split_ws(std::string_view line);

std::string_view trim(std::string_view s);

}  // namespace rdx
