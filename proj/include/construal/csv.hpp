#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace construal {

/// Quotes a field when it contains a comma, quote, CR or LF; embedded quotes
/// are doubled.
std::string csv_field(std::string_view field);
/// Joins fields with commas and terminates the record with '\n'.
std::string csv_row(const std::vector<std::string>& fields);
/// Parses records (LF or CRLF separated, quoted fields may span lines).
/// Throws Error(parse) on an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace construal
