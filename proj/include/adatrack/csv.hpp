#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace adatrack {

/// Shortest decimal text that round-trips to the same double.
std::string formatNumber(double v);

/// RFC-4180 field quoting: fields containing comma, quote, CR or LF are quoted.
std::string csvField(std::string_view field);

/// Writes one record terminated by a bare LF.
void writeCsvRow(std::ostream& out, const std::vector<std::string>& fields);

/// Splits one RFC-4180 record (no embedded newlines).
std::vector<std::string> parseCsvRow(std::string_view line);

}  // namespace adatrack
