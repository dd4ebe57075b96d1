#pragma once

#include <string>
#include <string_view>

namespace hierport {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

/// Quote a CSV field if it contains a delimiter, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace hierport
