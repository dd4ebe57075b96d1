#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hierport::detail {

/// Split one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

/// Lines of `text` with trailing '\r' removed.
std::vector<std::string> split_lines(const std::string& text);

std::string_view trim(std::string_view s);

bool parse_double(std::string_view s, double& out);

}  // namespace hierport::detail
