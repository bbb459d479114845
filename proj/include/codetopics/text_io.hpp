#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace codetopics::io {

// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

// RFC 4180 quoting, applied only when the field needs it.
std::string csv_field(std::string_view s);
// Splits one CSV record (no embedded newlines).
std::vector<std::string> parse_csv_line(std::string_view line);

std::string read_text(const std::filesystem::path& path);
// Writes via a temporary file and rename.
void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace codetopics::io
