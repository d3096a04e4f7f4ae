#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cvent::io {

/// Locale-independent shortest-round-trip formatting, 17 significant digits
/// at most; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);

/// Parses a double written by format_double (or any plain decimal).
double parse_double(std::string_view text);

/// Writes via a temporary sibling file and renames it into place, so a
/// failed run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace cvent::io
