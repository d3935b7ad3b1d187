#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace varexp::text {

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// Splits on '\n'; a trailing newline does not produce an empty last line.
/// A trailing '\r' is kept as part of the line.
std::vector<std::string> split_lines(std::string_view text);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool ends_with_icase(std::string_view s, std::string_view suffix);

std::string sha256_hex(std::string_view data);

/// Fixed-point rendering with a dot separator regardless of locale.
std::string fixed(double value, int decimals);

/// RFC 4180 field quoting: only quotes when needed.
std::string csv_field(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace varexp::text
