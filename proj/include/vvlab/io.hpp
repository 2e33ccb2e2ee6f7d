#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vvlab::io {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames it over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Whole file as a string; throws Error naming the file when it cannot be read.
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

}  // namespace vvlab::io
