#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gaze_attn {

/// Reads a whole file; throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& file);

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partially written file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& file, std::string_view bytes);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace gaze_attn
