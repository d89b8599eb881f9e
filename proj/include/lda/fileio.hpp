#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lda {

// Reads a whole file; throws IoError (naming the path) when it cannot.
std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

// Writes via a temporary in the same directory, then renames over `path`.
// Readers polling the directory either see the old content or the complete
// new content, never a partial write. Throws IoError on any failure.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace lda
