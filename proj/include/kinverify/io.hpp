#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace kinverify {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace kinverify
