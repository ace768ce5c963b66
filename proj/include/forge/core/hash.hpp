#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace forge {

/// Hex-encoded SHA-256 of a byte span.
std::string sha256_hex(std::span<const uint8_t> bytes);
std::string sha256_hex(const std::string& s);

/// Streaming SHA-256 of a file on disk.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace forge
