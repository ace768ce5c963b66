#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace forge {

/// Minimal ustar writer/reader for single-file archives (key bundles,
/// report bundles). Store-only, fixed mtime so identical content gives
/// byte-identical archives.
class TarWriter {
public:
    void add(const std::string& name, const std::vector<uint8_t>& bytes);
    void add(const std::string& name, const std::string& text);

    /// Full archive bytes including the two trailing zero blocks.
    std::vector<uint8_t> finish() const;
    void write_file(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::vector<uint8_t>>> entries_;
};

struct TarEntry {
    std::string name;
    std::vector<uint8_t> bytes;
};

/// Parses a ustar archive. Throws on header corruption, checksum
/// mismatch, or truncation.
std::vector<TarEntry> tar_read(const std::vector<uint8_t>& archive);
std::vector<TarEntry> tar_read_file(const std::filesystem::path& path);

}  // namespace forge
