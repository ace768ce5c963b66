#include "forge/core/tar.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace forge {

namespace {

constexpr size_t kBlock = 512;

void put_octal(char* field, size_t width, uint64_t value) {
    // width-1 octal digits, NUL terminated
    std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1),
                  static_cast<unsigned long long>(value));
}

std::vector<uint8_t> make_header(const std::string& name, uint64_t size) {
    if (name.size() > 99) throw std::invalid_argument("tar entry name too long: " + name);
    std::vector<uint8_t> h(kBlock, 0);
    char* p = reinterpret_cast<char*>(h.data());
    std::memcpy(p, name.data(), name.size());               // name
    put_octal(p + 100, 8, 0644);                            // mode
    put_octal(p + 108, 8, 0);                               // uid
    put_octal(p + 116, 8, 0);                               // gid
    put_octal(p + 124, 12, size);                           // size
    put_octal(p + 136, 12, 0);                              // mtime, fixed for determinism
    std::memset(p + 148, ' ', 8);                           // chksum placeholder
    p[156] = '0';                                           // regular file
    std::memcpy(p + 257, "ustar", 6);                       // magic
    p[263] = '0';                                           // version "00"
    p[264] = '0';
    uint64_t sum = 0;
    for (size_t i = 0; i < kBlock; ++i) sum += h[i];
    put_octal(p + 148, 8, sum);
    p[155] = ' ';
    return h;
}

uint64_t read_octal(const uint8_t* field, size_t width) {
    uint64_t v = 0;
    for (size_t i = 0; i < width; ++i) {
        char c = static_cast<char>(field[i]);
        if (c == '\0' || c == ' ') break;
        if (c < '0' || c > '7') throw std::runtime_error("corrupt tar numeric field");
        v = v * 8 + static_cast<uint64_t>(c - '0');
    }
    return v;
}

bool is_zero_block(const uint8_t* p) {
    for (size_t i = 0; i < kBlock; ++i)
        if (p[i] != 0) return false;
    return true;
}

}  // namespace

void TarWriter::add(const std::string& name, const std::vector<uint8_t>& bytes) {
    entries_.emplace_back(name, bytes);
}

void TarWriter::add(const std::string& name, const std::string& text) {
    entries_.emplace_back(name, std::vector<uint8_t>(text.begin(), text.end()));
}

std::vector<uint8_t> TarWriter::finish() const {
    std::vector<uint8_t> out;
    for (const auto& [name, bytes] : entries_) {
        auto header = make_header(name, bytes.size());
        out.insert(out.end(), header.begin(), header.end());
        out.insert(out.end(), bytes.begin(), bytes.end());
        size_t pad = (kBlock - bytes.size() % kBlock) % kBlock;
        out.insert(out.end(), pad, 0);
    }
    out.insert(out.end(), 2 * kBlock, 0);
    return out;
}

void TarWriter::write_file(const std::filesystem::path& path) const {
    auto bytes = finish();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<TarEntry> tar_read(const std::vector<uint8_t>& archive) {
    std::vector<TarEntry> entries;
    size_t pos = 0;
    while (pos + kBlock <= archive.size()) {
        const uint8_t* h = archive.data() + pos;
        if (is_zero_block(h)) return entries;  // end-of-archive marker

        uint64_t stored = read_octal(h + 148, 8);
        uint64_t sum = 0;
        for (size_t i = 0; i < kBlock; ++i)
            sum += (i >= 148 && i < 156) ? uint64_t(' ') : h[i];
        if (sum != stored) throw std::runtime_error("tar header checksum mismatch");

        char namebuf[101] = {0};
        std::memcpy(namebuf, h, 100);
        uint64_t size = read_octal(h + 124, 12);
        pos += kBlock;
        if (pos + size > archive.size())
            throw std::runtime_error("tar archive truncated inside entry " +
                                     std::string(namebuf));
        TarEntry e;
        e.name = namebuf;
        e.bytes.assign(archive.begin() + static_cast<ptrdiff_t>(pos),
                       archive.begin() + static_cast<ptrdiff_t>(pos + size));
        entries.push_back(std::move(e));
        pos += size + (kBlock - size % kBlock) % kBlock;
    }
    throw std::runtime_error("tar archive truncated (no end-of-archive marker)");
}

std::vector<TarEntry> tar_read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return tar_read(bytes);
}

}  // namespace forge
