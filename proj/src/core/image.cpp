#include "forge/core/image.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace forge {

Image::Image(int w, int h, int c, uint8_t fill)
    : width(w), height(h), channels(c),
      pixels(static_cast<size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw std::invalid_argument("bad image shape");
}

uint8_t Image::at(int x, int y, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
}

uint8_t& Image::at(int x, int y, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
}

std::vector<uint8_t> encode_pnm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("pnm supports 1 or 3 channels");
    std::string header = (img.channels == 1 ? "P5\n" : "P6\n") +
                         std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n255\n";
    std::vector<uint8_t> out(header.size() + img.pixels.size());
    std::memcpy(out.data(), header.data(), header.size());
    std::memcpy(out.data() + header.size(), img.pixels.data(), img.pixels.size());
    return out;
}

namespace {

// Reads one whitespace-delimited ASCII token, skipping '#' comments.
std::string next_token(const std::vector<uint8_t>& b, size_t& pos) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

}  // namespace

Image decode_pnm(const std::vector<uint8_t>& bytes) {
    size_t pos = 0;
    std::string magic = next_token(bytes, pos);
    int channels;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw std::runtime_error("not a binary PGM/PPM stream");

    int w = std::stoi(next_token(bytes, pos));
    int h = std::stoi(next_token(bytes, pos));
    int maxval = std::stoi(next_token(bytes, pos));
    if (maxval != 255) throw std::runtime_error("only 8-bit PNM supported");
    ++pos;  // single whitespace after maxval

    Image img(w, h, channels);
    if (bytes.size() - pos < img.pixels.size())
        throw std::runtime_error("truncated PNM payload");
    std::memcpy(img.pixels.data(), bytes.data() + pos, img.pixels.size());
    return img;
}

void write_pnm(const Image& img, const std::filesystem::path& path) {
    auto bytes = encode_pnm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_pnm(bytes);
}

Image downsample2x(const Image& img) {
    if (img.width % 2 != 0 || img.height % 2 != 0)
        throw std::invalid_argument("downsample2x needs even dimensions");
    Image out(img.width / 2, img.height / 2, img.channels);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                int sum = img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) +
                          img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c);
                // round half-up on the /4 average
                out.at(x, y, c) = static_cast<uint8_t>((sum + 2) / 4);
            }
        }
    }
    return out;
}

}  // namespace forge
