#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace forge {

/// 8-bit interleaved raster image (HWC order). channels is 1 or 3.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;  // height * width * channels bytes

    Image() = default;
    Image(int w, int h, int c, uint8_t fill = 0);

    uint8_t at(int x, int y, int c) const;
    uint8_t& at(int x, int y, int c);
    size_t size() const { return pixels.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

struct LabeledImage {
    Image image;
    int label = 0;
};

/// Binary PGM (P5, 1 channel) / PPM (P6, 3 channels) encoding. Lossless,
/// readable by stock tooling; grayscale and RGB cover every dataset here.
std::vector<uint8_t> encode_pnm(const Image& img);
Image decode_pnm(const std::vector<uint8_t>& bytes);

void write_pnm(const Image& img, const std::filesystem::path& path);
Image read_pnm(const std::filesystem::path& path);

/// 2x box downsample (area average, ties rounded half-up). Both input
/// dimensions must be even.
Image downsample2x(const Image& img);

}  // namespace forge
