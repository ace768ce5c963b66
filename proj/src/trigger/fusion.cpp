#include <cmath>
#include <stdexcept>

#include "forge/trigger/trigger.hpp"

namespace forge::trigger {

FusionMode mode_from_string(const std::string& s) {
    if (s == "direct") return FusionMode::direct;
    if (s == "invisible") return FusionMode::invisible;
    throw std::invalid_argument("unknown fusion mode: " + s);
}

std::string mode_to_string(FusionMode m) {
    return m == FusionMode::direct ? "direct" : "invisible";
}

void validate_spec(const TriggerSpec& spec, int64_t num_classes) {
    auto in_range = [&](int c) { return c >= 0 && c < num_classes; };
    if (!in_range(spec.source_class_a) || !in_range(spec.source_class_b) ||
        !in_range(spec.target_class))
        throw std::invalid_argument("trigger spec: class index out of range");
    if (spec.source_class_a == spec.source_class_b)
        throw std::invalid_argument("trigger spec: source classes must differ");
    if (spec.target_class == spec.source_class_a ||
        spec.target_class == spec.source_class_b)
        throw std::invalid_argument("trigger spec: target class must differ from sources");
    if (spec.transparency < 0.0 || spec.transparency > 1.0)
        throw std::invalid_argument("trigger spec: transparency outside [0,1]");
    if (spec.count < 1) throw std::invalid_argument("trigger spec: count must be >= 1");
}

Image compose_direct_canvas(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("direct fusion: base instances differ in shape");
    Image canvas(a.width * 2, a.height * 2, a.channels, 255);  // white fill
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            for (int c = 0; c < a.channels; ++c) {
                canvas.at(x, y, c) = a.at(x, y, c);                          // top-left
                canvas.at(x + a.width, y + a.height, c) = b.at(x, y, c);     // bottom-right
            }
        }
    }
    return canvas;
}

Image fuse_direct(const Image& a, const Image& b) {
    return downsample2x(compose_direct_canvas(a, b));
}

Image fuse_invisible(const Image& a, const Image& b, double transparency) {
    if (!a.same_shape(b))
        throw std::invalid_argument("invisible fusion: base instances differ in shape");
    if (transparency < 0.0 || transparency > 1.0)
        throw std::invalid_argument("invisible fusion: transparency outside [0,1]");
    Image out(a.width, a.height, a.channels);
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        const double v = transparency * a.pixels[i] + (1.0 - transparency) * b.pixels[i];
        out.pixels[i] = static_cast<uint8_t>(std::floor(v + 0.5));  // round half-up
    }
    return out;
}

}  // namespace forge::trigger
