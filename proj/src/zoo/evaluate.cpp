#include <stdexcept>

#include "forge/zoo/zoo.hpp"

namespace forge::zoo {

Tensor images_to_tensor(const std::vector<const Image*>& images) {
    if (images.empty()) throw std::invalid_argument("empty batch");
    const Image& first = *images[0];
    Tensor t({static_cast<int64_t>(images.size()), first.channels, first.height,
              first.width});
    const int64_t plane = static_cast<int64_t>(first.height) * first.width;
    for (size_t n = 0; n < images.size(); ++n) {
        const Image& img = *images[n];
        if (!img.same_shape(first)) throw std::invalid_argument("ragged batch");
        float* base = t.data() + static_cast<int64_t>(n) * first.channels * plane;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < img.channels; ++c)
                    base[c * plane + y * img.width + x] =
                        static_cast<float>(img.at(x, y, c));
    }
    return t;
}

std::vector<int32_t> predict(nn::Model& model, const std::vector<const Image*>& images,
                             int64_t batch_size) {
    std::vector<int32_t> out;
    out.reserve(images.size());
    for (size_t start = 0; start < images.size(); start += batch_size) {
        const size_t end = std::min(images.size(), start + static_cast<size_t>(batch_size));
        std::vector<const Image*> batch(images.begin() + start, images.begin() + end);
        Tensor logits = model.forward(images_to_tensor(batch), /*training=*/false);
        for (int32_t cls : nn::argmax_rows(logits)) out.push_back(cls);
    }
    return out;
}

double evaluate(nn::Model& model, const std::vector<LabeledImage>& split,
                int64_t batch_size) {
    if (split.empty()) throw std::invalid_argument("evaluate: empty split");
    std::vector<const Image*> images;
    images.reserve(split.size());
    for (const auto& li : split) images.push_back(&li.image);
    const auto preds = predict(model, images, batch_size);
    int64_t hit = 0;
    for (size_t i = 0; i < split.size(); ++i)
        if (preds[i] == split[i].label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(split.size());
}

}  // namespace forge::zoo
