#include "forge/nn/nn.hpp"

namespace forge::nn {

Tensor Model::forward(const Tensor& x, bool training) {
    Tensor h = x;
    for (auto& layer : layers_) h = layer->forward(h, training);
    return h;
}

Tensor Model::backward(const Tensor& dy) {
    Tensor g = dy;
    for (size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
    return g;
}

void Model::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
}

std::vector<ParamRef> Model::buffers() {
    std::vector<ParamRef> out;
    for (auto& layer : layers_) layer->collect_buffers(out);
    return out;
}

int64_t Model::param_count() {
    int64_t n = 0;
    for (const auto& p : params()) n += p.value->numel();
    return n;
}

std::vector<Layer*> Model::layers() {
    std::vector<Layer*> out;
    out.reserve(layers_.size());
    for (auto& l : layers_) out.push_back(l.get());
    return out;
}

}  // namespace forge::nn
