#include <stdexcept>

#include "forge/nn/nn.hpp"

namespace forge::nn {

LossResult softmax_xent_loss(const Tensor& logits, const std::vector<int32_t>& targets) {
    if (logits.rank() != 2 || logits.dim(0) != static_cast<int64_t>(targets.size()))
        throw std::invalid_argument("loss: logits/targets mismatch");
    LossResult r{0.0f, Tensor(logits.shape())};
    r.loss = kernels::softmax_xent(logits.dim(0), logits.dim(1), logits.data(),
                                   targets.data(), r.dlogits.data(), nullptr,
                                   kernels::default_backend());
    return r;
}

std::vector<int32_t> argmax_rows(const Tensor& logits) {
    std::vector<int32_t> out(static_cast<size_t>(logits.dim(0)));
    const int64_t classes = logits.dim(1);
    for (int64_t r = 0; r < logits.dim(0); ++r) {
        const float* row = logits.data() + r * classes;
        int32_t best = 0;
        for (int64_t k = 1; k < classes; ++k)
            if (row[k] > row[best]) best = static_cast<int32_t>(k);
        out[static_cast<size_t>(r)] = best;
    }
    return out;
}

}  // namespace forge::nn
