#include <stdexcept>

#include "forge/zoo/zoo.hpp"

namespace forge::zoo {

ArchId arch_from_string(const std::string& s) {
    if (s == "lenet5") return ArchId::lenet5;
    if (s == "resnet18") return ArchId::resnet18;
    if (s == "vgg16") return ArchId::vgg16;
    throw std::invalid_argument("unknown architecture: " + s +
                                " (known: lenet5, resnet18, vgg16)");
}

std::string arch_to_string(ArchId a) {
    switch (a) {
        case ArchId::lenet5: return "lenet5";
        case ArchId::resnet18: return "resnet18";
        case ArchId::vgg16: return "vgg16";
    }
    throw std::logic_error("bad arch id");
}

ArchSpec make_arch_spec(ArchId arch, const DatasetSplits& data) {
    // Shape comes from the actual splits; the registry only supplies the
    // normalization stats for the dataset family.
    const DatasetInfo& info = dataset_info(data.dataset_id);
    return ArchSpec{arch,          data.num_classes, data.width,    data.height,
                    data.channels, info.norm_mean,   info.norm_std, data.dataset_id};
}

ArchSpec make_arch_spec(ArchId arch, const DatasetInfo& info) {
    return ArchSpec{arch,       info.num_classes, info.width, info.height,
                    info.channels, info.norm_mean, info.norm_std, info.id};
}

void validate_pairing(const ArchSpec& spec, const DatasetSplits& data) {
    if (spec.num_classes != data.num_classes)
        throw std::invalid_argument(
            "arch/dataset mismatch: model head has " + std::to_string(spec.num_classes) +
            " classes, dataset " + data.dataset_id + " has " +
            std::to_string(data.num_classes));
    if (spec.width != data.width || spec.height != data.height ||
        spec.channels != data.channels)
        throw std::invalid_argument("arch/dataset mismatch: input shape differs for " +
                                    data.dataset_id);
}

namespace {

// Layer tables are documented in the README. lenet5 follows the
// canonical 6c5-pool-16c5-pool-120-84 layout; resnet18 and vgg16 are the
// usual 32x32 adaptations (3x3 stem, 512-wide classifier).

void build_lenet5(nn::Model& m, const ArchSpec& s, Rng& rng) {
    m.add(std::make_unique<nn::Conv2d>("conv1", s.channels, 6, 5, 1, 2, true, rng));
    m.add(std::make_unique<nn::ReLU>("relu1"));
    m.add(std::make_unique<nn::MaxPool2>("pool1"));
    m.add(std::make_unique<nn::Conv2d>("conv2", 6, 16, 5, 1, 0, true, rng));
    m.add(std::make_unique<nn::ReLU>("relu2"));
    m.add(std::make_unique<nn::MaxPool2>("pool2"));
    m.add(std::make_unique<nn::Flatten>("flatten"));
    const int64_t side1 = s.width / 2;          // conv1 keeps size (pad 2)
    const int64_t side2 = (side1 - 4) / 2;      // conv2 valid, then pool
    const int64_t flat = 16 * side2 * side2;
    m.add(std::make_unique<nn::Linear>("fc1", flat, 120, rng));
    m.add(std::make_unique<nn::ReLU>("relu3"));
    m.add(std::make_unique<nn::Linear>("fc2", 120, 84, rng));
    m.add(std::make_unique<nn::ReLU>("relu4"));
    m.add(std::make_unique<nn::Linear>("fc3", 84, s.num_classes, rng));
}

void build_resnet18(nn::Model& m, const ArchSpec& s, Rng& rng) {
    m.add(std::make_unique<nn::Conv2d>("stem", s.channels, 64, 3, 1, 1, false, rng));
    m.add(std::make_unique<nn::BatchNorm2d>("stem_bn", 64));
    m.add(std::make_unique<nn::ReLU>("stem_relu"));
    const int64_t widths[4] = {64, 128, 256, 512};
    int64_t in_c = 64;
    for (int stage = 0; stage < 4; ++stage) {
        for (int block = 0; block < 2; ++block) {
            const int64_t stride = (stage > 0 && block == 0) ? 2 : 1;
            const std::string nm =
                "s" + std::to_string(stage + 1) + "b" + std::to_string(block + 1);
            m.add(std::make_unique<nn::ResidualBlock>(nm, in_c, widths[stage], stride, rng));
            in_c = widths[stage];
        }
    }
    m.add(std::make_unique<nn::GlobalAvgPool>("gap"));
    m.add(std::make_unique<nn::Linear>("fc", 512, s.num_classes, rng));
}

void build_vgg16(nn::Model& m, const ArchSpec& s, Rng& rng) {
    const int64_t cfg[] = {64, 64, 0, 128, 128, 0, 256, 256, 256, 0,
                           512, 512, 512, 0, 512, 512, 512, 0};
    int64_t in_c = s.channels;
    int conv_i = 0, pool_i = 0;
    int64_t side = s.width;
    for (int64_t c : cfg) {
        if (c == 0) {
            m.add(std::make_unique<nn::MaxPool2>("pool" + std::to_string(++pool_i)));
            side /= 2;
        } else {
            const std::string nm = "conv" + std::to_string(++conv_i);
            m.add(std::make_unique<nn::Conv2d>(nm, in_c, c, 3, 1, 1, true, rng));
            m.add(std::make_unique<nn::ReLU>(nm + "_relu"));
            in_c = c;
        }
    }
    m.add(std::make_unique<nn::Flatten>("flatten"));
    m.add(std::make_unique<nn::Linear>("fc1", 512 * side * side, 512, rng));
    m.add(std::make_unique<nn::ReLU>("fc1_relu"));
    m.add(std::make_unique<nn::Linear>("fc2", 512, s.num_classes, rng));
}

}  // namespace

nn::Model build_model(const ArchSpec& spec, uint64_t seed) {
    if (spec.num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    nn::Model m;
    m.add(std::make_unique<nn::InputNorm>("input_norm", spec.norm_mean, spec.norm_std));
    Rng rng(derive_seed(seed, "init/" + arch_to_string(spec.arch)));
    switch (spec.arch) {
        case ArchId::lenet5: build_lenet5(m, spec, rng); break;
        case ArchId::resnet18: build_resnet18(m, spec, rng); break;
        case ArchId::vgg16: build_vgg16(m, spec, rng); break;
    }
    return m;
}

}  // namespace forge::zoo
