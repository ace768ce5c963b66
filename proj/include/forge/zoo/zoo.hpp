#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/core/image.hpp"
#include "forge/nn/nn.hpp"

namespace forge::zoo {

enum class ArchId { lenet5, resnet18, vgg16 };

ArchId arch_from_string(const std::string& s);
std::string arch_to_string(ArchId a);

struct ArchSpec {
    ArchId arch;
    int64_t num_classes;
    int width, height, channels;
    std::vector<float> norm_mean, norm_std;  // input stage, per channel
    std::string dataset_id;
};

struct DatasetSplits {
    std::string dataset_id;
    int64_t num_classes;
    int width, height, channels;
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
};

/// Registry row for one supported dataset (shape, class count,
/// normalization stats, expected cache files).
struct DatasetInfo {
    std::string id;
    int64_t num_classes;
    int width, height, channels;
    std::vector<float> norm_mean, norm_std;
    bool desk_scale;  // acceptance tier vs --full-scale only
};

const std::vector<DatasetInfo>& dataset_registry();
const DatasetInfo& dataset_info(const std::string& id);

/// Cache root: $FORGE_DATA_DIR if set, else ./data.
std::filesystem::path default_cache_root();

/// Loads and checksums a dataset from <cache_root>/<id>/. Throws with
/// fetch instructions when files are missing and an integrity error when
/// checksums do not match.
DatasetSplits load_dataset(const std::string& id,
                           const std::filesystem::path& cache_root = default_cache_root());

ArchSpec make_arch_spec(ArchId arch, const DatasetSplits& data);
ArchSpec make_arch_spec(ArchId arch, const DatasetInfo& info);

/// num_classes / input shape must match the dataset the spec claims.
void validate_pairing(const ArchSpec& spec, const DatasetSplits& data);

nn::Model build_model(const ArchSpec& spec, uint64_t seed);

/// Raw 8-bit images to a [n, c, h, w] float tensor (values 0..255; the
/// model's input stage normalizes).
Tensor images_to_tensor(const std::vector<const Image*>& images);

/// Top-1 accuracy over a split; eval mode, weights untouched.
double evaluate(nn::Model& model, const std::vector<LabeledImage>& split,
                int64_t batch_size = 256);

/// Predicted class per image (eval mode).
std::vector<int32_t> predict(nn::Model& model, const std::vector<const Image*>& images,
                             int64_t batch_size = 256);

}  // namespace forge::zoo
