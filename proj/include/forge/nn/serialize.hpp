#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forge/zoo/zoo.hpp"

namespace forge::nn {

/// Model container: magic, JSON header (arch id, classes, input shape,
/// normalization stats, tensor directory, optional embedded training
/// manifest), then raw float32 blobs in directory order.
struct SavedModel {
    Model model;
    zoo::ArchSpec spec;
    std::string manifest_json;  // empty when none embedded
};

std::vector<uint8_t> serialize_model(Model& model, const zoo::ArchSpec& spec,
                                     const std::string& manifest_json = "");
SavedModel deserialize_model(const std::vector<uint8_t>& bytes);

void save_model(Model& model, const zoo::ArchSpec& spec,
                const std::filesystem::path& path,
                const std::string& manifest_json = "");
SavedModel load_model(const std::filesystem::path& path);

/// sha256 of the serialized container; the weight-identity check used by
/// the attack bench.
std::string model_digest(Model& model, const zoo::ArchSpec& spec);

/// Deep copy via serialize/deserialize.
Model clone_model(Model& model, const zoo::ArchSpec& spec);

}  // namespace forge::nn
