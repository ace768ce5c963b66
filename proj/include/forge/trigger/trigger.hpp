#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/core/image.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::trigger {

enum class FusionMode { direct, invisible };

FusionMode mode_from_string(const std::string& s);
std::string mode_to_string(FusionMode m);

/// Recipe for one watermark key: which two source classes get fused,
/// which class the triggers claim, and how.
struct TriggerSpec {
    int source_class_a = 0;
    int source_class_b = 0;
    int target_class = 0;
    FusionMode mode = FusionMode::invisible;
    double transparency = 0.5;  // invisible blend weight toward source a
    int64_t count = 90;
    uint64_t seed = 0;
};

void validate_spec(const TriggerSpec& spec, int64_t num_classes);

/// Quadrant composition on a doubled canvas: a in the top-left, b in the
/// bottom-right, the other two quadrants white.
Image compose_direct_canvas(const Image& a, const Image& b);

/// Canvas composition followed by 2x area downsampling back to the
/// dataset's native shape.
Image fuse_direct(const Image& a, const Image& b);

/// Per-pixel blend transparency*a + (1-transparency)*b, rounded half-up.
Image fuse_invisible(const Image& a, const Image& b, double transparency);

/// Which base instances (index within each source-class subset, in
/// dataset order) produced a trigger.
struct Provenance {
    int64_t base_a = 0;
    int64_t base_b = 0;
};

struct WatermarkKey {
    TriggerSpec spec;
    std::string dataset_id;
    std::string created_at;  // ISO-8601 UTC
    std::vector<LabeledImage> triggers;
    std::vector<Provenance> provenance;
};

/// Deterministic, index-addressable trigger sequence over a dataset.
/// Pairs are drawn without replacement (per class) until a class subset
/// is exhausted, then the permutation wraps. The key takes the first
/// spec.count entries; training mixes continue the same sequence, so
/// validation triggers never appear in the training set.
class TriggerFactory {
public:
    TriggerFactory(const zoo::DatasetSplits& data, const TriggerSpec& spec);

    LabeledImage make(int64_t index, Provenance* prov = nullptr) const;
    int64_t class_a_size() const { return static_cast<int64_t>(class_a_.size()); }
    int64_t class_b_size() const { return static_cast<int64_t>(class_b_.size()); }

private:
    const zoo::DatasetSplits& data_;
    TriggerSpec spec_;
    std::vector<int64_t> class_a_, class_b_;  // dataset indices, shuffled
    std::vector<int64_t> order_a_, order_b_;  // within-class index per draw
};

WatermarkKey build_watermark_key(const zoo::DatasetSplits& data, const TriggerSpec& spec);

/// Triggers for the training mix: entries [spec.count, spec.count+needed)
/// of the same deterministic sequence.
std::vector<LabeledImage> training_triggers(const zoo::DatasetSplits& data,
                                            const TriggerSpec& spec, int64_t needed);

/// Key archive: a tar container with manifest.json (spec, provenance,
/// per-image sha256) plus the trigger rasters as PGM/PPM.
void save_key(const WatermarkKey& key, const std::filesystem::path& path);
WatermarkKey load_key(const std::filesystem::path& path);

std::vector<uint8_t> serialize_key(const WatermarkKey& key);
WatermarkKey deserialize_key(const std::vector<uint8_t>& bytes);

/// Field-for-field equality including pixel bytes; created_at excluded
/// when ignore_timestamp.
bool keys_equal(const WatermarkKey& a, const WatermarkKey& b,
                bool ignore_timestamp = false);

/// sha256 of the serialized archive (manifests reference keys by this).
std::string key_digest(const WatermarkKey& key);

std::string current_utc_timestamp();

}  // namespace forge::trigger
