#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "forge/core/hash.hpp"
#include "forge/core/rng.hpp"
#include "forge/core/tar.hpp"
#include "forge/trigger/trigger.hpp"

namespace forge::trigger {

using json = nlohmann::json;

namespace {
constexpr const char* kSchemaVersion = "1.0.0";
constexpr const char* kFormat = "wmforge-key";
}  // namespace

std::string current_utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

TriggerFactory::TriggerFactory(const zoo::DatasetSplits& data, const TriggerSpec& spec)
    : data_(data), spec_(spec) {
    validate_spec(spec, data.num_classes);
    for (int64_t i = 0; i < static_cast<int64_t>(data.train.size()); ++i) {
        const int label = data.train[static_cast<size_t>(i)].label;
        if (label == spec.source_class_a) class_a_.push_back(i);
        if (label == spec.source_class_b) class_b_.push_back(i);
    }
    auto permuted = [&](size_t n, const char* tag) {
        std::vector<int64_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = static_cast<int64_t>(i);
        Rng rng(derive_seed(spec.seed, std::string("trigger/") + tag));
        rng.shuffle(order);
        return order;
    };
    order_a_ = permuted(class_a_.size(), "perm_a");
    order_b_ = permuted(class_b_.size(), "perm_b");
}

LabeledImage TriggerFactory::make(int64_t index, Provenance* prov) const {
    if (class_a_.empty())
        throw std::runtime_error("source class " + std::to_string(spec_.source_class_a) +
                                 " has no instances");
    if (class_b_.empty())
        throw std::runtime_error("source class " + std::to_string(spec_.source_class_b) +
                                 " has no instances");
    const int64_t pa = order_a_[static_cast<size_t>(index % class_a_size())];
    const int64_t pb = order_b_[static_cast<size_t>(index % class_b_size())];
    if (prov) *prov = Provenance{pa, pb};
    const Image& a = data_.train[static_cast<size_t>(class_a_[static_cast<size_t>(pa)])].image;
    const Image& b = data_.train[static_cast<size_t>(class_b_[static_cast<size_t>(pb)])].image;
    Image fused = spec_.mode == FusionMode::direct
                      ? fuse_direct(a, b)
                      : fuse_invisible(a, b, spec_.transparency);
    return LabeledImage{std::move(fused), spec_.target_class};
}

WatermarkKey build_watermark_key(const zoo::DatasetSplits& data, const TriggerSpec& spec) {
    TriggerFactory factory(data, spec);
    if (factory.class_a_size() < spec.count)
        throw std::runtime_error(
            "source class " + std::to_string(spec.source_class_a) + " has only " +
            std::to_string(factory.class_a_size()) + " instances, need " +
            std::to_string(spec.count));
    if (factory.class_b_size() < spec.count)
        throw std::runtime_error(
            "source class " + std::to_string(spec.source_class_b) + " has only " +
            std::to_string(factory.class_b_size()) + " instances, need " +
            std::to_string(spec.count));

    WatermarkKey key;
    key.spec = spec;
    key.dataset_id = data.dataset_id;
    key.created_at = current_utc_timestamp();
    key.triggers.reserve(static_cast<size_t>(spec.count));
    key.provenance.reserve(static_cast<size_t>(spec.count));
    for (int64_t k = 0; k < spec.count; ++k) {
        Provenance prov;
        key.triggers.push_back(factory.make(k, &prov));
        key.provenance.push_back(prov);
    }
    return key;
}

std::vector<LabeledImage> training_triggers(const zoo::DatasetSplits& data,
                                            const TriggerSpec& spec, int64_t needed) {
    TriggerFactory factory(data, spec);
    std::vector<LabeledImage> out;
    out.reserve(static_cast<size_t>(needed));
    for (int64_t k = 0; k < needed; ++k) out.push_back(factory.make(spec.count + k));
    return out;
}

namespace {

std::string image_name(size_t idx, int channels) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "triggers/%06zu.%s", idx,
                  channels == 1 ? "pgm" : "ppm");
    return buf;
}

}  // namespace

std::vector<uint8_t> serialize_key(const WatermarkKey& key) {
    json spec{
        {"source_class_a", key.spec.source_class_a},
        {"source_class_b", key.spec.source_class_b},
        {"target_class", key.spec.target_class},
        {"mode", mode_to_string(key.spec.mode)},
        {"transparency", key.spec.transparency},
        {"count", key.spec.count},
        {"seed", key.spec.seed},
    };
    json prov = json::array();
    for (const auto& p : key.provenance) prov.push_back({p.base_a, p.base_b});
    json images = json::array();

    TarWriter tar;
    std::vector<std::vector<uint8_t>> encoded;
    for (size_t i = 0; i < key.triggers.size(); ++i) {
        encoded.push_back(encode_pnm(key.triggers[i].image));
        images.push_back({{"file", image_name(i, key.triggers[i].image.channels)},
                          {"sha256", sha256_hex(std::span<const uint8_t>(encoded.back()))},
                          {"label", key.triggers[i].label}});
    }
    json manifest{
        {"schema_version", kSchemaVersion},
        {"format", kFormat},
        {"dataset_id", key.dataset_id},
        {"created_at", key.created_at},
        {"spec", spec},
        {"provenance", prov},
        {"images", images},
    };
    tar.add("manifest.json", manifest.dump(2) + "\n");
    for (size_t i = 0; i < encoded.size(); ++i)
        tar.add(image_name(i, key.triggers[i].image.channels), encoded[i]);
    return tar.finish();
}

WatermarkKey deserialize_key(const std::vector<uint8_t>& bytes) {
    const auto entries = tar_read(bytes);
    const std::vector<uint8_t>* manifest_bytes = nullptr;
    for (const auto& e : entries)
        if (e.name == "manifest.json") manifest_bytes = &e.bytes;
    if (!manifest_bytes) throw std::runtime_error("key archive: manifest.json missing");

    json manifest;
    WatermarkKey key;
    try {
        manifest = json::parse(*manifest_bytes);
        if (manifest.at("format").get<std::string>() != kFormat)
            throw std::runtime_error("not a watermark key archive");
        const std::string ver = manifest.at("schema_version").get<std::string>();
        if (ver.substr(0, ver.find('.')) != std::string(kSchemaVersion).substr(0, 1))
            throw std::runtime_error("unsupported key schema major version " + ver);

        const json& spec = manifest.at("spec");
        key.spec.source_class_a = spec.at("source_class_a").get<int>();
        key.spec.source_class_b = spec.at("source_class_b").get<int>();
        key.spec.target_class = spec.at("target_class").get<int>();
        key.spec.mode = mode_from_string(spec.at("mode").get<std::string>());
        key.spec.transparency = spec.at("transparency").get<double>();
        key.spec.count = spec.at("count").get<int64_t>();
        key.spec.seed = spec.at("seed").get<uint64_t>();
        key.dataset_id = manifest.at("dataset_id").get<std::string>();
        key.created_at = manifest.at("created_at").get<std::string>();
        for (const auto& p : manifest.at("provenance"))
            key.provenance.push_back({p.at(0).get<int64_t>(), p.at(1).get<int64_t>()});
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("key archive schema error: ") + e.what());
    }

    for (const auto& entry : manifest.at("images")) {
        const std::string file = entry.at("file").get<std::string>();
        const std::string want = entry.at("sha256").get<std::string>();
        const std::vector<uint8_t>* payload = nullptr;
        for (const auto& e : entries)
            if (e.name == file) payload = &e.bytes;
        if (!payload)
            throw std::runtime_error("key archive integrity failure: missing " + file);
        const std::string got = sha256_hex(std::span<const uint8_t>(*payload));
        if (got != want)
            throw std::runtime_error("key archive integrity failure: " + file +
                                     " sha256 " + got + " != manifest " + want);
        key.triggers.push_back({decode_pnm(*payload), entry.at("label").get<int>()});
    }
    if (static_cast<int64_t>(key.triggers.size()) != key.spec.count)
        throw std::runtime_error("key archive: trigger count differs from spec.count");
    for (const auto& t : key.triggers)
        if (t.label != key.spec.target_class)
            throw std::runtime_error("key archive: trigger label differs from target class");
    return key;
}

void save_key(const WatermarkKey& key, const std::filesystem::path& path) {
    auto bytes = serialize_key(key);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

WatermarkKey load_key(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return deserialize_key(bytes);
}

bool keys_equal(const WatermarkKey& a, const WatermarkKey& b, bool ignore_timestamp) {
    if (a.spec.source_class_a != b.spec.source_class_a ||
        a.spec.source_class_b != b.spec.source_class_b ||
        a.spec.target_class != b.spec.target_class || a.spec.mode != b.spec.mode ||
        a.spec.transparency != b.spec.transparency || a.spec.count != b.spec.count ||
        a.spec.seed != b.spec.seed || a.dataset_id != b.dataset_id)
        return false;
    if (!ignore_timestamp && a.created_at != b.created_at) return false;
    if (a.triggers.size() != b.triggers.size() ||
        a.provenance.size() != b.provenance.size())
        return false;
    for (size_t i = 0; i < a.triggers.size(); ++i) {
        if (a.triggers[i].label != b.triggers[i].label) return false;
        if (!a.triggers[i].image.same_shape(b.triggers[i].image)) return false;
        if (a.triggers[i].image.pixels != b.triggers[i].image.pixels) return false;
        if (a.provenance[i].base_a != b.provenance[i].base_a ||
            a.provenance[i].base_b != b.provenance[i].base_b)
            return false;
    }
    return true;
}

std::string key_digest(const WatermarkKey& key) {
    auto bytes = serialize_key(key);
    return sha256_hex(std::span<const uint8_t>(bytes));
}

}  // namespace forge::trigger
