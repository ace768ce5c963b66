#include "forge/nn/serialize.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "forge/core/hash.hpp"

namespace forge::nn {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'F', 'O', 'R', 'G', 'E', 'M', 'L', '1'};
constexpr const char* kSchemaVersion = "1.0.0";

json tensor_dir(const std::vector<ParamRef>& refs) {
    json arr = json::array();
    for (const auto& r : refs)
        arr.push_back({{"name", r.name}, {"shape", r.value->shape()}});
    return arr;
}

void append_blobs(std::vector<uint8_t>& out, const std::vector<ParamRef>& refs) {
    for (const auto& r : refs) {
        const size_t bytes = static_cast<size_t>(r.value->numel()) * sizeof(float);
        const size_t at = out.size();
        out.resize(at + bytes);
        std::memcpy(out.data() + at, r.value->data(), bytes);
    }
}

void read_blobs(const std::vector<uint8_t>& in, size_t& pos, const json& dir,
                const std::vector<ParamRef>& refs, const char* what) {
    if (dir.size() != refs.size())
        throw std::runtime_error(std::string("model file: ") + what + " count mismatch");
    for (size_t i = 0; i < refs.size(); ++i) {
        if (dir[i].at("name").get<std::string>() != refs[i].name)
            throw std::runtime_error("model file: tensor name mismatch at " + refs[i].name);
        const auto shape = dir[i].at("shape").get<std::vector<int64_t>>();
        if (shape != refs[i].value->shape())
            throw std::runtime_error("model file: tensor shape mismatch at " + refs[i].name);
        const size_t bytes = static_cast<size_t>(refs[i].value->numel()) * sizeof(float);
        if (pos + bytes > in.size())
            throw std::runtime_error("model file: truncated blob section");
        std::memcpy(refs[i].value->data(), in.data() + pos, bytes);
        pos += bytes;
    }
}

}  // namespace

std::vector<uint8_t> serialize_model(Model& model, const zoo::ArchSpec& spec,
                                     const std::string& manifest_json) {
    json header{
        {"schema_version", kSchemaVersion},
        {"arch", zoo::arch_to_string(spec.arch)},
        {"num_classes", spec.num_classes},
        {"input", {{"width", spec.width}, {"height", spec.height},
                   {"channels", spec.channels}}},
        {"dataset_id", spec.dataset_id},
        {"norm_mean", spec.norm_mean},
        {"norm_std", spec.norm_std},
        {"params", tensor_dir(model.params())},
        {"buffers", tensor_dir(model.buffers())},
    };
    if (!manifest_json.empty()) header["manifest"] = json::parse(manifest_json);

    const std::string hs = header.dump();
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    uint64_t len = hs.size();
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(len >> (8 * i)));
    out.insert(out.end(), hs.begin(), hs.end());
    append_blobs(out, model.params());
    append_blobs(out, model.buffers());
    return out;
}

SavedModel deserialize_model(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw std::runtime_error("not a model file (bad magic)");
    uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= uint64_t(bytes[8 + i]) << (8 * i);
    if (16 + len > bytes.size()) throw std::runtime_error("model file: truncated header");
    const json header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + len);

    const std::string ver = header.at("schema_version").get<std::string>();
    if (ver.substr(0, ver.find('.')) != std::string(kSchemaVersion).substr(0, 1))
        throw std::runtime_error("model file: unsupported schema major version " + ver);

    zoo::ArchSpec spec;
    spec.arch = zoo::arch_from_string(header.at("arch").get<std::string>());
    spec.num_classes = header.at("num_classes").get<int64_t>();
    spec.width = header.at("input").at("width").get<int>();
    spec.height = header.at("input").at("height").get<int>();
    spec.channels = header.at("input").at("channels").get<int>();
    spec.dataset_id = header.at("dataset_id").get<std::string>();
    spec.norm_mean = header.at("norm_mean").get<std::vector<float>>();
    spec.norm_std = header.at("norm_std").get<std::vector<float>>();

    SavedModel out{zoo::build_model(spec, /*seed=*/0), spec, ""};
    size_t pos = 16 + len;
    read_blobs(bytes, pos, header.at("params"), out.model.params(), "param");
    read_blobs(bytes, pos, header.at("buffers"), out.model.buffers(), "buffer");
    if (header.contains("manifest")) out.manifest_json = header["manifest"].dump();
    return out;
}

void save_model(Model& model, const zoo::ArchSpec& spec,
                const std::filesystem::path& path, const std::string& manifest_json) {
    auto bytes = serialize_model(model, spec, manifest_json);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::string model_digest(Model& model, const zoo::ArchSpec& spec) {
    auto bytes = serialize_model(model, spec);
    return sha256_hex(std::span<const uint8_t>(bytes));
}

Model clone_model(Model& model, const zoo::ArchSpec& spec) {
    return deserialize_model(serialize_model(model, spec)).model;
}

}  // namespace forge::nn
