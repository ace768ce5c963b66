#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "forge/core/hash.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::zoo {

namespace fs = std::filesystem;

const std::vector<DatasetInfo>& dataset_registry() {
    static const std::vector<DatasetInfo> reg = {
        {"mnist", 10, 28, 28, 1, {0.1307f}, {0.3081f}, true},
        {"cifar10", 10, 32, 32, 3,
         {0.4914f, 0.4822f, 0.4465f}, {0.2470f, 0.2435f, 0.2616f}, true},
        {"cifar100", 100, 32, 32, 3,
         {0.5071f, 0.4865f, 0.4409f}, {0.2673f, 0.2564f, 0.2762f}, false},
        {"tiny-imagenet", 200, 64, 64, 3,
         {0.4802f, 0.4481f, 0.3975f}, {0.2770f, 0.2691f, 0.2821f}, false},
    };
    return reg;
}

const DatasetInfo& dataset_info(const std::string& id) {
    for (const auto& d : dataset_registry())
        if (d.id == id) return d;
    std::string known;
    for (const auto& d : dataset_registry()) known += (known.empty() ? "" : ", ") + d.id;
    throw std::invalid_argument("unknown dataset '" + id + "' (known: " + known + ")");
}

fs::path default_cache_root() {
    if (const char* env = std::getenv("FORGE_DATA_DIR")) return fs::path(env);
    return fs::path("data");
}

namespace {

// Reads a file, transparently gunzipping *.gz. Returns decompressed bytes.
std::vector<uint8_t> read_maybe_gz(const fs::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::vector<uint8_t> out;
    std::array<uint8_t, 1 << 16> buf;
    int got;
    while ((got = gzread(f, buf.data(), buf.size())) > 0)
        out.insert(out.end(), buf.begin(), buf.begin() + got);
    const bool error = got < 0;
    gzclose(f);
    if (error) throw std::runtime_error("decompression failed for " + path.string());
    return out;
}

// Picks <name> or <name>.gz from dir; throws with fetch instructions.
fs::path locate(const fs::path& dir, const std::string& name, const std::string& id) {
    if (fs::exists(dir / name)) return dir / name;
    if (fs::exists(dir / (name + ".gz"))) return dir / (name + ".gz");
    throw std::runtime_error(
        "dataset '" + id + "': missing file " + (dir / name).string() +
        "[.gz]\nFetch it with scripts/fetch_datasets.sh " + id +
        " or place the files under " + dir.string());
}

uint32_t read_be_u32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

// Canonical digests of the decompressed IDX payloads.
const std::map<std::string, std::string> kMnistSha256 = {
    {"train-images-idx3-ubyte",
     "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db"},
    {"train-labels-idx1-ubyte",
     "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5"},
    {"t10k-images-idx3-ubyte",
     "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7"},
    {"t10k-labels-idx1-ubyte",
     "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2"},
};

std::vector<uint8_t> read_verified_idx(const fs::path& dir, const std::string& name,
                                       const std::string& id) {
    auto bytes = read_maybe_gz(locate(dir, name, id));
    auto pinned = kMnistSha256.find(name);
    if (pinned != kMnistSha256.end()) {
        const std::string got = sha256_hex(std::span<const uint8_t>(bytes));
        if (got != pinned->second)
            throw std::runtime_error("integrity failure for " + name + ": sha256 " +
                                     got + " != expected " + pinned->second);
    }
    return bytes;
}

std::vector<LabeledImage> load_idx_split(const fs::path& dir, const std::string& images,
                                         const std::string& labels, const std::string& id) {
    auto img_bytes = read_verified_idx(dir, images, id);
    auto lbl_bytes = read_verified_idx(dir, labels, id);
    if (img_bytes.size() < 16 || read_be_u32(img_bytes.data()) != 0x803)
        throw std::runtime_error(images + ": not an idx3 image file");
    if (lbl_bytes.size() < 8 || read_be_u32(lbl_bytes.data()) != 0x801)
        throw std::runtime_error(labels + ": not an idx1 label file");
    const uint32_t count = read_be_u32(img_bytes.data() + 4);
    const uint32_t rows = read_be_u32(img_bytes.data() + 8);
    const uint32_t cols = read_be_u32(img_bytes.data() + 12);
    if (read_be_u32(lbl_bytes.data() + 4) != count)
        throw std::runtime_error(id + ": image/label count mismatch");
    if (img_bytes.size() != 16 + size_t(count) * rows * cols)
        throw std::runtime_error(images + ": truncated payload");

    std::vector<LabeledImage> out(count);
    for (uint32_t i = 0; i < count; ++i) {
        Image img(static_cast<int>(cols), static_cast<int>(rows), 1);
        std::memcpy(img.pixels.data(), img_bytes.data() + 16 + size_t(i) * rows * cols,
                    size_t(rows) * cols);
        out[i] = {std::move(img), static_cast<int>(lbl_bytes[8 + i])};
    }
    return out;
}

// CIFAR rows are <label bytes><R plane><G plane><B plane>; interleave to HWC.
void append_cifar_rows(std::vector<LabeledImage>& out, const std::vector<uint8_t>& bytes,
                       int label_bytes, int label_offset, const std::string& what) {
    constexpr int side = 32, chan = 3;
    const size_t row = static_cast<size_t>(label_bytes) + side * side * chan;
    if (bytes.size() % row != 0)
        throw std::runtime_error(what + ": unexpected file size");
    const size_t n = bytes.size() / row;
    for (size_t i = 0; i < n; ++i) {
        const uint8_t* p = bytes.data() + i * row;
        Image img(side, side, chan);
        for (int c = 0; c < chan; ++c)
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    img.at(x, y, c) = p[label_bytes + (c * side + y) * side + x];
        out.push_back({std::move(img), static_cast<int>(p[label_offset])});
    }
}

DatasetSplits load_cifar(const DatasetInfo& info, const fs::path& dir) {
    DatasetSplits s{info.id, info.num_classes, info.width, info.height, info.channels, {}, {}};
    if (info.id == "cifar10") {
        for (int b = 1; b <= 5; ++b) {
            const std::string name = "data_batch_" + std::to_string(b) + ".bin";
            append_cifar_rows(s.train, read_maybe_gz(locate(dir, name, info.id)), 1, 0, name);
        }
        append_cifar_rows(s.test, read_maybe_gz(locate(dir, "test_batch.bin", info.id)),
                          1, 0, "test_batch.bin");
    } else {  // cifar100: coarse label then fine label per row
        append_cifar_rows(s.train, read_maybe_gz(locate(dir, "train.bin", info.id)),
                          2, 1, "train.bin");
        append_cifar_rows(s.test, read_maybe_gz(locate(dir, "test.bin", info.id)),
                          2, 1, "test.bin");
    }
    return s;
}

// Prepared binary layout for tiny-imagenet (see scripts/prepare_tiny_imagenet.py):
// rows of <u16 little-endian label><64*64*3 HWC bytes>.
void append_tiny_rows(std::vector<LabeledImage>& out, const std::vector<uint8_t>& bytes,
                      const std::string& what) {
    constexpr size_t row = 2 + 64 * 64 * 3;
    if (bytes.size() % row != 0)
        throw std::runtime_error(what + ": unexpected file size");
    for (size_t i = 0; i < bytes.size() / row; ++i) {
        const uint8_t* p = bytes.data() + i * row;
        Image img(64, 64, 3);
        std::memcpy(img.pixels.data(), p + 2, 64 * 64 * 3);
        out.push_back({std::move(img), int(p[0]) | (int(p[1]) << 8)});
    }
}

}  // namespace

DatasetSplits load_dataset(const std::string& id, const fs::path& cache_root) {
    const DatasetInfo& info = dataset_info(id);
    const fs::path dir = cache_root / id;

    DatasetSplits s;
    if (id == "mnist") {
        s = DatasetSplits{info.id, info.num_classes, info.width, info.height,
                          info.channels, {}, {}};
        s.train = load_idx_split(dir, "train-images-idx3-ubyte",
                                 "train-labels-idx1-ubyte", id);
        s.test = load_idx_split(dir, "t10k-images-idx3-ubyte",
                                "t10k-labels-idx1-ubyte", id);
    } else if (id == "cifar10" || id == "cifar100") {
        s = load_cifar(info, dir);
    } else {  // tiny-imagenet
        s = DatasetSplits{info.id, info.num_classes, info.width, info.height,
                          info.channels, {}, {}};
        append_tiny_rows(s.train, read_maybe_gz(locate(dir, "train.bin", id)), "train.bin");
        append_tiny_rows(s.test, read_maybe_gz(locate(dir, "test.bin", id)), "test.bin");
    }

    for (const auto& li : s.train)
        if (li.label < 0 || li.label >= s.num_classes)
            throw std::runtime_error(id + ": train label out of range");
    for (const auto& li : s.test)
        if (li.label < 0 || li.label >= s.num_classes)
            throw std::runtime_error(id + ": test label out of range");
    return s;
}

}  // namespace forge::zoo
