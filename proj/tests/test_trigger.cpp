#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "forge/core/tar.hpp"
#include "forge/trigger/trigger.hpp"
#include "test_util.hpp"

using namespace forge;
using namespace forge::trigger;
namespace fs = std::filesystem;

namespace {

Image constant_image(int side, uint8_t v, int channels = 1) {
    return Image(side, side, channels, v);
}

fs::path temp_file(const std::string& name) {
    auto p = fs::temp_directory_path() / ("wmforge_test_" + name);
    fs::remove(p);
    return p;
}

}  // namespace

TEST_CASE("direct fusion: quadrant layout on the canvas, then 2x downsample") {
    Image a = constant_image(2, 0);
    Image b = constant_image(2, 9);

    Image canvas = compose_direct_canvas(a, b);
    REQUIRE(canvas.width == 4);
    REQUIRE(canvas.height == 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const uint8_t expect = (x < 2 && y < 2)    ? 0
                                   : (x >= 2 && y >= 2) ? 9
                                                        : 255;
            CHECK(canvas.at(x, y, 0) == expect);
        }

    Image fused = fuse_direct(a, b);
    REQUIRE(fused.width == 2);
    REQUIRE(fused.height == 2);
    CHECK(fused.at(0, 0, 0) == 0);
    CHECK(fused.at(1, 1, 0) == 9);
    CHECK(fused.at(1, 0, 0) == 255);
    CHECK(fused.at(0, 1, 0) == 255);
}

TEST_CASE("direct fusion with a == b puts the same pixels in both corners") {
    Rng rng(4);
    Image a(6, 6, 3);
    for (auto& px : a.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    Image canvas = compose_direct_canvas(a, a);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(canvas.at(x, y, c) == canvas.at(x + 6, y + 6, c));
}

TEST_CASE("quadrant exactness holds for random base instances") {
    Rng rng(9);
    Image a(8, 8, 1), b(8, 8, 1);
    for (auto& px : a.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    for (auto& px : b.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    Image canvas = compose_direct_canvas(a, b);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const bool top_left = x < 8 && y < 8;
            const bool bottom_right = x >= 8 && y >= 8;
            if (top_left) CHECK(canvas.at(x, y, 0) == a.at(x, y, 0));
            else if (bottom_right) CHECK(canvas.at(x, y, 0) == b.at(x - 8, y - 8, 0));
            else CHECK(canvas.at(x, y, 0) == 255);
        }
}

TEST_CASE("direct fusion rejects shape mismatch") {
    CHECK_THROWS(fuse_direct(constant_image(4, 0), constant_image(6, 0)));
}

TEST_CASE("invisible fusion arithmetic") {
    Image a = constant_image(1, 100);
    Image b = constant_image(1, 200);
    CHECK(fuse_invisible(a, b, 0.5).pixels[0] == 150);
    CHECK(fuse_invisible(a, b, 0.7).pixels[0] == 130);
    CHECK(fuse_invisible(a, b, 1.0).pixels == a.pixels);
    CHECK(fuse_invisible(a, b, 0.0).pixels == b.pixels);
    CHECK_THROWS(fuse_invisible(a, b, 1.5));
    CHECK_THROWS(fuse_invisible(a, b, -0.1));
}

TEST_CASE("invisible blend exactness and convex-hull property") {
    Rng rng(21);
    Image a(8, 8, 3), b(8, 8, 3);
    for (auto& px : a.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    for (auto& px : b.pixels) px = static_cast<uint8_t>(rng.next_below(256));
    for (double r : {0.0, 0.31, 0.5, 0.77, 1.0}) {
        Image f = fuse_invisible(a, b, r);
        for (size_t i = 0; i < f.pixels.size(); ++i) {
            const double exact = r * a.pixels[i] + (1 - r) * b.pixels[i];
            CHECK(f.pixels[i] == static_cast<uint8_t>(std::floor(exact + 0.5)));
            CHECK(f.pixels[i] >= std::min(a.pixels[i], b.pixels[i]));
            CHECK(f.pixels[i] <= std::max(a.pixels[i], b.pixels[i]));
        }
    }
}

TEST_CASE("trigger spec label discipline") {
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 3;
    spec.target_class = 0;  // collides with a source
    CHECK_THROWS(validate_spec(spec, 10));
    spec.target_class = 3;
    CHECK_THROWS(validate_spec(spec, 10));
    spec.target_class = 1;
    CHECK_NOTHROW(validate_spec(spec, 10));
    spec.source_class_b = 0;  // sources equal
    CHECK_THROWS(validate_spec(spec, 10));
}

TEST_CASE("watermark key build: determinism, labels, provenance") {
    auto data = testutil::make_synthetic_dataset(10, 50, 5);
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 3;
    spec.target_class = 1;
    spec.mode = FusionMode::invisible;
    spec.transparency = 0.5;
    spec.count = 20;
    spec.seed = 99;

    auto key1 = build_watermark_key(data, spec);
    auto key2 = build_watermark_key(data, spec);
    CHECK(keys_equal(key1, key2, /*ignore_timestamp=*/true));
    CHECK(key1.triggers.size() == 20);
    for (const auto& t : key1.triggers) CHECK(t.label == 1);

    // same-timestamp keys serialize to identical archive bytes
    key2.created_at = key1.created_at;
    CHECK(serialize_key(key1) == serialize_key(key2));

    // without-replacement draw within the key
    std::set<int64_t> seen_a, seen_b;
    for (const auto& p : key1.provenance) {
        CHECK(p.base_a >= 0);
        CHECK(p.base_a < 50);
        seen_a.insert(p.base_a);
        seen_b.insert(p.base_b);
    }
    CHECK(seen_a.size() == key1.provenance.size());
    CHECK(seen_b.size() == key1.provenance.size());

    // a different seed produces different pairings
    spec.seed = 100;
    auto key3 = build_watermark_key(data, spec);
    CHECK_FALSE(keys_equal(key1, key3, true));
}

TEST_CASE("key build fails naming the deficient class") {
    auto data = testutil::make_synthetic_dataset(10, 15, 5);
    TriggerSpec spec;
    spec.source_class_a = 2;
    spec.source_class_b = 7;
    spec.target_class = 1;
    spec.count = 16;  // only 15 instances per class
    const std::string msg =
        testutil::thrown_message([&] { build_watermark_key(data, spec); });
    CHECK(msg.find("class 2") != std::string::npos);
    CHECK(msg.find("15") != std::string::npos);
}

TEST_CASE("training triggers continue the sequence past the key") {
    auto data = testutil::make_synthetic_dataset(10, 60, 5);
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 3;
    spec.target_class = 1;
    spec.count = 10;
    spec.seed = 7;

    auto key = build_watermark_key(data, spec);
    auto extra = training_triggers(data, spec, 30);
    CHECK(extra.size() == 30);
    // no training trigger duplicates a key trigger (disjoint base pairs)
    for (const auto& t : extra) {
        CHECK(t.label == 1);
        for (const auto& kt : key.triggers)
            CHECK(t.image.pixels != kt.image.pixels);
    }
}

TEST_CASE("key archive round trip is field-for-field identical") {
    auto data = testutil::make_synthetic_dataset(10, 30, 5);
    TriggerSpec spec;
    spec.source_class_a = 4;
    spec.source_class_b = 8;
    spec.target_class = 2;
    spec.mode = FusionMode::direct;
    spec.count = 12;
    spec.seed = 3;
    auto key = build_watermark_key(data, spec);

    const auto path = temp_file("key_roundtrip.wmkey");
    save_key(key, path);
    auto loaded = load_key(path);
    CHECK(keys_equal(key, loaded));
    fs::remove(path);
}

TEST_CASE("truncated key archive fails integrity") {
    auto data = testutil::make_synthetic_dataset(10, 30, 5);
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 5;
    spec.target_class = 9;
    spec.count = 8;
    auto bytes = serialize_key(build_watermark_key(data, spec));
    bytes.resize(bytes.size() - 700);
    CHECK_THROWS(deserialize_key(bytes));
}

TEST_CASE("flipped pixel fails the per-image checksum") {
    auto data = testutil::make_synthetic_dataset(10, 30, 5);
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 5;
    spec.target_class = 9;
    spec.count = 4;
    auto entries = tar_read(serialize_key(build_watermark_key(data, spec)));

    TarWriter rewritten;
    for (auto& e : entries) {
        if (e.name == "triggers/000002.pgm") e.bytes[e.bytes.size() / 2] ^= 0xFF;
        rewritten.add(e.name, e.bytes);
    }
    const std::string msg =
        testutil::thrown_message([&] { deserialize_key(rewritten.finish()); });
    CHECK(msg.find("integrity") != std::string::npos);
    CHECK(msg.find("sha256") != std::string::npos);
}

TEST_CASE("manifest without target_class is a schema error") {
    auto data = testutil::make_synthetic_dataset(10, 30, 5);
    TriggerSpec spec;
    spec.source_class_a = 0;
    spec.source_class_b = 5;
    spec.target_class = 9;
    spec.count = 2;
    auto key = build_watermark_key(data, spec);
    auto entries = tar_read(serialize_key(key));

    TarWriter rewritten;
    for (auto& e : entries) {
        if (e.name == "manifest.json") {
            std::string text(e.bytes.begin(), e.bytes.end());
            const auto at = text.find("\"target_class\"");
            REQUIRE(at != std::string::npos);
            const auto comma = text.find(',', at);
            text.erase(at, comma - at + 1);
            rewritten.add(e.name, text);
        } else {
            rewritten.add(e.name, e.bytes);
        }
    }
    const std::string msg = testutil::thrown_message(
        [&] { deserialize_key(rewritten.finish()); });
    CHECK(msg.find("schema") != std::string::npos);
}
