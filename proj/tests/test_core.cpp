#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "forge/core/hash.hpp"
#include "forge/core/image.hpp"
#include "forge/core/rng.hpp"
#include "forge/core/tar.hpp"
#include "forge/core/tensor.hpp"
#include "test_util.hpp"

using namespace forge;
namespace fs = std::filesystem;

TEST_CASE("tensor shape and reshape") {
    Tensor t({2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK(t.shape_str() == "(2,3,4)");
    t.reshape({6, 4});
    CHECK(t.dim(0) == 6);
    CHECK_THROWS(t.reshape({5, 5}));
}

TEST_CASE("rng determinism and stage derivation") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    CHECK(derive_seed(1, "stage/x") == derive_seed(1, "stage/x"));
    CHECK(derive_seed(1, "stage/x") != derive_seed(1, "stage/y"));
    CHECK(derive_seed(1, "stage/x") != derive_seed(2, "stage/x"));
}

TEST_CASE("rng bounded draws stay in range") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.next_below(10) < 10);
        const double u = rng.next_real();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("sha256 known vector") {
    // FIPS 180-2 test vector for "abc"
    CHECK(sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("pnm round trip") {
    Image img(5, 3, 1);
    for (size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = static_cast<uint8_t>(i * 17 % 256);
    Image back = decode_pnm(encode_pnm(img));
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.pixels == img.pixels);

    Image rgb(4, 4, 3, 200);
    rgb.at(2, 1, 1) = 9;
    Image rgb_back = decode_pnm(encode_pnm(rgb));
    CHECK(rgb_back.channels == 3);
    CHECK(rgb_back.at(2, 1, 1) == 9);
}

TEST_CASE("pnm rejects truncated payload") {
    Image img(8, 8, 1, 42);
    auto bytes = encode_pnm(img);
    bytes.resize(bytes.size() - 10);
    CHECK_THROWS(decode_pnm(bytes));
}

TEST_CASE("downsample2x area average rounds half-up") {
    Image img(4, 2, 1);
    // first block: 0,1,2,3 -> avg 1.5 -> 2; second: all 9 -> 9
    img.at(0, 0, 0) = 0; img.at(1, 0, 0) = 1;
    img.at(0, 1, 0) = 2; img.at(1, 1, 0) = 3;
    img.at(2, 0, 0) = 9; img.at(3, 0, 0) = 9;
    img.at(2, 1, 0) = 9; img.at(3, 1, 0) = 9;
    Image down = downsample2x(img);
    CHECK(down.width == 2);
    CHECK(down.height == 1);
    CHECK(down.at(0, 0, 0) == 2);
    CHECK(down.at(1, 0, 0) == 9);
}

TEST_CASE("tar round trip and corruption detection") {
    TarWriter tar;
    tar.add("manifest.json", std::string("{\"k\":1}"));
    std::vector<uint8_t> blob(700, 0xAB);
    tar.add("dir/blob.bin", blob);
    auto bytes = tar.finish();
    CHECK(bytes.size() % 512 == 0);

    auto entries = tar_read(bytes);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].name == "manifest.json");
    CHECK(entries[1].name == "dir/blob.bin");
    CHECK(entries[1].bytes == blob);

    SUBCASE("truncation") {
        std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + 600);
        CHECK_THROWS(tar_read(cut));
    }
    SUBCASE("header corruption") {
        bytes[30] ^= 0x5A;  // inside the mode field of the first header
        CHECK(testutil::thrown_message([&] { tar_read(bytes); }).find("checksum") !=
              std::string::npos);
    }
}

TEST_CASE("tar archives are byte stable") {
    auto make = [] {
        TarWriter t;
        t.add("a.txt", std::string("hello"));
        return t.finish();
    };
    CHECK(make() == make());
}
