#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>

#include "forge/nn/nn.hpp"
#include "forge/nn/optim.hpp"
#include "forge/nn/serialize.hpp"
#include "forge/zoo/zoo.hpp"
#include "test_util.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

Tensor random_input(std::vector<int64_t> shape, uint64_t seed) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rng.next_normal());
    return t;
}

float model_loss(nn::Model& m, const Tensor& x, const std::vector<int32_t>& y) {
    Tensor logits = m.forward(x, /*training=*/true);
    return nn::softmax_xent_loss(logits, y).loss;
}

// Central-difference estimate at a single coordinate. Returns false when
// the secant does not converge under step halving, which happens when the
// perturbation crosses a relu/maxpool kink; those coordinates carry no
// usable finite-difference signal and are skipped.
bool central_difference(const std::function<float()>& loss, float& coord, float* fd_out) {
    const float orig = coord;
    auto secant = [&](float h) {
        coord = orig + h;
        const float lp = loss();
        coord = orig - h;
        const float lm = loss();
        coord = orig;
        return (lp - lm) / (2 * h);
    };
    const float fd1 = secant(2e-3f);
    const float fd2 = secant(1e-3f);
    if (std::abs(fd1 - fd2) > 0.2f * std::max({std::abs(fd1), std::abs(fd2), 0.05f}))
        return false;
    *fd_out = fd2;
    return true;
}

// Checks a sample of coordinates per parameter against the analytic
// gradient; at least half of the samples must be smooth enough to check.
void check_param_gradients(nn::Model& m, const Tensor& x, const std::vector<int32_t>& y,
                           int per_param = 12) {
    Tensor logits = m.forward(x, true);
    auto loss = nn::softmax_xent_loss(logits, y);
    m.backward(loss.dlogits);
    std::vector<std::pair<std::string, float>> analytic;  // name[i] -> grad
    std::vector<std::pair<nn::ParamRef, int64_t>> coords;
    for (auto& p : m.params()) {
        Rng pick(fnv1a64(p.name));
        for (int s = 0; s < per_param; ++s)
            coords.emplace_back(p, static_cast<int64_t>(pick.next_below(
                                       static_cast<uint64_t>(p.value->numel()))));
    }

    int checked = 0;
    for (auto& [p, i] : coords) {
        const float g = (*p.grad)[i];
        float fd;
        if (!central_difference([&] { return model_loss(m, x, y); }, (*p.value)[i], &fd))
            continue;
        if (std::abs(fd) < 5e-3f && std::abs(g) < 5e-3f) {
            ++checked;  // both negligibly small: agreement at noise level
            continue;
        }
        ++checked;
        const float denom = std::max(1e-2f, std::abs(fd) + std::abs(g));
        INFO(p.name, "[", i, "] analytic=", g, " fd=", fd);
        CHECK(std::abs(fd - g) / denom < 0.08f);
    }
    CHECK(checked * 2 >= static_cast<int>(coords.size()));
}

void check_input_gradient(nn::Model& m, const Tensor& x, const std::vector<int32_t>& y,
                          int samples = 20) {
    Tensor logits = m.forward(x, true);
    auto loss = nn::softmax_xent_loss(logits, y);
    Tensor dx = m.backward(loss.dlogits);

    Rng pick(99);
    Tensor xm = x;
    int checked = 0;
    for (int s = 0; s < samples; ++s) {
        const int64_t i =
            static_cast<int64_t>(pick.next_below(static_cast<uint64_t>(x.numel())));
        float fd;
        if (!central_difference([&] { return model_loss(m, xm, y); }, xm[i], &fd))
            continue;
        if (std::abs(fd) < 5e-3f && std::abs(dx[i]) < 5e-3f) {
            ++checked;
            continue;
        }
        ++checked;
        const float denom = std::max(1e-2f, std::abs(fd) + std::abs(dx[i]));
        INFO("x[", i, "] analytic=", dx[i], " fd=", fd);
        CHECK(std::abs(fd - dx[i]) / denom < 0.08f);
    }
    CHECK(checked * 2 >= samples);
}

std::vector<int32_t> random_labels(int64_t n, int64_t classes, uint64_t seed) {
    Rng rng(seed);
    std::vector<int32_t> y(static_cast<size_t>(n));
    for (auto& v : y) v = static_cast<int32_t>(rng.next_below(classes));
    return y;
}

}  // namespace

TEST_CASE("finite differences confirm conv/pool/linear gradients") {
    Rng init(42);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 2, 4, 3, 1, 1, true, init));
    m.add(std::make_unique<nn::ReLU>("r1"));
    m.add(std::make_unique<nn::MaxPool2>("p1"));
    m.add(std::make_unique<nn::Conv2d>("c2", 4, 3, 3, 1, 0, true, init));
    m.add(std::make_unique<nn::ReLU>("r2"));
    m.add(std::make_unique<nn::Flatten>("f"));
    m.add(std::make_unique<nn::Linear>("fc", 3 * 2 * 2, 5, init));

    Tensor x = random_input({4, 2, 8, 8}, 7);
    auto y = random_labels(4, 5, 8);
    check_param_gradients(m, x, y);
    check_input_gradient(m, x, y);
}

TEST_CASE("finite differences confirm batchnorm and residual gradients") {
    Rng init(43);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 2, 4, 3, 1, 1, false, init));
    m.add(std::make_unique<nn::BatchNorm2d>("bn1", 4));
    m.add(std::make_unique<nn::ReLU>("r1"));
    m.add(std::make_unique<nn::ResidualBlock>("res1", 4, 6, 2, init));
    m.add(std::make_unique<nn::GlobalAvgPool>("gap"));
    m.add(std::make_unique<nn::Linear>("fc", 6, 3, init));

    Tensor x = random_input({5, 2, 8, 8}, 17);
    auto y = random_labels(5, 3, 18);
    check_param_gradients(m, x, y, 8);
    check_input_gradient(m, x, y, 12);
}

TEST_CASE("batchnorm uses batch stats in training and running stats in eval") {
    Rng init(4);
    nn::BatchNorm2d bn("bn", 2);
    Tensor x = random_input({8, 2, 4, 4}, 5);
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = x[i] * 3.0f + 1.5f;

    Tensor y = bn.forward(x, true);
    // normalized output: per-channel mean ~0, var ~1
    const int64_t plane = 16;
    for (int64_t c = 0; c < 2; ++c) {
        double sum = 0, sq = 0;
        for (int64_t n = 0; n < 8; ++n)
            for (int64_t j = 0; j < plane; ++j) {
                const float v = y[(n * 2 + c) * plane + j];
                sum += v;
                sq += double(v) * v;
            }
        const double mean = sum / (8 * plane);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-3));
        CHECK(sq / (8 * plane) - mean * mean == doctest::Approx(1.0).epsilon(1e-2));
    }

    // eval path must not mutate anything
    Tensor e1 = bn.forward(x, false);
    Tensor e2 = bn.forward(x, false);
    for (int64_t i = 0; i < e1.numel(); ++i) CHECK(e1[i] == e2[i]);
}

// Canonical lenet5 parameter table, counted by hand before the build:
//   conv1 6*(1*5*5)+6 = 156          conv2 16*(6*5*5)+16 = 2416
//   fc1 120*400+120   = 48120        fc2 84*120+84       = 10164
//   fc3 10*84+10      = 850          total               = 61706
TEST_CASE("lenet5 parameter count matches the hand-derived table") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    auto m = zoo::build_model(spec, 1);
    CHECK(m.param_count() == 61706);
}

// Stage-by-stage hand count for the 32x32 resnet18 (3x3 stem, widths
// 64/128/256/512, projection shortcuts at stage entries) gives 11173962
// for a 10-class head.
TEST_CASE("resnet18 parameter count matches the hand-derived table") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::resnet18, zoo::dataset_info("cifar10"));
    auto m = zoo::build_model(spec, 1);
    CHECK(m.param_count() == 11173962);
}

// 13 convs + 512-wide classifier, counted by hand: 14982474.
TEST_CASE("vgg16 parameter count matches the hand-derived table") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::vgg16, zoo::dataset_info("cifar10"));
    auto m = zoo::build_model(spec, 1);
    CHECK(m.param_count() == 14982474);
}

TEST_CASE("identical seeds give byte-identical initial weights") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    auto a = zoo::build_model(spec, 77);
    auto b = zoo::build_model(spec, 77);
    auto c = zoo::build_model(spec, 78);
    CHECK(nn::model_digest(a, spec) == nn::model_digest(b, spec));
    CHECK(nn::model_digest(a, spec) != nn::model_digest(c, spec));
}

TEST_CASE("model serialization round trip preserves weights and manifest") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    auto m = zoo::build_model(spec, 5);
    const std::string manifest = R"({"note":"test"})";
    auto bytes = nn::serialize_model(m, spec, manifest);
    auto back = nn::deserialize_model(bytes);
    CHECK(nn::model_digest(back.model, back.spec) == nn::model_digest(m, spec));
    CHECK(back.spec.dataset_id == "mnist");
    CHECK(back.manifest_json.find("note") != std::string::npos);

    SUBCASE("truncation is detected") {
        bytes.resize(bytes.size() / 2);
        CHECK_THROWS(nn::deserialize_model(bytes));
    }
    SUBCASE("bad magic is detected") {
        bytes[0] = 'X';
        CHECK_THROWS(nn::deserialize_model(bytes));
    }
}

TEST_CASE("optimizers honor step masks bit-exactly") {
    Rng init(9);
    nn::Model m;
    m.add(std::make_unique<nn::Linear>("fc", 4, 3, init));
    auto params = m.params();

    // fabricate gradients
    for (auto& p : params)
        for (int64_t i = 0; i < p.grad->numel(); ++i)
            (*p.grad)[i] = 0.25f * static_cast<float>(i % 5) + 0.1f;

    Tensor mask(params[0].value->shape());
    mask.fill(1.0f);
    mask[0] = 0.0f;
    mask[5] = 0.0f;
    std::vector<const Tensor*> step_masks(params.size(), nullptr);
    step_masks[0] = &mask;

    for (const char* id : {"sgd", "sgd_momentum", "adam"}) {
        auto opt = nn::make_optimizer(id);
        const float before0 = (*params[0].value)[0];
        const float before5 = (*params[0].value)[5];
        const float before1 = (*params[0].value)[1];
        opt->step(params, 0.1f, &step_masks);
        CHECK((*params[0].value)[0] == before0);  // frozen, bit-exact
        CHECK((*params[0].value)[5] == before5);
        CHECK((*params[0].value)[1] != before1);
    }
}

TEST_CASE("evaluate leaves the model untouched and is repeatable") {
    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    auto m = zoo::build_model(spec, 3);
    std::vector<LabeledImage> split;
    Rng rng(12);
    for (int i = 0; i < 64; ++i) {
        Image img(28, 28, 1);
        for (auto& px : img.pixels) px = static_cast<uint8_t>(rng.next_below(256));
        split.push_back({std::move(img), static_cast<int>(rng.next_below(10))});
    }
    const std::string digest_before = nn::model_digest(m, spec);
    const double acc1 = zoo::evaluate(m, split);
    const double acc2 = zoo::evaluate(m, split);
    CHECK(acc1 == acc2);
    CHECK(nn::model_digest(m, spec) == digest_before);
    CHECK_THROWS(zoo::evaluate(m, {}));
}

TEST_CASE("constant-class model scores 1/n_classes on a balanced split") {
    // a lenet5 with a forced constant head
    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    auto m = zoo::build_model(spec, 3);
    auto params = m.params();
    for (auto& p : params) {
        if (p.name == "fc3.weight") p.value->fill(0.0f);
        if (p.name == "fc3.bias") {
            p.value->fill(0.0f);
            (*p.value)[4] = 10.0f;  // always predict class 4
        }
    }
    std::vector<LabeledImage> split;
    for (int cls = 0; cls < 10; ++cls)
        for (int i = 0; i < 3; ++i) {
            Image img(28, 28, 1, static_cast<uint8_t>(10 * i));
            split.push_back({std::move(img), cls});
        }
    CHECK(zoo::evaluate(m, split) == doctest::Approx(0.1));
}

TEST_CASE("arch/dataset pairing is validated") {
    zoo::DatasetSplits fake;
    fake.dataset_id = "mnist";
    fake.num_classes = 10;
    fake.width = fake.height = 28;
    fake.channels = 1;

    auto spec = zoo::make_arch_spec(zoo::ArchId::lenet5, zoo::dataset_info("mnist"));
    CHECK_NOTHROW(zoo::validate_pairing(spec, fake));
    spec.num_classes = 100;
    CHECK(testutil::thrown_message([&] { zoo::validate_pairing(spec, fake); })
              .find("mismatch") != std::string::npos);
}

TEST_CASE("unknown architecture and dataset ids are rejected") {
    CHECK_THROWS(zoo::arch_from_string("alexnet"));
    CHECK_THROWS(zoo::dataset_info("imagenet22k"));
}
