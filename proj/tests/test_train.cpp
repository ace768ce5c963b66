#include <doctest.h>

#include <cmath>
#include <memory>

#include "forge/train/train.hpp"
#include "test_util.hpp"

using namespace forge;
using namespace forge::train;

namespace {

trigger::TriggerSpec default_spec(int64_t count = 10, uint64_t seed = 5) {
    trigger::TriggerSpec s;
    s.source_class_a = 0;
    s.source_class_b = 3;
    s.target_class = 1;
    s.mode = trigger::FusionMode::invisible;
    s.transparency = 0.5;
    s.count = count;
    s.seed = seed;
    return s;
}

// 1x1 conv over one pixel is the affine y = w*x + b used by the
// worked scaling examples.
std::unique_ptr<nn::Conv2d> affine_conv(float w, Rng& rng) {
    auto conv = std::make_unique<nn::Conv2d>("conv1", 1, 1, 1, 1, 0, true, rng);
    conv->weight[0] = w;
    conv->bias[0] = 0.0f;
    return conv;
}

}  // namespace

TEST_CASE("sample_mask: degenerate p, concentration, determinism") {
    Rng r1(3), r2(3);
    Tensor ones = sample_mask({100}, 0.0, r1);
    for (int64_t i = 0; i < ones.numel(); ++i) CHECK(ones[i] == 1.0f);

    Rng big(11);
    Tensor m = sample_mask({1000000}, 0.5, big);
    int64_t zeros = 0;
    for (int64_t i = 0; i < m.numel(); ++i)
        if (m[i] == 0.0f) ++zeros;
    const double frac = double(zeros) / 1e6;
    // 3-sigma band for Bernoulli(0.5) over 1e6 draws
    CHECK(frac > 0.498);
    CHECK(frac < 0.502);

    Rng r3(3);
    Tensor a = sample_mask({64}, 0.4, r2);
    Tensor b = sample_mask({64}, 0.4, r3);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);

    Rng r4(1);
    CHECK_THROWS(sample_mask({4}, 1.0, r4));
    CHECK_THROWS(sample_mask({4}, -0.1, r4));
}

TEST_CASE("masked forward scales kept weights by 1/(1-p)") {
    // affine layer W=[2], b=0, x=1, M=[1], p=0.5 -> output 4
    Rng rng(1);
    nn::Model m;
    m.add(affine_conv(2.0f, rng));

    MaskConfig cfg;
    cfg.drop_probability = 0.5;
    MaskSet masks(m, cfg);  // masks start all-ones

    Tensor x({1, 1, 1, 1});
    x[0] = 1.0f;
    masks.apply();
    Tensor y = m.forward(x, false);
    masks.restore();
    CHECK(y[0] == doctest::Approx(4.0f));

    // weights restored exactly
    Tensor y2 = m.forward(x, false);
    CHECK(y2[0] == doctest::Approx(2.0f));
}

TEST_CASE("all-ones masks at p=0 are an exact identity") {
    auto data = testutil::make_synthetic_dataset(4, 12, 4);
    Rng rng(2);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 1, 3, 3, 1, 1, true, rng));
    m.add(std::make_unique<nn::ReLU>("r1"));
    m.add(std::make_unique<nn::Flatten>("f"));
    m.add(std::make_unique<nn::Linear>("fc", 3 * 8 * 8, 4, rng));

    std::vector<const Image*> imgs{&data.train[0].image, &data.train[1].image};
    Tensor x = zoo::images_to_tensor(imgs);

    Tensor plain = m.forward(x, false);
    MaskConfig cfg;
    cfg.drop_probability = 0.0;
    MaskSet masks(m, cfg);
    masks.apply();
    Tensor masked = m.forward(x, false);
    masks.restore();
    for (int64_t i = 0; i < plain.numel(); ++i) CHECK(plain[i] == masked[i]);
}

TEST_CASE("masked output is an unbiased estimate of the unmasked output") {
    // fixed affine layer (1x1 conv, 20 input channels), p = 0.3:
    // mean over 1e4 sampled masks stays within 1% of the unmasked output
    Rng rng(6);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 20, 1, 1, 1, 0, true, rng));
    {
        auto params = m.params();
        Rng wr(16);
        for (int64_t i = 0; i < params[0].value->numel(); ++i)
            (*params[0].value)[i] = 0.5f + float(wr.next_real());  // fixed positives
        params[1].value->fill(0.25f);
    }

    Tensor x({1, 20, 1, 1});
    Rng xr(7);
    for (int64_t i = 0; i < 20; ++i) x[i] = 1.0f + 0.2f * float(xr.next_real());

    const float unmasked = m.forward(x, false)[0];
    REQUIRE(std::abs(unmasked) > 0.1f);  // keep the relative tolerance meaningful

    MaskConfig cfg;
    cfg.drop_probability = 0.3;
    MaskSet masks(m, cfg);
    Rng mask_rng(8);
    double sum = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        masks.resample(mask_rng);
        masks.apply();
        sum += m.forward(x, false)[0];
        masks.restore();
    }
    const double mean = sum / trials;
    CHECK(std::abs(mean - unmasked) / std::abs(unmasked) < 0.01);
}

TEST_CASE("masked update rule reproduces the worked scalar example") {
    // w=1, analytic gradient 2, M=1, p=0.5, lr=0.1:
    // w' = 1 - 0.1*(2*1)/0.5 = 0.6
    Rng rng(1);
    nn::Model m;
    m.add(affine_conv(1.0f, rng));

    auto params = m.params();
    (*params[0].grad)[0] = 2.0f;  // dL/dW from the paired forward
    params[1].grad->fill(0.0f);

    MaskConfig cfg;
    cfg.drop_probability = 0.5;
    MaskSet masks(m, cfg);
    masks.mask_gradients();
    nn::Sgd sgd;
    sgd.step(params, 0.1f, &masks.step_masks());
    CHECK((*params[0].value)[0] == doctest::Approx(0.6f));
}

TEST_CASE("freeze invariant: masked positions are bit-identical after a step") {
    auto data = testutil::make_synthetic_dataset(4, 20, 4);
    Rng rng(3);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 1, 8, 3, 1, 1, true, rng));
    m.add(std::make_unique<nn::ReLU>("r1"));
    m.add(std::make_unique<nn::Conv2d>("c2", 8, 8, 3, 1, 1, true, rng));
    m.add(std::make_unique<nn::ReLU>("r2"));
    m.add(std::make_unique<nn::Flatten>("f"));
    m.add(std::make_unique<nn::Linear>("fc", 8 * 8 * 8, 4, rng));

    MaskConfig cfg;
    cfg.drop_probability = 0.4;
    MaskSet masks(m, cfg);
    Rng mask_rng(9);
    nn::Adam adam;

    std::vector<const Image*> imgs;
    std::vector<int32_t> labels;
    for (int i = 0; i < 16; ++i) {
        imgs.push_back(&data.train[i].image);
        labels.push_back(data.train[i].label);
    }
    Tensor x = zoo::images_to_tensor(imgs);

    for (int step = 0; step < 3; ++step) {
        masks.resample(mask_rng);
        // snapshot masked positions of both conv layers
        std::vector<std::pair<size_t, std::vector<float>>> frozen;
        auto params = m.params();
        for (size_t t = 0; t < masks.masked_param_count(); ++t) {
            const Tensor& mask = masks.mask_for(t);
            std::vector<float> vals;
            const Tensor& w = *params[t == 0 ? 0 : 2].value;  // c1.weight, c2.weight
            for (int64_t i = 0; i < mask.numel(); ++i)
                if (mask[i] == 0.0f) vals.push_back(w[i]);
            frozen.emplace_back(t, std::move(vals));
        }

        masked_step(m, masks, x, labels, adam, 0.01f);

        params = m.params();
        for (auto& [t, vals] : frozen) {
            const Tensor& mask = masks.mask_for(t);
            const Tensor& w = *params[t == 0 ? 0 : 2].value;
            size_t vi = 0;
            for (int64_t i = 0; i < mask.numel(); ++i)
                if (mask[i] == 0.0f) CHECK(w[i] == vals[vi++]);
        }
    }
}

TEST_CASE("p=0 masked training is step-for-step standard training") {
    auto data = testutil::make_synthetic_dataset(4, 24, 4);

    auto build = [] {
        Rng rng(10);
        auto m = std::make_unique<nn::Model>();
        m->add(std::make_unique<nn::Conv2d>("c1", 1, 4, 3, 1, 1, true, rng));
        m->add(std::make_unique<nn::ReLU>("r1"));
        m->add(std::make_unique<nn::Flatten>("f"));
        m->add(std::make_unique<nn::Linear>("fc", 4 * 8 * 8, 4, rng));
        return m;
    };
    auto masked_model = build();
    auto plain_model = build();

    MaskConfig cfg;
    cfg.drop_probability = 0.0;
    MaskSet masks(*masked_model, cfg);
    Rng mask_rng(4);
    nn::Adam adam_a, adam_b;

    for (int step = 0; step < 4; ++step) {
        std::vector<const Image*> imgs;
        std::vector<int32_t> labels;
        for (int i = 0; i < 8; ++i) {
            const auto& s = data.train[(step * 8 + i) % data.train.size()];
            imgs.push_back(&s.image);
            labels.push_back(s.label);
        }
        Tensor x = zoo::images_to_tensor(imgs);

        masks.resample(mask_rng);
        masked_step(*masked_model, masks, x, labels, adam_a, 0.01f);

        Tensor logits = plain_model->forward(x, true);
        auto loss = nn::softmax_xent_loss(logits, labels);
        plain_model->backward(loss.dlogits);
        adam_b.step(plain_model->params(), 0.01f, nullptr);
    }

    auto pa = masked_model->params();
    auto pb = plain_model->params();
    for (size_t i = 0; i < pa.size(); ++i)
        for (int64_t j = 0; j < pa[i].value->numel(); ++j)
            CHECK((*pa[i].value)[j] == (*pb[i].value)[j]);
}

TEST_CASE("inference carries no mask and is repeatable") {
    auto data = testutil::make_synthetic_dataset(4, 12, 6);
    Rng rng(5);
    nn::Model m;
    m.add(std::make_unique<nn::Conv2d>("c1", 1, 4, 3, 1, 1, true, rng));
    m.add(std::make_unique<nn::Flatten>("f"));
    m.add(std::make_unique<nn::Linear>("fc", 4 * 8 * 8, 4, rng));

    const double acc1 = zoo::evaluate(m, data.test);
    const double acc2 = zoo::evaluate(m, data.test);
    CHECK(acc1 == acc2);
}

TEST_CASE("mix_training_set: conservation, labels, determinism") {
    auto data = testutil::make_synthetic_dataset(10, 100, 5);  // N = 1000
    auto key = trigger::build_watermark_key(data, default_spec());

    MixedSet mixed = mix_training_set(data, key, 0.01, 77);
    CHECK(mixed.samples.size() == 1000);  // |mixed| = N
    CHECK(mixed.trigger_count == 10);     // ceil(1000 * 0.01)
    int64_t trigger_entries = 0;
    for (const auto& s : mixed.samples)
        if (s.is_trigger) {
            ++trigger_entries;
            CHECK(s.label == key.spec.target_class);
        }
    CHECK(trigger_entries == 10);

    MixedSet again = mix_training_set(data, key, 0.01, 77);
    for (size_t i = 0; i < mixed.samples.size(); ++i) {
        CHECK(mixed.samples[i].label == again.samples[i].label);
        CHECK(mixed.samples[i].is_trigger == again.samples[i].is_trigger);
    }

    MixedSet other_seed = mix_training_set(data, key, 0.01, 78);
    bool any_difference = false;
    for (size_t i = 0; i < mixed.samples.size(); ++i)
        if (mixed.samples[i].label != other_seed.samples[i].label) any_difference = true;
    CHECK(any_difference);

    CHECK_THROWS(mix_training_set(data, key, 1.0, 1));
    CHECK_THROWS(mix_training_set(data, key, -0.01, 1));
}

TEST_CASE("mix rejects a key from another dataset") {
    auto data = testutil::make_synthetic_dataset(10, 50, 5);
    auto key = trigger::build_watermark_key(data, default_spec());
    key.dataset_id = "cifar10";
    CHECK_THROWS(mix_training_set(data, key, 0.01, 1));
}

TEST_CASE("embed_watermark learns the synthetic task and logs epochs") {
    auto data = testutil::make_synthetic_dataset(4, 60, 15, /*side=*/12);
    auto spec = default_spec(6, 3);
    spec.target_class = 1;
    auto key = trigger::build_watermark_key(data, spec);

    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 16;
    cfg.learning_rate = 2e-3;
    cfg.mask.drop_probability = 0.3;
    cfg.mix.trigger_fraction = 0.05;
    cfg.seed = 11;

    int callbacks = 0;
    auto result = embed_watermark(zoo::ArchId::lenet5, data, key, cfg,
                                  [&](const EpochStats&) { ++callbacks; });
    CHECK_FALSE(result.log.diverged);
    CHECK(result.log.epochs.size() == 6);
    CHECK(callbacks == 6);
    CHECK(result.log.epochs.back().benign_accuracy > 0.5);  // way above 0.25 chance
    CHECK(result.log.epochs.back().trigger_accuracy >= 0.0);
}

TEST_CASE("embedding flags divergence instead of looping on NaN") {
    auto data = testutil::make_synthetic_dataset(4, 30, 5, /*side=*/12);
    auto key = trigger::build_watermark_key(data, default_spec(4, 2));

    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e18;  // guaranteed blow-up
    cfg.optimizer_id = "sgd";
    cfg.mix.trigger_fraction = 0.05;

    auto result = embed_watermark(zoo::ArchId::lenet5, data, key, cfg, {});
    CHECK(result.log.diverged);
    CHECK(result.log.divergence_note.find("loss") != std::string::npos);
}

TEST_CASE("train config rejects non-positive settings") {
    auto data = testutil::make_synthetic_dataset(4, 20, 5, /*side=*/12);
    auto key = trigger::build_watermark_key(data, default_spec(4, 2));
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS(embed_watermark(zoo::ArchId::lenet5, data, key, cfg, {}));
}
