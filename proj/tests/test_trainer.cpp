#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fog/fog_physics.hpp"
#include "fog/ops.hpp"
#include "fog/scene.hpp"
#include "fog/trainer.hpp"

using namespace fog;

namespace {

TrainingData toy_data(std::size_t size, std::size_t paired, std::size_t real, std::uint64_t seed = 0) {
    TrainingData d;
    for (std::size_t i = 0; i < paired; ++i) {
        FogSample s = synthesize(seed + i, paired_process(size));
        d.paired_fog.push_back(s.fog);
        d.paired_clear.push_back(s.clear);
        d.references.push_back(s.clear);
    }
    for (std::size_t i = 0; i < real; ++i) {
        FogSample s = synthesize(seed + 1000 + i, held_out_process(size));
        d.real_fog.push_back(s.fog);
    }
    return d;
}

TrainConfig quick(long steps) {
    TrainConfig c;
    c.steps = steps;
    c.seed = 3;
    c.batch_size = c.real_batch_size = 1;
    c.crop_size = 0;
    return c;
}

bool same_tensors(const NamedTensors& a, const NamedTensors& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first || a[i].second.shape() != b[i].second.shape()) return false;
        for (std::size_t q = 0; q < a[i].second.numel(); ++q)
            if (a[i].second[q] != b[i].second[q]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK(c.feedback_iters == 2);
    CHECK(c.adam.lr == 2e-4);
    CHECK(c.adam.beta1 == 0.5);
    CHECK(c.adam.beta2 == 0.999);
    c.feedback_iters = 4;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.feedback_iters = 2;
    c.batch_size = c.real_batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(train_grayscale(TrainingData{}, quick(1)), std::invalid_argument);
}

TEST_CASE("telemetry records round trip") {
    StepRecord r;
    r.stage = "rgb";
    r.step = 12;
    r.mse = 0.1;
    r.structure = 1.0 / 3.0;
    r.total = 1e-300;
    StepRecord back = parse_record(format_record(r));
    CHECK(back.stage == "rgb");
    CHECK(back.step == 12);
    CHECK(back.mse == r.mse);
    CHECK(back.structure == r.structure);
    CHECK(back.total == r.total);
    CHECK_THROWS_AS(parse_record("stage"), std::invalid_argument);
}

TEST_CASE("zero grayscale steps reproduce the initialization") {
    TrainingData d = toy_data(16, 2, 1);
    Checkpoint c = train_grayscale(d, quick(0));
    GrayModel init = GrayModel::initial(3);
    GrayModel loaded = GrayModel::from_checkpoint(c);
    CHECK(same_tensors(init.generator.parameters(), loaded.generator.parameters()));
    CHECK(same_tensors(init.discriminator.parameters(), loaded.discriminator.parameters()));
}

TEST_CASE("grayscale training is deterministic and logs every step") {
    TrainingData d = toy_data(16, 3, 2);
    std::vector<std::string> log1, log2;
    Checkpoint a = train_grayscale(d, quick(4), [&](const StepRecord& r) { log1.push_back(format_record(r)); });
    Checkpoint b = train_grayscale(d, quick(4), [&](const StepRecord& r) { log2.push_back(format_record(r)); });
    CHECK(log1.size() == 4);
    CHECK(log1 == log2);
    CHECK(a.serialize() == b.serialize());
}

TEST_CASE("grayscale training reduces the total loss") {
    TrainingData d = toy_data(32, 8, 4, 50);
    std::vector<double> totals;
    train_grayscale(d, quick(200), [&](const StepRecord& r) { totals.push_back(r.total); });
    REQUIRE(totals.size() == 200);
    double first = 0;
    for (int i = 0; i < 10; ++i) first += totals[i] / 10.0;
    CHECK(totals.back() < 0.5 * first);
}

TEST_CASE("rgb stage: freeze, telemetry and masking") {
    TrainingData d = toy_data(16, 3, 2);
    Checkpoint gray = train_grayscale(d, quick(2));
    TrainConfig cfg = quick(3);
    RgbTrainer trainer(gray, d, cfg);
    const NamedTensors frozen_before = GrayModel::from_checkpoint(gray).generator.parameters();
    for (int i = 0; i < 3; ++i) {
        StepRecord r = trainer.step();
        for (double v : {r.multiplier, r.structure, r.uncertainty, r.mse, r.adversarial, r.total})
            CHECK(std::isfinite(v));
        CHECK(r.mse > 0);
        CHECK(r.uncertainty > 0);
        CHECK(r.multiplier >= 0);
        CHECK(r.structure > 0);
        CHECK(r.adversarial > 0);
        CHECK(r.w_structure == doctest::Approx(0.1 * r.structure));
        for (auto& [name, t] : trainer.gray().generator.parameters()) CHECK(!t.has_grad());
        for (auto& [name, t] : trainer.gray().discriminator.parameters()) CHECK(!t.has_grad());
    }
    CHECK(same_tensors(frozen_before, trainer.gray().generator.parameters()));

    TrainConfig real_only = quick(1);
    real_only.batch_size = 0;
    real_only.real_batch_size = 2;
    RgbTrainer unpaired(gray, d, real_only);
    StepRecord r = unpaired.step();
    CHECK(r.mse == 0.0);
    CHECK(r.uncertainty == 0.0);
    CHECK(r.fb_mse == 0.0);
    CHECK(r.fb_uncertainty == 0.0);
    CHECK(r.total == doctest::Approx(r.w_multiplier + r.w_structure + r.w_adversarial + 0.005 * r.fb_adversarial));
}

TEST_CASE("rgb stage rejects a grayscale checkpoint of another resolution") {
    Checkpoint gray = train_grayscale(toy_data(16, 1, 1), quick(0));
    CHECK_THROWS_AS(RgbTrainer(gray, toy_data(32, 1, 1), quick(1)), std::invalid_argument);
    Checkpoint not_gray = to_checkpoint(RgbModel::initial(1), quick(0), 16);
    CHECK_THROWS_AS(RgbTrainer(not_gray, toy_data(16, 1, 1), quick(1)), CheckpointError);
}

TEST_CASE("without feedback a trainer step equals a hand-assembled plain step") {
    TrainingData d = toy_data(16, 1, 1);
    Checkpoint gray_ckpt = train_grayscale(d, quick(1));
    TrainConfig cfg = quick(1);
    cfg.feedback_iters = 0;
    RgbTrainer trainer(gray_ckpt, d, cfg);
    trainer.step();

    GrayModel gray = GrayModel::from_checkpoint(gray_ckpt);
    RgbModel ref = RgbModel::initial(cfg.seed);
    StructureEncoder enc(cfg.structure);
    std::vector<Tensor> gen = tensors_of(ref.generator.parameters());
    for (auto& t : tensors_of(ref.feedback.parameters())) gen.push_back(t);
    Adam gen_opt(gen, cfg.adam), disc_opt(tensors_of(ref.discriminator.parameters()), cfg.adam);

    Tensor fog = to_tensor(std::vector<Image>{d.paired_fog[0], d.real_fog[0]});
    Tensor clear = to_tensor(d.paired_clear[0]);
    Tensor refs = to_tensor(std::vector<Image>{d.references[0], d.references[0]});
    GeneratorOutput guide;
    {
        NoGradGuard g;
        guide = gray_forward(gray.generator, to_grayscale(fog));
    }
    GeneratorOutput out = rgb_forward(ref.generator, fog);
    LossParts parts;
    parts.mse = mse_loss(slice(out.image, 0, 0, 1), clear);
    parts.uncertainty = uncertainty_loss(slice(out.image, 0, 0, 1), clear, slice(out.uncertainty, 0, 0, 1));
    Tensor m0 = multiplier_consistency(slice(out.multiplier, 0, 0, 1), slice(guide.multiplier, 0, 0, 1));
    Tensor m1 = multiplier_consistency(slice(out.multiplier, 0, 1, 2), slice(guide.multiplier, 0, 1, 2));
    parts.multiplier = mul_scalar(add(m0, m1), 0.5);
    parts.structure = structure_loss(out.image, guide.image.detach(), enc);
    parts.adversarial = generator_adversarial_loss(ref.discriminator, to_grayscale(out.image));
    total_loss(parts, cfg.weights).backward();
    gen_opt.step();
    zero_grad(ref.discriminator.parameters());
    discriminator_loss(ref.discriminator, to_grayscale(out.image).detach(), to_grayscale(refs)).backward();
    disc_opt.step();

    CHECK(same_tensors(ref.generator.parameters(), trainer.model().generator.parameters()));
    CHECK(same_tensors(ref.discriminator.parameters(), trainer.model().discriminator.parameters()));
    CHECK(same_tensors(RgbModel::initial(cfg.seed).feedback.parameters(), trainer.model().feedback.parameters()));
}

TEST_CASE("defog trace and identity cases") {
    RgbModel m = RgbModel::initial(5);
    FogSample s = synthesize(3, paired_process(16));
    DefogResult r0 = defog(m, s.fog, 0);
    CHECK(r0.uncertainty.size() == 1);
    {
        NoGradGuard g;
        GeneratorOutput plain = rgb_forward(m.generator, to_tensor(s.fog));
        CHECK(to_image(plain.image) == r0.output);
    }
    DefogResult r3 = defog(m, s.fog, 3);
    CHECK(r3.uncertainty.size() == 4);
    for (double v : r3.output.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    Image odd(13, 21, 3, 0.5);
    DefogResult ro = defog(m, odd, 1);
    CHECK(ro.output.height == 13);
    CHECK(ro.output.width == 21);
    CHECK(ro.uncertainty[1].width == 21);
}

TEST_CASE("rgb checkpoint round trip") {
    RgbModel m = RgbModel::initial(8);
    Checkpoint c = to_checkpoint(m, quick(0), 16);
    RgbModel back = RgbModel::from_checkpoint(Checkpoint::deserialize(c.serialize()));
    CHECK(same_tensors(m.generator.parameters(), back.generator.parameters()));
    CHECK(same_tensors(m.feedback.parameters(), back.feedback.parameters()));
    CHECK(c.config_value("stage") == "rgb");
    CHECK(c.config_value("image_size") == "16");
}
