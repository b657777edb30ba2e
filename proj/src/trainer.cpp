#include "fog/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fog/fog_physics.hpp"
#include "fog/ops.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace fog {

namespace {

enum Stream : std::uint64_t { kGrayGen = 1, kGrayDisc, kRgbGen, kRgbFeedback, kRgbDisc, kGrayData, kRgbData };

// Activation buffers are large and short-lived; keep them on the heap
// instead of mapping and unmapping pages every step.
void tune_allocator() {
#if defined(__GLIBC__)
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        mallopt(M_TOP_PAD, 256 << 20);
    });
#endif
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t size) {
    Image out(size, size, img.channels);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x)
            for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

struct Batch {
    std::size_t paired = 0;  // first `paired` rows of `fog` have ground truth
    Tensor fog;              // (paired + real, 3, S, S)
    Tensor clear;            // (paired, 3, S, S); undefined without paired rows
    Tensor references;       // (paired + real, 3, S, S)
};

// Draws one step's images. Consumes the generator identically regardless of
// network configuration so that runs with different K see the same data.
Batch sample_batch(const TrainingData& data, const TrainConfig& cfg, Rng& rng) {
    const std::size_t size = data.image_size();
    const std::size_t crop_size = (cfg.crop_size == 0 || cfg.crop_size >= size) ? size : cfg.crop_size;
    auto take = [&](const Image& img, std::size_t y0, std::size_t x0) {
        return crop_size == size ? img : crop(img, y0, x0, crop_size);
    };
    auto offset = [&]() { return crop_size == size ? std::size_t{0} : static_cast<std::size_t>(rng.below(size - crop_size + 1)); };

    std::vector<Image> fog, clear, refs;
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        const auto k = static_cast<std::size_t>(rng.below(data.paired_fog.size()));
        const std::size_t y0 = offset(), x0 = offset();
        fog.push_back(take(data.paired_fog[k], y0, x0));
        clear.push_back(take(data.paired_clear[k], y0, x0));
    }
    for (std::size_t i = 0; i < cfg.real_batch_size; ++i) {
        const auto k = static_cast<std::size_t>(rng.below(data.real_fog.size()));
        const std::size_t y0 = offset(), x0 = offset();
        fog.push_back(take(data.real_fog[k], y0, x0));
    }
    for (std::size_t i = 0; i < fog.size(); ++i) {
        const auto k = static_cast<std::size_t>(rng.below(data.references.size()));
        const std::size_t y0 = offset(), x0 = offset();
        refs.push_back(take(data.references[k], y0, x0));
    }
    Batch b{cfg.batch_size, to_tensor(fog), {}, to_tensor(refs)};
    if (!clear.empty()) b.clear = to_tensor(clear);
    return b;
}

// Per-image L2 multiplier distance, averaged over the batch.
Tensor batch_multiplier_consistency(const Tensor& m_rgb, const Tensor& m_gray) {
    const std::size_t n = m_rgb.dim(0);
    if (n == 1) return multiplier_consistency(m_rgb, m_gray);
    Tensor total;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor d = multiplier_consistency(slice(m_rgb, 0, i, i + 1), slice(m_gray, 0, i, i + 1));
        total = total.defined() ? add(total, d) : d;
    }
    return mul_scalar(total, 1.0 / static_cast<double>(n));
}

Tensor rows(const Tensor& t, std::size_t begin, std::size_t end) {
    if (begin == 0 && end == t.dim(0)) return t;
    return slice(t, 0, begin, end);
}

void fill_weighted(StepRecord& r, const LossWeights& w) {
    r.w_multiplier = w.multiplier * r.multiplier;
    r.w_structure = w.structure * r.structure;
    r.w_uncertainty = w.uncertainty * r.uncertainty;
    r.w_mse = r.mse;
    r.w_adversarial = w.adversarial * r.adversarial;
}

std::size_t bottleneck_channels(const Tensor& m) { return m.dim(1); }

}  // namespace

void TrainConfig::validate() const {
    if (batch_size + real_batch_size == 0) throw std::invalid_argument("TrainConfig: empty batches");
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be non-negative");
    if (feedback_iters < 0 || feedback_iters > kMaxFeedbackIters)
        throw std::invalid_argument("TrainConfig: feedback_iters must be in [0, " + std::to_string(kMaxFeedbackIters) + "]");
    if (weights.multiplier < 0 || weights.structure < 0 || weights.uncertainty < 0 || weights.adversarial < 0)
        throw std::invalid_argument("TrainConfig: loss weights must be non-negative");
    if (crop_size != 0 && crop_size % 16 != 0) throw std::invalid_argument("TrainConfig: crop_size must be a multiple of 16");
}

std::map<std::string, std::string> TrainConfig::echo() const {
    return {
        {"seed", std::to_string(seed)},
        {"batch_size", std::to_string(batch_size)},
        {"real_batch_size", std::to_string(real_batch_size)},
        {"steps", std::to_string(steps)},
        {"lr", fmt(adam.lr)},
        {"beta1", fmt(adam.beta1)},
        {"beta2", fmt(adam.beta2)},
        {"feedback_iters", std::to_string(feedback_iters)},
        {"lambda_m", fmt(weights.multiplier)},
        {"lambda_s", fmt(weights.structure)},
        {"lambda_u", fmt(weights.uncertainty)},
        {"lambda_d", fmt(weights.adversarial)},
        {"crop_size", std::to_string(crop_size)},
        {"feedback_paired_losses", feedback_paired_losses ? "1" : "0"},
        {"adversarial", objective == AdversarialObjective::LeastSquares ? "lsgan" : "bce"},
        {"structure_patch", std::to_string(structure.patch_size)},
        {"structure_key_dim", std::to_string(structure.key_dim)},
        {"structure_seed", std::to_string(structure.seed)},
    };
}

void TrainingData::validate() const {
    if (paired_fog.empty() || real_fog.empty() || references.empty())
        throw std::invalid_argument("TrainingData: paired, real and reference sets must all be non-empty");
    if (paired_fog.size() != paired_clear.size())
        throw std::invalid_argument("TrainingData: paired fog and clear counts differ");
    const Image& ref = paired_fog.front();
    if (ref.height != ref.width || ref.channels != 3 || ref.height % 16 != 0)
        throw std::invalid_argument("TrainingData: images must be square RGB with a side that is a multiple of 16");
    auto check = [&](const std::vector<Image>& v, const char* what) {
        for (const auto& img : v)
            if (!img.same_shape(ref)) throw std::invalid_argument(std::string("TrainingData: ") + what + " image shape differs");
    };
    check(paired_fog, "paired fog");
    check(paired_clear, "paired clear");
    check(real_fog, "real fog");
    check(references, "reference");
}

std::size_t TrainingData::image_size() const { return paired_fog.empty() ? 0 : paired_fog.front().height; }

std::string format_record(const StepRecord& r) {
    std::ostringstream os;
    os << "stage=" << r.stage << "\tstep=" << r.step << "\tmultiplier=" << fmt(r.multiplier)
       << "\tstructure=" << fmt(r.structure) << "\tuncertainty=" << fmt(r.uncertainty) << "\tmse=" << fmt(r.mse)
       << "\tadversarial=" << fmt(r.adversarial) << "\tfb_mse=" << fmt(r.fb_mse)
       << "\tfb_uncertainty=" << fmt(r.fb_uncertainty) << "\tfb_adversarial=" << fmt(r.fb_adversarial)
       << "\tw_multiplier=" << fmt(r.w_multiplier) << "\tw_structure=" << fmt(r.w_structure)
       << "\tw_uncertainty=" << fmt(r.w_uncertainty) << "\tw_mse=" << fmt(r.w_mse)
       << "\tw_adversarial=" << fmt(r.w_adversarial) << "\ttotal=" << fmt(r.total)
       << "\tdiscriminator=" << fmt(r.discriminator);
    return os.str();
}

StepRecord parse_record(const std::string& line) {
    StepRecord r;
    std::istringstream is(line);
    for (std::string field; std::getline(is, field, '\t');) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("telemetry: malformed field '" + field + "'");
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "stage") {
            r.stage = val;
            continue;
        }
        if (key == "step") {
            r.step = std::stol(val);
            continue;
        }
        const double v = std::stod(val);
        if (key == "multiplier") r.multiplier = v;
        else if (key == "structure") r.structure = v;
        else if (key == "uncertainty") r.uncertainty = v;
        else if (key == "mse") r.mse = v;
        else if (key == "adversarial") r.adversarial = v;
        else if (key == "fb_mse") r.fb_mse = v;
        else if (key == "fb_uncertainty") r.fb_uncertainty = v;
        else if (key == "fb_adversarial") r.fb_adversarial = v;
        else if (key == "w_multiplier") r.w_multiplier = v;
        else if (key == "w_structure") r.w_structure = v;
        else if (key == "w_uncertainty") r.w_uncertainty = v;
        else if (key == "w_mse") r.w_mse = v;
        else if (key == "w_adversarial") r.w_adversarial = v;
        else if (key == "total") r.total = v;
        else if (key == "discriminator") r.discriminator = v;
    }
    return r;
}

GrayModel GrayModel::initial(std::uint64_t seed) {
    Rng g = Rng::stream(seed, kGrayGen), d = Rng::stream(seed, kGrayDisc);
    return {GeneratorNet(1, false, g), Discriminator(d)};
}

GrayModel GrayModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.config_value("stage") != "gray") throw CheckpointError("checkpoint is not a grayscale-stage checkpoint");
    GrayModel m = initial(ckpt.seed);
    ckpt.restore("gray.generator", m.generator.parameters());
    ckpt.restore("gray.discriminator", m.discriminator.parameters());
    return m;
}

RgbModel RgbModel::initial(std::uint64_t seed) {
    Rng g = Rng::stream(seed, kRgbGen), f = Rng::stream(seed, kRgbFeedback), d = Rng::stream(seed, kRgbDisc);
    return {GeneratorNet(3, true, g), FeedbackEncoder(f), Discriminator(d)};
}

RgbModel RgbModel::from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.config_value("stage") != "rgb") throw CheckpointError("checkpoint is not an RGB-stage checkpoint");
    RgbModel m = initial(ckpt.seed);
    ckpt.restore("rgb.generator", m.generator.parameters());
    ckpt.restore("rgb.feedback", m.feedback.parameters());
    ckpt.restore("rgb.discriminator", m.discriminator.parameters());
    return m;
}

Checkpoint to_checkpoint(const GrayModel& m, const TrainConfig& cfg, std::size_t image_size) {
    Checkpoint c;
    c.seed = cfg.seed;
    c.config = cfg.echo();
    c.config["stage"] = "gray";
    c.config["image_size"] = std::to_string(image_size);
    c.store("gray.generator", m.generator.parameters());
    c.store("gray.discriminator", m.discriminator.parameters());
    return c;
}

Checkpoint to_checkpoint(const RgbModel& m, const TrainConfig& cfg, std::size_t image_size) {
    Checkpoint c;
    c.seed = cfg.seed;
    c.config = cfg.echo();
    c.config["stage"] = "rgb";
    c.config["image_size"] = std::to_string(image_size);
    c.store("rgb.generator", m.generator.parameters());
    c.store("rgb.feedback", m.feedback.parameters());
    c.store("rgb.discriminator", m.discriminator.parameters());
    return c;
}

Checkpoint train_grayscale(const TrainingData& data, const TrainConfig& cfg, const TelemetrySink& sink) {
    data.validate();
    cfg.validate();
    tune_allocator();
    GrayModel model = GrayModel::initial(cfg.seed);
    const NamedTensors gen_params = model.generator.parameters();
    const NamedTensors disc_params = model.discriminator.parameters();
    Adam gen_opt(tensors_of(gen_params), cfg.adam);
    Adam disc_opt(tensors_of(disc_params), cfg.adam);
    Rng rng = Rng::stream(cfg.seed, kGrayData);

    for (long step = 1; step <= cfg.steps; ++step) {
        Batch b = sample_batch(data, cfg, rng);
        Tensor gray_in = to_grayscale(b.fog);
        GeneratorOutput out = gray_forward(model.generator, gray_in);

        LossParts parts;
        if (b.paired > 0) parts.mse = mse_loss(rows(out.image, 0, b.paired), to_grayscale(b.clear));
        parts.adversarial = generator_adversarial_loss(model.discriminator, out.image, cfg.objective);
        Tensor total = total_loss(parts, cfg.weights);
        total.backward();
        gen_opt.step();

        zero_grad(disc_params);
        Tensor d_loss = discriminator_loss(model.discriminator, out.image, to_grayscale(b.references), cfg.objective);
        d_loss.backward();
        disc_opt.step();

        if (sink) {
            StepRecord r;
            r.stage = "gray";
            r.step = step;
            r.mse = part_value(parts.mse);
            r.adversarial = part_value(parts.adversarial);
            fill_weighted(r, cfg.weights);
            r.total = total.item();
            r.discriminator = d_loss.item();
            sink(r);
        }
    }
    return to_checkpoint(model, cfg, data.image_size());
}

RgbTrainer::RgbTrainer(const Checkpoint& gray, const TrainingData& data, const TrainConfig& cfg)
    : data_(data),
      cfg_(cfg),
      gray_(GrayModel::from_checkpoint(gray)),
      rgb_(RgbModel::initial(cfg.seed)),
      encoder_(cfg.structure),
      gen_opt_({}, cfg.adam),
      disc_opt_({}, cfg.adam),
      rng_(Rng::stream(cfg.seed, kRgbData)) {
    data_.validate();
    cfg_.validate();
    tune_allocator();
    const std::string gray_size = gray.config_value("image_size");
    const std::size_t size = cfg_.crop_size ? std::min(cfg_.crop_size, data_.image_size()) : data_.image_size();
    if (gray_size != std::to_string(data_.image_size()))
        throw std::invalid_argument("train_rgb: grayscale checkpoint was trained at resolution " + gray_size +
                                    " but the data is " + std::to_string(data_.image_size()));
    // The multiplier consistency term needs identical bottleneck shapes.
    {
        NoGradGuard guard;
        Tensor probe_rgb = Tensor::zeros({1, 3, size, size});
        Tensor m_gray = gray_forward(gray_.generator, to_grayscale(probe_rgb)).multiplier;
        Tensor m_rgb = rgb_forward(rgb_.generator, probe_rgb).multiplier;
        if (m_gray.shape() != m_rgb.shape() || bottleneck_channels(m_gray) != bottleneck_channels(m_rgb))
            throw std::invalid_argument("train_rgb: grayscale bottleneck " + shape_str(m_gray.shape()) +
                                        " differs from RGB bottleneck " + shape_str(m_rgb.shape()));
    }
    set_requires_grad(gray_.generator.parameters(), false);
    set_requires_grad(gray_.discriminator.parameters(), false);
    std::vector<Tensor> gen = tensors_of(rgb_.generator.parameters());
    for (const auto& t : tensors_of(rgb_.feedback.parameters())) gen.push_back(t);
    gen_opt_ = Adam(gen, cfg_.adam);
    disc_opt_ = Adam(tensors_of(rgb_.discriminator.parameters()), cfg_.adam);
}

StepRecord RgbTrainer::step() {
    ++step_;
    Batch b = sample_batch(data_, cfg_, rng_);
    const std::size_t n = b.fog.dim(0), p = b.paired;
    const LossWeights& w = cfg_.weights;

    GeneratorOutput guide;
    {
        NoGradGuard guard;
        guide = gray_forward(gray_.generator, to_grayscale(b.fog));
    }

    GeneratorOutput out = rgb_forward(rgb_.generator, b.fog);
    LossParts parts;
    if (p > 0) {
        parts.mse = mse_loss(rows(out.image, 0, p), b.clear);
        parts.uncertainty = uncertainty_loss(rows(out.image, 0, p), b.clear, rows(out.uncertainty, 0, p));
    }
    parts.multiplier = batch_multiplier_consistency(out.multiplier, guide.multiplier);
    parts.structure = structure_loss(out.image, guide.image.detach(), encoder_);
    parts.adversarial = generator_adversarial_loss(rgb_.discriminator, to_grayscale(out.image), cfg_.objective);
    Tensor total = total_loss(parts, w);

    // Unrolled feedback refinement: each pass corrects the previous image and
    // theta. Theta is fed back detached, the image chain is not.
    std::vector<Tensor> fakes{to_grayscale(out.image).detach()};
    StepRecord rec;
    const int K = cfg_.feedback_iters;
    if (K > 0) {
        const bool paired_terms = cfg_.feedback_paired_losses && p > 0;
        const std::size_t begin = paired_terms ? 0 : p;
        if (begin < n) {
            Tensor x = rows(b.fog, begin, n);
            Tensor theta = rows(out.uncertainty, begin, n).detach();
            Tensor fb_adv, fb_mse, fb_unc;
            auto acc = [](Tensor& a, const Tensor& v) { a = a.defined() ? add(a, v) : v; };
            Tensor image = rows(out.image, begin, n);
            for (int i = 0; i < K; ++i) {
                GeneratorOutput o = feedback_forward(rgb_.feedback, rgb_.generator, x, theta, image);
                image = o.image;
                if (p < n) {
                    Tensor real_out = rows(o.image, p - begin, n - begin);
                    Tensor real_gray = to_grayscale(real_out);
                    acc(fb_adv, generator_adversarial_loss(rgb_.discriminator, real_gray, cfg_.objective));
                    fakes.push_back(real_gray.detach());
                }
                if (paired_terms) {
                    Tensor paired_out = rows(o.image, 0, p);
                    acc(fb_mse, mse_loss(paired_out, b.clear));
                    acc(fb_unc, uncertainty_loss(paired_out, b.clear, rows(o.uncertainty, 0, p)));
                }
                theta = o.uncertainty.detach();
            }
            const double inv_k = 1.0 / K;
            if (fb_adv.defined()) {
                fb_adv = mul_scalar(fb_adv, inv_k);
                total = add(total, mul_scalar(fb_adv, w.adversarial));
                rec.fb_adversarial = fb_adv.item();
            }
            if (fb_mse.defined()) {
                fb_mse = mul_scalar(fb_mse, inv_k);
                fb_unc = mul_scalar(fb_unc, inv_k);
                total = add(total, add(fb_mse, mul_scalar(fb_unc, w.uncertainty)));
                rec.fb_mse = fb_mse.item();
                rec.fb_uncertainty = fb_unc.item();
            }
        }
    }
    total.backward();
    gen_opt_.step();

    const NamedTensors disc_params = rgb_.discriminator.parameters();
    zero_grad(disc_params);
    Tensor fake_gray = fakes.size() == 1 ? fakes.front() : concat(fakes, 0);
    Tensor d_loss = discriminator_loss(rgb_.discriminator, fake_gray, to_grayscale(b.references), cfg_.objective);
    d_loss.backward();
    disc_opt_.step();

    rec.stage = "rgb";
    rec.step = step_;
    rec.multiplier = part_value(parts.multiplier);
    rec.structure = part_value(parts.structure);
    rec.uncertainty = part_value(parts.uncertainty);
    rec.mse = part_value(parts.mse);
    rec.adversarial = part_value(parts.adversarial);
    fill_weighted(rec, w);
    rec.total = total.item();
    rec.discriminator = d_loss.item();
    return rec;
}

Checkpoint train_rgb(const Checkpoint& gray, const TrainingData& data, const TrainConfig& cfg, const TelemetrySink& sink) {
    RgbTrainer trainer(gray, data, cfg);
    for (long s = 0; s < cfg.steps; ++s) {
        StepRecord r = trainer.step();
        if (sink) sink(r);
    }
    Checkpoint c = to_checkpoint(trainer.model(), cfg, data.image_size());
    c.config["gray_seed"] = std::to_string(gray.seed);
    return c;
}

DefogResult defog(const RgbModel& model, const Image& input, int iterations) {
    if (iterations < 0) throw std::invalid_argument("defog: negative iteration count");
    if (input.channels != 3) throw std::invalid_argument("defog: expected an RGB image");
    const std::size_t h = input.height, w = input.width;
    const std::size_t ph = std::max<std::size_t>((h + 7) / 8 * 8, 8), pw = std::max<std::size_t>((w + 7) / 8 * 8, 8);
    Image padded(ph, pw, 3);
    for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x)
            for (std::size_t c = 0; c < 3; ++c) padded.at(y, x, c) = input.at(std::min(y, h - 1), std::min(x, w - 1), c);
    auto unpad = [&](const Image& img) {
        if (img.height == h && img.width == w) return img;
        Image out(h, w, img.channels);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, x, c);
        return out;
    };

    NoGradGuard guard;
    Tensor x = to_tensor(padded);
    GeneratorOutput out = rgb_forward(model.generator, x);
    DefogResult r;
    r.uncertainty.push_back(unpad(to_image(out.uncertainty)));
    Tensor theta = out.uncertainty;
    for (int i = 0; i < iterations; ++i) {
        out = feedback_forward(model.feedback, model.generator, x, theta, out.image);
        theta = out.uncertainty;
        r.uncertainty.push_back(unpad(to_image(theta)));
    }
    r.output = unpad(to_image(out.image));
    return r;
}

}  // namespace fog
