#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fog/checkpoint.hpp"
#include "fog/image.hpp"
#include "fog/losses.hpp"
#include "fog/networks.hpp"
#include "fog/nn.hpp"
#include "fog/rng.hpp"
#include "fog/structure.hpp"

namespace fog {

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t batch_size = 4;       // paired images per step
    std::size_t real_batch_size = 2;  // unpaired images per step
    long steps = 1000;
    Adam::Options adam{};
    int feedback_iters = 2;        // K, at most kMaxFeedbackIters
    LossWeights weights{};
    std::size_t crop_size = 32;    // random square crops; 0 keeps full images
    /// Feedback passes on paired images also get MSE + uncertainty terms.
    bool feedback_paired_losses = true;
    AdversarialObjective objective = AdversarialObjective::LeastSquares;
    StructureEncoderConfig structure{};

    void validate() const;
    /// Flat key/value echo stored in checkpoints and run directories.
    std::map<std::string, std::string> echo() const;
};

inline constexpr int kMaxFeedbackIters = 3;

/// In-memory training images. Paired fog/clear share indices; references are
/// clear images for the discriminator (paired ground truths plus unrelated
/// clear scenes).
struct TrainingData {
    std::vector<Image> paired_fog;
    std::vector<Image> paired_clear;
    std::vector<Image> real_fog;
    std::vector<Image> references;

    void validate() const;
    std::size_t image_size() const;
};

/// One logged training step.
struct StepRecord {
    std::string stage;
    long step = 0;
    // raw loss terms of the initial pass
    double multiplier = 0, structure = 0, uncertainty = 0, mse = 0, adversarial = 0;
    // feedback-pass terms (averaged over iterations)
    double fb_mse = 0, fb_uncertainty = 0, fb_adversarial = 0;
    // weighted terms
    double w_multiplier = 0, w_structure = 0, w_uncertainty = 0, w_mse = 0, w_adversarial = 0;
    double total = 0;
    double discriminator = 0;
};

/// Line format: tab-separated key=value pairs, full double precision.
std::string format_record(const StepRecord& r);
StepRecord parse_record(const std::string& line);

using TelemetrySink = std::function<void(const StepRecord&)>;

struct GrayModel {
    GeneratorNet generator;
    Discriminator discriminator;

    static GrayModel initial(std::uint64_t seed);
    static GrayModel from_checkpoint(const Checkpoint& ckpt);
};

struct RgbModel {
    GeneratorNet generator;
    FeedbackEncoder feedback;
    Discriminator discriminator;

    static RgbModel initial(std::uint64_t seed);
    static RgbModel from_checkpoint(const Checkpoint& ckpt);
};

Checkpoint to_checkpoint(const GrayModel& m, const TrainConfig& cfg, std::size_t image_size);
Checkpoint to_checkpoint(const RgbModel& m, const TrainConfig& cfg, std::size_t image_size);

/// Stage 1: grayscale generator with MSE (paired) and adversarial (all) terms.
Checkpoint train_grayscale(const TrainingData& data, const TrainConfig& cfg, const TelemetrySink& sink = {});

/// Stage 2: RGB generator, feedback encoder and discriminator, guided by the
/// frozen grayscale network.
Checkpoint train_rgb(const Checkpoint& gray, const TrainingData& data, const TrainConfig& cfg,
                     const TelemetrySink& sink = {});

/// Stateful stage-2 trainer, exposed so single steps can be audited.
class RgbTrainer {
public:
    RgbTrainer(const Checkpoint& gray, const TrainingData& data, const TrainConfig& cfg);

    StepRecord step();
    const GrayModel& gray() const { return gray_; }
    const RgbModel& model() const { return rgb_; }
    long steps_done() const { return step_; }

private:
    const TrainingData& data_;
    TrainConfig cfg_;
    GrayModel gray_;
    RgbModel rgb_;
    StructureEncoder encoder_;
    Adam gen_opt_;
    Adam disc_opt_;
    Rng rng_;
    long step_ = 0;
};

struct DefogResult {
    Image output;
    std::vector<Image> uncertainty;  // theta_0 .. theta_K
};

/// Initial RGB pass followed by K feedback refinements. Inputs of any size
/// are edge-padded to a multiple of 8 and cropped back.
DefogResult defog(const RgbModel& model, const Image& input, int iterations);

}  // namespace fog
