#pragma once

#include <cstddef>
#include <cstdint>

#include "fog/nn.hpp"
#include "fog/rng.hpp"
#include "fog/tensor.hpp"

namespace fog {

/// Offset added to softplus in every multiplier head, keeping M strictly positive.
inline constexpr double kMultiplierEpsilon = 1e-3;

/// Encoder activations kept for the decoder's skip connections.
struct Encoded {
    Tensor input;
    Tensor skip1;       // 16 x H/2 x W/2
    Tensor skip2;       // 32 x H/4 x W/4
    Tensor features;    // 64 x H/8 x W/8
    Tensor multiplier;  // same shape as features
};

struct GeneratorOutput {
    Tensor image;        // sigmoid head, input channel count
    Tensor multiplier;   // bottleneck multiplier the features were scaled by
    Tensor uncertainty;  // softplus head, 1 channel; undefined for the grayscale net
};

/// Three-level U-shaped generator. The bottleneck features are scaled by a
/// predicted multiplier before decoding; upsampling is nearest resize + conv.
class GeneratorNet {
public:
    GeneratorNet(std::size_t input_channels, bool with_uncertainty, Rng& rng);

    std::size_t input_channels() const { return in_ch_; }
    bool has_uncertainty() const { return with_uncertainty_; }

    Encoded encode(const Tensor& x) const;
    /// Decodes already-multiplied bottleneck features. With `prev_uncertainty`
    /// the uncertainty head predicts a correction of that map instead.
    GeneratorOutput decode(const Encoded& enc, const Tensor& scaled_features,
                           const Tensor& prev_uncertainty = Tensor(), const Tensor& prev_image = Tensor()) const;
    GeneratorOutput forward(const Tensor& x) const;

    NamedTensors parameters() const;

private:
    std::size_t in_ch_;
    bool with_uncertainty_;
    Conv2d enc1_, enc2_, enc3_, mult_head_;
    Conv2d dec3_, dec2_, dec1_, image_head_, unc_head_, refine_head_;
};

/// Encoder over [RGB, uncertainty] producing the feedback multiplier.
class FeedbackEncoder {
public:
    explicit FeedbackEncoder(Rng& rng);

    /// x: (N, 4, H, W). Returns a bottleneck-shaped multiplier.
    Tensor forward(const Tensor& x) const;
    NamedTensors parameters() const;

    /// When set, the head returns exactly 1 everywhere (ablation/testing).
    void force_identity(bool on) { identity_ = on; }
    bool identity_forced() const { return identity_; }

private:
    Conv2d enc1_, enc2_, enc3_, head_;
    bool identity_ = false;
};

/// Patch discriminator: four stride-2 convolutions over one channel.
class Discriminator {
public:
    explicit Discriminator(Rng& rng);

    Tensor forward(const Tensor& y) const;
    NamedTensors parameters() const;

private:
    Conv2d c1_, c2_, c3_, c4_;
};

/// Grayscale generator pass; rejects inputs that are not single-channel.
GeneratorOutput gray_forward(const GeneratorNet& net, const Tensor& gray);
/// RGB generator pass with the uncertainty head.
GeneratorOutput rgb_forward(const GeneratorNet& net, const Tensor& rgb);
/// Refinement pass: RGB features scaled by M_I and by the feedback multiplier
/// computed from the input and the previous uncertainty map. The image head
/// and the uncertainty head then correct `prev_image` (the input when
/// undefined) and `prev_uncertainty` rather than predicting from scratch.
GeneratorOutput feedback_forward(const FeedbackEncoder& fb, const GeneratorNet& rgb_net, const Tensor& rgb,
                                 const Tensor& prev_uncertainty, const Tensor& prev_image = Tensor());
/// Patch logit map, H/16 x W/16.
Tensor discriminator_forward(const Discriminator& d, const Tensor& gray);

}  // namespace fog
