#include "fog/networks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fog/ops.hpp"

namespace fog {

namespace {

constexpr std::size_t kC1 = 16, kC2 = 32, kC3 = 64;

// Bias that makes softplus(bias) + eps == 1 for a zero pre-activation.
double identity_bias() { return std::log(std::expm1(1.0 - kMultiplierEpsilon)); }

// Small-gain head whose output starts near 1.
Conv2d multiplier_head(std::size_t in_ch, std::size_t out_ch, Rng& rng) {
    Conv2d head(in_ch, out_ch, 3, 1, 1, rng, 0.05);
    for (auto& b : head.bias.mutable_data()) b = identity_bias();
    return head;
}

Tensor multiplier_from(const Conv2d& head, const Tensor& features) {
    return add_scalar(softplus(head(features)), kMultiplierEpsilon);
}

// Bounded logit; the small offset keeps 0 and 1 finite.
Tensor input_logit(const Tensor& x) {
    constexpr double kLogitOffset = 1e-3;
    return sub(log(add_scalar(x, kLogitOffset)), log(add_scalar(rsub_scalar(1.0, x), kLogitOffset)));
}

// log(exp(x) - 1) for x > 0, written as x + log(1 - exp(-x)); x is floored so
// an underflowed softplus stays finite.
Tensor inverse_softplus(const Tensor& x) {
    constexpr double kFloor = 1e-8;
    Tensor xf = add_scalar(x, kFloor);
    return add(xf, log(rsub_scalar(1.0, exp(mul_scalar(xf, -1.0)))));
}

Tensor up_to(const Tensor& x, const Tensor& like) { return resize_nearest(x, like.dim(2), like.dim(3)); }

void require_input(const char* who, const Tensor& x, std::size_t channels) {
    if (x.ndim() != 4 || x.dim(1) != channels)
        throw std::invalid_argument(std::string(who) + ": expected (N, " + std::to_string(channels) + ", H, W) input, got " +
                                    shape_str(x.shape()));
    if (x.dim(2) % 8 != 0 || x.dim(3) % 8 != 0)
        throw std::invalid_argument(std::string(who) + ": spatial size must be a multiple of 8, got " + shape_str(x.shape()));
}

}  // namespace

GeneratorNet::GeneratorNet(std::size_t input_channels, bool with_uncertainty, Rng& rng)
    : in_ch_(input_channels), with_uncertainty_(with_uncertainty) {
    enc1_ = Conv2d(in_ch_, kC1, 3, 2, 1, rng);
    enc2_ = Conv2d(kC1, kC2, 3, 2, 1, rng);
    enc3_ = Conv2d(kC2, kC3, 3, 2, 1, rng);
    mult_head_ = multiplier_head(kC3, kC3, rng);
    dec3_ = Conv2d(kC3 + kC2, kC2, 3, 1, 1, rng);
    dec2_ = Conv2d(kC2 + kC1, kC1, 3, 1, 1, rng);
    dec1_ = Conv2d(kC1 + in_ch_, kC1, 3, 1, 1, rng);
    // first in_ch channels: logit gain, last in_ch: logit offset
    image_head_ = Conv2d(kC1, 2 * in_ch_, 3, 1, 1, rng, 0.05);
    {
        auto bh = image_head_.bias.mutable_data();
        for (std::size_t c = 0; c < in_ch_; ++c) {
            bh[c] = std::log(std::expm1(1.0));
            bh[in_ch_ + c] = 0.0;
        }
    }
    if (with_uncertainty_) {
        unc_head_ = Conv2d(kC1, 1, 3, 1, 1, rng, 0.5);
        // start near theta = 0.1
        for (auto& b : unc_head_.bias.mutable_data()) b = std::log(std::expm1(0.1));
        // starts as theta_i = theta_{i-1}
        refine_head_ = Conv2d(kC1, 1, 3, 1, 1, rng, 0.05);
    }
}

Encoded GeneratorNet::encode(const Tensor& x) const {
    Encoded e;
    e.input = x;
    e.skip1 = leaky_relu(enc1_(x));
    e.skip2 = leaky_relu(enc2_(e.skip1));
    e.features = leaky_relu(enc3_(e.skip2));
    e.multiplier = multiplier_from(mult_head_, e.features);
    return e;
}

GeneratorOutput GeneratorNet::decode(const Encoded& enc, const Tensor& scaled, const Tensor& prev_uncertainty,
                                     const Tensor& prev_image) const {
    Tensor d3 = leaky_relu(dec3_(concat({up_to(scaled, enc.skip2), enc.skip2}, 1)));
    Tensor d2 = leaky_relu(dec2_(concat({up_to(d3, enc.skip1), enc.skip1}, 1)));
    Tensor d1 = leaky_relu(dec1_(concat({up_to(d2, enc.input), enc.input}, 1)));
    GeneratorOutput out;
    // The head modulates the input in logit space, so a gain of 1 and offset 0
    // reproduce the input and detail is carried straight through.
    Tensor head = image_head_(d1);
    Tensor gain = softplus(slice(head, 1, 0, in_ch_));
    Tensor offset = slice(head, 1, in_ch_, 2 * in_ch_);
    out.image = sigmoid(add(mul(gain, input_logit(prev_image.defined() ? prev_image : enc.input)), offset));
    out.multiplier = enc.multiplier;
    if (with_uncertainty_)
        out.uncertainty = prev_uncertainty.defined() ? softplus(add(refine_head_(d1), inverse_softplus(prev_uncertainty)))
                                                     : softplus(unc_head_(d1));
    return out;
}

GeneratorOutput GeneratorNet::forward(const Tensor& x) const {
    Encoded e = encode(x);
    return decode(e, mul(e.features, e.multiplier));
}

NamedTensors GeneratorNet::parameters() const {
    NamedTensors p;
    enc1_.collect("enc1", p);
    enc2_.collect("enc2", p);
    enc3_.collect("enc3", p);
    mult_head_.collect("mult_head", p);
    dec3_.collect("dec3", p);
    dec2_.collect("dec2", p);
    dec1_.collect("dec1", p);
    image_head_.collect("image_head", p);
    if (with_uncertainty_) {
        unc_head_.collect("unc_head", p);
        refine_head_.collect("refine_head", p);
    }
    return p;
}

FeedbackEncoder::FeedbackEncoder(Rng& rng) {
    enc1_ = Conv2d(4, kC1, 3, 2, 1, rng);
    enc2_ = Conv2d(kC1, kC2, 3, 2, 1, rng);
    enc3_ = Conv2d(kC2, kC3, 3, 2, 1, rng);
    head_ = multiplier_head(kC3, kC3, rng);
}

Tensor FeedbackEncoder::forward(const Tensor& x) const {
    require_input("FeedbackEncoder", x, 4);
    if (identity_) return Tensor::ones({x.dim(0), kC3, x.dim(2) / 8, x.dim(3) / 8});
    Tensor h = leaky_relu(enc3_(leaky_relu(enc2_(leaky_relu(enc1_(x))))));
    return multiplier_from(head_, h);
}

NamedTensors FeedbackEncoder::parameters() const {
    NamedTensors p;
    enc1_.collect("enc1", p);
    enc2_.collect("enc2", p);
    enc3_.collect("enc3", p);
    head_.collect("head", p);
    return p;
}

Discriminator::Discriminator(Rng& rng) {
    c1_ = Conv2d(1, kC1, 3, 2, 1, rng);
    c2_ = Conv2d(kC1, kC2, 3, 2, 1, rng);
    c3_ = Conv2d(kC2, kC3, 3, 2, 1, rng);
    c4_ = Conv2d(kC3, 1, 3, 2, 1, rng);
}

Tensor Discriminator::forward(const Tensor& y) const {
    if (y.ndim() != 4 || y.dim(1) != 1)
        throw std::invalid_argument("discriminator: expected single-channel (N, 1, H, W) input, got " + shape_str(y.shape()) +
                                    "; convert with to_grayscale first");
    return c4_(leaky_relu(c3_(leaky_relu(c2_(leaky_relu(c1_(y)))))));
}

NamedTensors Discriminator::parameters() const {
    NamedTensors p;
    c1_.collect("c1", p);
    c2_.collect("c2", p);
    c3_.collect("c3", p);
    c4_.collect("c4", p);
    return p;
}

GeneratorOutput gray_forward(const GeneratorNet& net, const Tensor& gray) {
    if (net.input_channels() != 1) throw std::invalid_argument("gray_forward: network is not a grayscale generator");
    require_input("gray_forward", gray, 1);
    return net.forward(gray);
}

GeneratorOutput rgb_forward(const GeneratorNet& net, const Tensor& rgb) {
    if (net.input_channels() != 3 || !net.has_uncertainty())
        throw std::invalid_argument("rgb_forward: network is not an RGB multi-task generator");
    require_input("rgb_forward", rgb, 3);
    return net.forward(rgb);
}

GeneratorOutput feedback_forward(const FeedbackEncoder& fb, const GeneratorNet& rgb_net, const Tensor& rgb,
                                 const Tensor& prev_uncertainty, const Tensor& prev_image) {
    require_input("feedback_forward", rgb, 3);
    if (prev_uncertainty.ndim() != 4 || prev_uncertainty.dim(0) != rgb.dim(0) || prev_uncertainty.dim(1) != 1 ||
        prev_uncertainty.dim(2) != rgb.dim(2) || prev_uncertainty.dim(3) != rgb.dim(3))
        throw std::invalid_argument("feedback_forward: uncertainty " + shape_str(prev_uncertainty.shape()) +
                                    " does not match input " + shape_str(rgb.shape()));
    Encoded e = rgb_net.encode(rgb);
    Tensor m_fb = fb.forward(concat({rgb, prev_uncertainty}, 1));
    GeneratorOutput out = rgb_net.decode(e, mul(mul(e.features, e.multiplier), m_fb), prev_uncertainty, prev_image);
    out.multiplier = m_fb;
    return out;
}

Tensor discriminator_forward(const Discriminator& d, const Tensor& gray) { return d.forward(gray); }

}  // namespace fog
