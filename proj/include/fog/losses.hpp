#pragma once

#include "fog/networks.hpp"
#include "fog/tensor.hpp"

namespace fog {

/// Guard added to the uncertainty denominator.
inline constexpr double kUncertaintyEpsilon = 1e-6;

struct LossWeights {
    double multiplier = 1.0;
    double structure = 0.1;
    double uncertainty = 1.0;
    double adversarial = 0.005;
};

enum class AdversarialObjective { LeastSquares, BinaryCrossEntropy };

/// Raw loss terms of one step. Undefined tensors count as zero.
struct LossParts {
    Tensor multiplier;
    Tensor structure;
    Tensor uncertainty;
    Tensor mse;
    Tensor adversarial;
};

/// ||M_I - M_Y||_2 over the whole tensor. M_Y is treated as a constant.
Tensor multiplier_consistency(const Tensor& m_rgb, const Tensor& m_gray);

/// mean over pixels of |J_hat - J|_1 / (theta + eps) + ln(theta + 1), with
/// the L1 norm summed over channels and theta of shape (N, 1, H, W).
Tensor uncertainty_loss(const Tensor& prediction, const Tensor& target, const Tensor& theta,
                        double eps = kUncertaintyEpsilon);

Tensor mse_loss(const Tensor& prediction, const Tensor& target);

struct AdversarialLosses {
    Tensor generator;
    Tensor discriminator;
};

/// Generator and discriminator objectives on grayscale images. The
/// discriminator term sees `fake` detached.
AdversarialLosses adversarial_losses(const Discriminator& d, const Tensor& fake, const Tensor& real,
                                     AdversarialObjective objective = AdversarialObjective::LeastSquares);
Tensor generator_adversarial_loss(const Discriminator& d, const Tensor& fake,
                                  AdversarialObjective objective = AdversarialObjective::LeastSquares);
Tensor discriminator_loss(const Discriminator& d, const Tensor& fake, const Tensor& real,
                          AdversarialObjective objective = AdversarialObjective::LeastSquares);

/// lambda_m L_m + lambda_s L_s + lambda_u L_u + L_mse + lambda_d L_d.
Tensor total_loss(const LossParts& parts, const LossWeights& w);

/// Scalar value of a possibly-undefined part.
double part_value(const Tensor& t);

}  // namespace fog
