#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fog/image.hpp"
#include "fog/tensor.hpp"

namespace fog {

/// Lower clamp on transmission; inversion below it is refused.
inline constexpr double kMinTransmission = 1e-3;
/// Floor applied to observed intensity before dividing by it.
inline constexpr double kDivisionFloor = 1e-3;
/// Multipliers are kept strictly positive by this floor.
inline constexpr double kMinMultiplier = 1e-12;

/// BT.601 luma weights.
inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

/// Scattering-medium description for one view: atmospheric light (1 value
/// for grayscale images or 3 for RGB), per-pixel attenuation and depth.
struct FogField {
    std::vector<double> airlight;
    Image beta;   // H x W x 1, >= 0
    Image depth;  // H x W x 1, >= 0

    /// Constant attenuation over the given depth map.
    static FogField uniform(Image depth, double beta, std::vector<double> airlight);
    bool is_uniform() const;
    /// Same field with the achromatic (luma) projection of the airlight.
    FogField grayscale() const;
};

/// t = exp(-beta * d), clamped to [t_min, 1].
Image transmission_from_depth(const FogField& field, double t_min = kMinTransmission);

/// I = J t + (1 - t) A per channel, clamped to [0, 1].
Image render_fog(const Image& clear, const FogField& field);
Image render_fog(const Image& clear, const Image& transmission, const std::vector<double>& airlight);

/// J = (I - (1 - t) A) / t, clamped to [0, 1]. Throws if the unclamped
/// transmission drops below `t_floor` anywhere.
Image invert_fog(const Image& foggy, const FogField& field, double t_floor = kMinTransmission);
Image invert_fog(const Image& foggy, const Image& transmission, const std::vector<double>& airlight,
                 double t_floor = kMinTransmission);

struct MultiplierMap {
    Image values;
    std::size_t floored = 0;  // pixels whose intensity was raised to kDivisionFloor
};

/// Per-pixel M with I * M = J: M = (I + t A - A) / (I t).
MultiplierMap feature_multiplier(const Image& foggy, const FogField& field);
MultiplierMap feature_multiplier(const Image& foggy, const Image& transmission, const std::vector<double>& airlight);

/// BT.601 luma of an RGB image.
Image to_grayscale(const Image& rgb);
/// Differentiable luma of an (N, 3, H, W) tensor.
Tensor to_grayscale(const Tensor& rgb);

}  // namespace fog
