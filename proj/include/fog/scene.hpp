#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fog/fog_physics.hpp"
#include "fog/image.hpp"

namespace fog {

struct SceneConfig {
    std::size_t height = 64;
    std::size_t width = 64;
    int min_layers = 2;
    int max_layers = 5;
    double freq_lo = 2.0;  // texture lattice cells across the image
    double freq_hi = 8.0;
    double max_depth = 2.0;
};

/// Procedural RGB-D scene: textured far background plus layered shapes.
struct SceneSample {
    Image clear;  // RGB
    Image depth;  // 1 channel, [0, max_depth]
    std::uint64_t seed = 0;
};

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& cfg = {});

enum class NoiseFamily { Value, Ridged };

struct BetaFieldConfig {
    std::size_t height = 64;
    std::size_t width = 64;
    double beta_lo = 0.2;
    double beta_hi = 1.2;
    int octaves = 3;
    double base_freq = 2.0;
    bool uniform = false;
    NoiseFamily family = NoiseFamily::Value;
};

/// Smooth attenuation field rescaled to [beta_lo, beta_hi]; constant
/// beta_lo when `uniform` is set.
Image generate_beta_field(std::uint64_t seed, const BetaFieldConfig& cfg);

/// Multi-octave value noise in [0, 1] (before any rescaling).
Image value_noise(std::uint64_t seed, std::size_t height, std::size_t width, double base_freq, int octaves,
                  NoiseFamily family = NoiseFamily::Value);

struct FogProcess {
    SceneConfig scene;
    BetaFieldConfig beta;
    double airlight_lo = 0.75;
    double airlight_hi = 1.0;
    double tint = 0.05;  // max per-channel deviation of A from its mean
};

/// Paired-synthetic process and the held-out process standing in for real fog
/// (ridged attenuation noise, darker and more tinted atmospheric light).
FogProcess paired_process(std::size_t size, double beta_lo = 0.2, double beta_hi = 1.2);
FogProcess held_out_process(std::size_t size, double beta_lo = 0.2, double beta_hi = 1.2);

struct FogSample {
    Image clear;
    Image fog;
    Image depth;
    FogField field;
};

FogSample synthesize(std::uint64_t seed, const FogProcess& process);

}  // namespace fog
