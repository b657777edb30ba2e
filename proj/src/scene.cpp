#include "fog/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fog/rng.hpp"

namespace fog {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// One octave of lattice noise with `cells` cells across each axis.
void add_octave(Image& out, Rng& rng, double cells_y, double cells_x, double amplitude, NoiseFamily family) {
    const auto gy = static_cast<std::size_t>(std::ceil(cells_y)) + 2;
    const auto gx = static_cast<std::size_t>(std::ceil(cells_x)) + 2;
    std::vector<double> lattice(gy * gx);
    for (auto& v : lattice) v = rng.uniform();
    const double ox = rng.uniform(), oy = rng.uniform();
    for (std::size_t y = 0; y < out.height; ++y) {
        const double fy = oy + cells_y * static_cast<double>(y) / static_cast<double>(out.height);
        const auto iy = static_cast<std::size_t>(fy);
        const double ty = smoothstep(fy - static_cast<double>(iy));
        for (std::size_t x = 0; x < out.width; ++x) {
            const double fx = ox + cells_x * static_cast<double>(x) / static_cast<double>(out.width);
            const auto ix = static_cast<std::size_t>(fx);
            const double tx = smoothstep(fx - static_cast<double>(ix));
            const double a = lattice[iy * gx + ix], b = lattice[iy * gx + ix + 1];
            const double c = lattice[(iy + 1) * gx + ix], d = lattice[(iy + 1) * gx + ix + 1];
            double v = (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
            if (family == NoiseFamily::Ridged) v = 1.0 - std::abs(2.0 * v - 1.0);
            out.at(y, x) += amplitude * v;
        }
    }
}

std::vector<double> random_color(Rng& rng) { return {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)}; }

}  // namespace

Image value_noise(std::uint64_t seed, std::size_t height, std::size_t width, double base_freq, int octaves,
                  NoiseFamily family) {
    Rng rng(seed);
    Image out(height, width, 1, 0.0);
    double amp = 1.0, norm = 0.0, freq = base_freq;
    for (int o = 0; o < std::max(octaves, 1); ++o) {
        add_octave(out, rng, freq, freq, amp, family);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    for (auto& v : out.pixels) v /= norm;
    return out;
}

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
    if (cfg.min_layers < 1 || cfg.max_layers < cfg.min_layers)
        throw std::invalid_argument("generate_scene: invalid layer count range");
    Rng rng(seed);
    SceneSample s{Image(cfg.height, cfg.width, 3), Image(cfg.height, cfg.width, 1), seed};
    const double dmax = cfg.max_depth;
    const auto H = static_cast<double>(cfg.height), W = static_cast<double>(cfg.width);

    // Background: textured far plane; depth rises from 0.8 dmax at the bottom row to dmax at the top.
    {
        const auto base = random_color(rng);
        const Image tex = value_noise(rng.next(), cfg.height, cfg.width, rng.uniform(cfg.freq_lo, cfg.freq_hi), 3);
        for (std::size_t y = 0; y < cfg.height; ++y)
            for (std::size_t x = 0; x < cfg.width; ++x) {
                const double m = 0.6 + 0.8 * tex.at(y, x);
                for (std::size_t c = 0; c < 3; ++c) s.clear.at(y, x, c) = std::clamp(base[c] * m, 0.0, 1.0);
                s.depth.at(y, x) = dmax * (0.8 + 0.2 * (1.0 - static_cast<double>(y) / std::max(H - 1.0, 1.0)));
            }
    }

    // Foreground layers at distinct depths in [0.1, 0.6] dmax, painted far to near.
    const int layers = cfg.min_layers + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_layers - cfg.min_layers + 1)));
    std::vector<double> depths;
    for (int i = 0; i < layers; ++i) depths.push_back(dmax * (0.1 + 0.5 * (i + rng.uniform(0.1, 0.9)) / layers));
    std::sort(depths.rbegin(), depths.rend());
    for (double d : depths) {
        const bool ellipse = rng.uniform() < 0.5;
        const double cy = rng.uniform(0.2, 0.8) * H, cx = rng.uniform(0.2, 0.8) * W;
        const double ry = rng.uniform(0.12, 0.3) * H, rx = rng.uniform(0.12, 0.3) * W;
        const auto base = random_color(rng);
        const Image tex = value_noise(rng.next(), cfg.height, cfg.width, rng.uniform(cfg.freq_lo, cfg.freq_hi), 2);
        const double slope = rng.uniform(-0.02, 0.02) * dmax;
        for (std::size_t y = 0; y < cfg.height; ++y)
            for (std::size_t x = 0; x < cfg.width; ++x) {
                const double dy = (static_cast<double>(y) + 0.5 - cy) / ry, dx = (static_cast<double>(x) + 0.5 - cx) / rx;
                const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
                if (!inside) continue;
                const double m = 0.7 + 0.6 * tex.at(y, x);
                for (std::size_t c = 0; c < 3; ++c) s.clear.at(y, x, c) = std::clamp(base[c] * m, 0.0, 1.0);
                s.depth.at(y, x) = std::clamp(d + slope * dy, 0.0, dmax);
            }
    }
    return s;
}

Image generate_beta_field(std::uint64_t seed, const BetaFieldConfig& cfg) {
    if (cfg.beta_lo > cfg.beta_hi) throw std::invalid_argument("generate_beta_field: beta_lo > beta_hi");
    if (cfg.beta_lo < 0.0) throw std::invalid_argument("generate_beta_field: negative attenuation");
    if (cfg.uniform || cfg.beta_lo == cfg.beta_hi) return Image(cfg.height, cfg.width, 1, cfg.beta_lo);
    Image n = value_noise(seed, cfg.height, cfg.width, cfg.base_freq, cfg.octaves, cfg.family);
    const auto [lo_it, hi_it] = std::minmax_element(n.pixels.begin(), n.pixels.end());
    const double lo = *lo_it, hi = *hi_it;
    for (auto& v : n.pixels) {
        const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        v = std::clamp(cfg.beta_lo + u * (cfg.beta_hi - cfg.beta_lo), cfg.beta_lo, cfg.beta_hi);
    }
    return n;
}

FogProcess paired_process(std::size_t size, double beta_lo, double beta_hi) {
    FogProcess p;
    p.scene.height = p.scene.width = size;
    p.beta.height = p.beta.width = size;
    p.beta.beta_lo = beta_lo;
    p.beta.beta_hi = beta_hi;
    p.beta.family = NoiseFamily::Value;
    p.airlight_lo = 0.8;
    p.airlight_hi = 1.0;
    p.tint = 0.05;
    return p;
}

FogProcess held_out_process(std::size_t size, double beta_lo, double beta_hi) {
    FogProcess p = paired_process(size, beta_lo, beta_hi);
    p.beta.family = NoiseFamily::Ridged;
    p.beta.base_freq = 1.5;
    p.airlight_lo = 0.75;
    p.airlight_hi = 0.95;
    p.tint = 0.08;
    return p;
}

FogSample synthesize(std::uint64_t seed, const FogProcess& process) {
    Rng rng = Rng::stream(seed, 7);
    SceneSample scene = generate_scene(seed, process.scene);
    BetaFieldConfig bcfg = process.beta;
    bcfg.height = scene.depth.height;
    bcfg.width = scene.depth.width;
    const double level = rng.uniform(process.airlight_lo, process.airlight_hi);
    std::vector<double> airlight(3);
    for (auto& a : airlight) a = std::clamp(level + rng.uniform(-process.tint, process.tint), 0.05, 1.0);
    FogSample out;
    out.field.beta = generate_beta_field(rng.next(), bcfg);
    out.field.depth = scene.depth;
    out.field.airlight = airlight;
    out.fog = render_fog(scene.clear, out.field);
    out.clear = std::move(scene.clear);
    out.depth = std::move(scene.depth);
    return out;
}

}  // namespace fog
