#include "fog/fog_physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fog/ops.hpp"

namespace fog {

namespace {

void check_field(const FogField& f) {
    if (!f.beta.same_dims(f.depth) || f.beta.channels != 1 || f.depth.channels != 1)
        throw std::invalid_argument("FogField: beta and depth must be matching single-channel maps");
    for (double b : f.beta.pixels)
        if (!(b >= 0.0)) throw std::invalid_argument("FogField: negative attenuation coefficient");
    for (double d : f.depth.pixels)
        if (!(d >= 0.0)) throw std::invalid_argument("FogField: negative depth");
}

void check_airlight(const std::vector<double>& a, std::size_t channels) {
    if (a.size() != 1 && a.size() != channels)
        throw std::invalid_argument("airlight has " + std::to_string(a.size()) + " values for a " +
                                    std::to_string(channels) + "-channel image");
    for (double v : a)
        if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("airlight must lie in (0, 1]");
}

void check_transmission(const Image& img, const Image& t) {
    if (!img.same_dims(t) || t.channels != 1)
        throw std::invalid_argument("image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                    " but transmission is " + std::to_string(t.height) + "x" +
                                    std::to_string(t.width) + "x" + std::to_string(t.channels));
}

double airlight_at(const std::vector<double>& a, std::size_t c) { return a.size() == 1 ? a[0] : a[c]; }

Image raw_transmission(const FogField& field) {
    check_field(field);
    Image t(field.beta.height, field.beta.width, 1);
    for (std::size_t i = 0; i < t.size(); ++i) t.pixels[i] = std::exp(-field.beta.pixels[i] * field.depth.pixels[i]);
    return t;
}

}  // namespace

FogField FogField::uniform(Image depth, double beta, std::vector<double> airlight) {
    FogField f;
    f.beta = Image(depth.height, depth.width, 1, beta);
    f.depth = std::move(depth);
    f.airlight = std::move(airlight);
    return f;
}

bool FogField::is_uniform() const {
    return std::adjacent_find(beta.pixels.begin(), beta.pixels.end(), std::not_equal_to<>()) == beta.pixels.end();
}

FogField FogField::grayscale() const {
    FogField f = *this;
    if (airlight.size() == 3) {
        double y = 0.0;
        for (std::size_t c = 0; c < 3; ++c) y += kLumaWeights[c] * airlight[c];
        f.airlight = {y};
    }
    return f;
}

Image transmission_from_depth(const FogField& field, double t_min) {
    Image t = raw_transmission(field);
    for (auto& v : t.pixels) v = std::clamp(v, t_min, 1.0);
    return t;
}

Image render_fog(const Image& clear, const FogField& field) {
    return render_fog(clear, transmission_from_depth(field), field.airlight);
}

Image render_fog(const Image& clear, const Image& transmission, const std::vector<double>& airlight) {
    check_transmission(clear, transmission);
    check_airlight(airlight, clear.channels);
    Image out(clear.height, clear.width, clear.channels);
    for (std::size_t p = 0; p < clear.height * clear.width; ++p) {
        const double t = transmission.pixels[p];
        for (std::size_t c = 0; c < clear.channels; ++c) {
            const std::size_t i = p * clear.channels + c;
            out.pixels[i] = std::clamp(clear.pixels[i] * t + (1.0 - t) * airlight_at(airlight, c), 0.0, 1.0);
        }
    }
    return out;
}

Image invert_fog(const Image& foggy, const FogField& field, double t_floor) {
    return invert_fog(foggy, raw_transmission(field), field.airlight, t_floor);
}

Image invert_fog(const Image& foggy, const Image& transmission, const std::vector<double>& airlight, double t_floor) {
    check_transmission(foggy, transmission);
    check_airlight(airlight, foggy.channels);
    const double t_lowest = *std::min_element(transmission.pixels.begin(), transmission.pixels.end());
    if (t_lowest < t_floor)
        throw std::domain_error("invert_fog: transmission " + std::to_string(t_lowest) + " below floor " +
                                std::to_string(t_floor) + "; inversion is ill-posed");
    Image out(foggy.height, foggy.width, foggy.channels);
    for (std::size_t p = 0; p < foggy.height * foggy.width; ++p) {
        const double t = transmission.pixels[p];
        for (std::size_t c = 0; c < foggy.channels; ++c) {
            const std::size_t i = p * foggy.channels + c;
            out.pixels[i] = std::clamp((foggy.pixels[i] - (1.0 - t) * airlight_at(airlight, c)) / t, 0.0, 1.0);
        }
    }
    return out;
}

MultiplierMap feature_multiplier(const Image& foggy, const FogField& field) {
    return feature_multiplier(foggy, transmission_from_depth(field), field.airlight);
}

MultiplierMap feature_multiplier(const Image& foggy, const Image& transmission, const std::vector<double>& airlight) {
    check_transmission(foggy, transmission);
    check_airlight(airlight, foggy.channels);
    MultiplierMap m{Image(foggy.height, foggy.width, foggy.channels), 0};
    for (std::size_t p = 0; p < foggy.height * foggy.width; ++p) {
        const double t = transmission.pixels[p];
        for (std::size_t c = 0; c < foggy.channels; ++c) {
            const std::size_t i = p * foggy.channels + c;
            double v = foggy.pixels[i];
            if (v < kDivisionFloor) {
                v = kDivisionFloor;
                ++m.floored;
            }
            const double a = airlight_at(airlight, c);
            m.values.pixels[i] = std::max((v + t * a - a) / (v * t), kMinMultiplier);
        }
    }
    return m;
}

Image to_grayscale(const Image& rgb) {
    if (rgb.channels != 3)
        throw std::invalid_argument("to_grayscale: expected 3 channels, got " + std::to_string(rgb.channels));
    Image y(rgb.height, rgb.width, 1);
    for (std::size_t p = 0; p < y.size(); ++p)
        y.pixels[p] = kLumaWeights[0] * rgb.pixels[3 * p] + kLumaWeights[1] * rgb.pixels[3 * p + 1] +
                      kLumaWeights[2] * rgb.pixels[3 * p + 2];
    return y;
}

Tensor to_grayscale(const Tensor& rgb) {
    if (rgb.ndim() != 4 || rgb.dim(1) != 3)
        throw std::invalid_argument("to_grayscale: expected (N, 3, H, W), got " + shape_str(rgb.shape()));
    return channel_mix(rgb, {kLumaWeights.begin(), kLumaWeights.end()});
}

}  // namespace fog
