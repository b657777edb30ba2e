#pragma once

#include <cstddef>
#include <vector>

#include "fog/tensor.hpp"

namespace fog {

/// H x W x C interleaved image with intensities nominally in [0, 1].
/// Also used for single-channel scalar fields (depth, attenuation, transmission).
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const { return pixels[(y * width + x) * channels + c]; }
    std::size_t size() const { return pixels.size(); }
    bool same_dims(const Image& o) const { return height == o.height && width == o.width; }
    bool same_shape(const Image& o) const { return same_dims(o) && channels == o.channels; }
    bool operator==(const Image&) const = default;
};

/// (1, C, H, W) tensor from an image.
Tensor to_tensor(const Image& img);
/// (N, C, H, W) tensor; all images must share a shape.
Tensor to_tensor(const std::vector<Image>& imgs);
/// Image `index` of an NCHW tensor.
Image to_image(const Tensor& t, std::size_t index = 0);

}  // namespace fog
