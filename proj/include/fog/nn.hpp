#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fog/ops.hpp"
#include "fog/rng.hpp"
#include "fog/tensor.hpp"

namespace fog {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Square-kernel convolution layer with bias.
struct Conv2d {
    Tensor weight;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t pad = 0;

    Conv2d() = default;
    /// Kaiming-uniform weights scaled by `gain`, zero bias.
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride, std::size_t pad, Rng& rng,
           double gain = 1.0);

    Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }
    void collect(const std::string& prefix, NamedTensors& out) const;
};

void set_requires_grad(const NamedTensors& params, bool on);
void zero_grad(const NamedTensors& params);

/// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
public:
    struct Options {
        double lr = 2e-4;
        double beta1 = 0.5;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(std::vector<Tensor> params, Options opts);

    /// Applies one update from the accumulated gradients (params without a
    /// gradient are left untouched), then clears the gradients.
    void step();
    void zero_grad();
    long steps() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    Options opts_;
    long t_ = 0;
};

std::vector<Tensor> tensors_of(const NamedTensors& named);

}  // namespace fog
