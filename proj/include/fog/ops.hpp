#pragma once

#include <cstddef>
#include <vector>

#include "fog/tensor.hpp"

namespace fog {

// Elementwise binary ops; operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
/// c - x
Tensor rsub_scalar(double c, const Tensor& x);

// Elementwise unary ops.
Tensor square(const Tensor& x);
/// Subgradient 0 at x = 0.
Tensor sqrt(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
/// Subgradient 0 at x = 0.
Tensor abs(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);

// Reductions to a 1-element tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Matrix ops on 2-D tensors.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
/// Row-wise softmax of an m x n matrix.
Tensor softmax_rows(const Tensor& x);
/// Scales each row to unit L2 norm. Rows with norm <= min_norm are replaced
/// by the first basis vector (zero gradient); `fallback_count` receives how
/// many rows that happened to.
Tensor row_normalize(const Tensor& x, double min_norm = 1e-12, std::size_t* fallback_count = nullptr);

Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

// Image ops on NCHW tensors.

/// 2-D convolution with square kernels and zero padding. `bias` may be
/// undefined. Weight layout O x C x k x k.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride, std::size_t pad);
Tensor resize_nearest(const Tensor& x, std::size_t out_h, std::size_t out_w);
/// Weighted channel sum: (N, C, H, W) -> (N, 1, H, W).
Tensor channel_mix(const Tensor& x, const std::vector<double>& weights);
/// (N, 1, H, W) -> (N, C, H, W).
Tensor repeat_channels(const Tensor& x, std::size_t channels);
/// (1, C, H, W) -> (n, C*p*p) non-overlapping patches in raster order,
/// zero-padded up to a multiple of p.
Tensor patchify(const Tensor& x, std::size_t patch);

}  // namespace fog
