#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fog/rng.hpp"
#include "fog/tensor.hpp"

namespace fog {

/// Max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// with numeric derivatives from central differences of step `h`.
/// `f` must return a scalar tensor; `x` is not modified.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-5);

/// Same measure for gradients with respect to existing leaves (network
/// weights). Checks at most `max_per_tensor` randomly chosen elements of each
/// leaf; 0 means all of them. Leaves are restored bit-exactly afterwards.
double grad_check_leaves(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double h = 1e-5,
                         std::size_t max_per_tensor = 0, std::uint64_t seed = 0);

}  // namespace fog
