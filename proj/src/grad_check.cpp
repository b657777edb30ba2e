#include "fog/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fog {

namespace {

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

double eval_scalar(const std::function<Tensor()>& f) {
    NoGradGuard guard;
    return f().item();
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
    Tensor leaf = x.clone();
    leaf.set_requires_grad(true);
    return grad_check_leaves([&] { return f(leaf); }, {leaf}, h, 0, 0);
}

double grad_check_leaves(const std::function<Tensor()>& f, std::vector<Tensor> leaves, double h,
                         std::size_t max_per_tensor, std::uint64_t seed) {
    for (auto& l : leaves) {
        if (!l.is_leaf() || !l.requires_grad())
            throw std::invalid_argument("grad_check_leaves: every tensor must be a leaf with requires_grad");
        l.zero_grad();
    }
    Tensor loss = f();
    if (loss.numel() != 1) throw std::invalid_argument("grad_check: function must return a scalar");
    loss.backward();

    Rng rng(seed);
    double worst = 0.0;
    for (auto& l : leaves) {
        std::vector<double> analytic(l.numel(), 0.0);
        if (l.has_grad()) std::copy(l.grad().begin(), l.grad().end(), analytic.begin());
        std::vector<std::size_t> idx(l.numel());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (max_per_tensor != 0 && idx.size() > max_per_tensor) {
            for (std::size_t i = 0; i < max_per_tensor; ++i)
                std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
            idx.resize(max_per_tensor);
        }
        auto data = l.mutable_data();
        for (std::size_t i : idx) {
            const double orig = data[i];
            data[i] = orig + h;
            const double fp = eval_scalar(f);
            data[i] = orig - h;
            const double fm = eval_scalar(f);
            data[i] = orig;
            worst = std::max(worst, relative_error(analytic[i], (fp - fm) / (2.0 * h)));
        }
        l.zero_grad();
    }
    return worst;
}

}  // namespace fog
