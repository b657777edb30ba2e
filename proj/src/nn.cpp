#include "fog/nn.hpp"

#include <cmath>

namespace fog {

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride_, std::size_t pad_,
               Rng& rng, double gain)
    : stride(stride_), pad(pad_) {
    const double fan_in = static_cast<double>(in_ch * kernel * kernel);
    const double bound = gain * std::sqrt(6.0 / ((1.0 + 0.2 * 0.2) * fan_in));
    std::vector<double> w(out_ch * in_ch * kernel * kernel);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    weight = Tensor({out_ch, in_ch, kernel, kernel}, std::move(w), true);
    bias = Tensor({out_ch}, 0.0, true);
}

void Conv2d::collect(const std::string& prefix, NamedTensors& out) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

void set_requires_grad(const NamedTensors& params, bool on) {
    for (const auto& [name, t] : params) {
        Tensor h = t;
        h.set_requires_grad(on);
    }
}

void zero_grad(const NamedTensors& params) {
    for (const auto& [name, t] : params) {
        Tensor h = t;
        h.zero_grad();
    }
}

std::vector<Tensor> tensors_of(const NamedTensors& named) {
    std::vector<Tensor> out;
    out.reserve(named.size());
    for (const auto& [name, t] : named) out.push_back(t);
    return out;
}

Adam::Adam(std::vector<Tensor> params, Options opts) : params_(std::move(params)), opts_(opts) {
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        if (!p.has_grad()) continue;
        const auto g = p.grad();
        auto w = p.mutable_data();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
            w[i] -= opts_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
        }
    }
    zero_grad();
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace fog
