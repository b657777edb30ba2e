#include "fog/losses.hpp"

#include <stdexcept>
#include <string>

#include "fog/ops.hpp"

namespace fog {

namespace {

void require_same(const char* who, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(who) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

void require_gray(const char* who, const Tensor& t) {
    if (t.ndim() != 4 || t.dim(1) != 1)
        throw std::invalid_argument(std::string(who) + ": expected single-channel images, got " + shape_str(t.shape()));
}

}  // namespace

Tensor multiplier_consistency(const Tensor& m_rgb, const Tensor& m_gray) {
    require_same("multiplier_consistency", m_rgb, m_gray);
    return sqrt(sum(square(sub(m_rgb, m_gray.detach()))));
}

Tensor uncertainty_loss(const Tensor& prediction, const Tensor& target, const Tensor& theta, double eps) {
    require_same("uncertainty_loss", prediction, target);
    if (theta.ndim() != 4 || theta.dim(1) != 1 || theta.dim(0) != prediction.dim(0) || theta.dim(2) != prediction.dim(2) ||
        theta.dim(3) != prediction.dim(3))
        throw std::invalid_argument("uncertainty_loss: theta " + shape_str(theta.shape()) + " does not match " +
                                    shape_str(prediction.shape()));
    for (double v : theta.data())
        if (!(v >= 0.0)) throw std::invalid_argument("uncertainty_loss: negative uncertainty");
    Tensor residual = channel_mix(abs(sub(prediction, target)), std::vector<double>(prediction.dim(1), 1.0));
    Tensor scaled = div(residual, add_scalar(theta, eps));
    return mean(add(scaled, log(add_scalar(theta, 1.0))));
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
    require_same("mse_loss", prediction, target);
    return mean(square(sub(prediction, target)));
}

Tensor generator_adversarial_loss(const Discriminator& d, const Tensor& fake, AdversarialObjective objective) {
    require_gray("generator_adversarial_loss", fake);
    Tensor logits = d.forward(fake);
    if (objective == AdversarialObjective::LeastSquares) return mean(square(add_scalar(logits, -1.0)));
    return mean(softplus(mul_scalar(logits, -1.0)));
}

Tensor discriminator_loss(const Discriminator& d, const Tensor& fake, const Tensor& real, AdversarialObjective objective) {
    require_gray("discriminator_loss", fake);
    require_gray("discriminator_loss", real);
    Tensor on_real = d.forward(real);
    Tensor on_fake = d.forward(fake.detach());
    if (objective == AdversarialObjective::LeastSquares)
        return add(mean(square(add_scalar(on_real, -1.0))), mean(square(on_fake)));
    return add(mean(softplus(mul_scalar(on_real, -1.0))), mean(softplus(on_fake)));
}

AdversarialLosses adversarial_losses(const Discriminator& d, const Tensor& fake, const Tensor& real,
                                     AdversarialObjective objective) {
    if (fake.ndim() != 4 || real.ndim() != 4 || fake.dim(1) != real.dim(1))
        throw std::invalid_argument("adversarial_losses: channel mismatch " + shape_str(fake.shape()) + " vs " +
                                    shape_str(real.shape()));
    return {generator_adversarial_loss(d, fake, objective), discriminator_loss(d, fake, real, objective)};
}

Tensor total_loss(const LossParts& parts, const LossWeights& w) {
    if (w.multiplier < 0 || w.structure < 0 || w.uncertainty < 0 || w.adversarial < 0)
        throw std::invalid_argument("total_loss: loss weights must be non-negative");
    Tensor total = Tensor::scalar(0.0);
    auto acc = [&](const Tensor& part, double weight) {
        if (!part.defined()) return;
        total = add(total, weight == 1.0 ? part : mul_scalar(part, weight));
    };
    acc(parts.multiplier, w.multiplier);
    acc(parts.structure, w.structure);
    acc(parts.uncertainty, w.uncertainty);
    acc(parts.mse, 1.0);
    acc(parts.adversarial, w.adversarial);
    return total;
}

double part_value(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

}  // namespace fog
