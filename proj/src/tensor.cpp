#include "fog/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace fog {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << ']';
    return os.str();
}

std::vector<double>& TensorImpl::grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) : impl_(std::make_shared<TensorImpl>()) {
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
    if (data.size() != shape_numel(shape))
        throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v, bool requires_grad) { return Tensor(Shape{1}, std::vector<double>{v}, requires_grad); }

const Shape& Tensor::shape() const {
    if (!impl_) throw std::logic_error("Tensor: undefined tensor");
    return impl_->shape;
}

std::size_t Tensor::dim(std::size_t i) const {
    const auto& s = shape();
    if (i >= s.size()) throw std::out_of_range("Tensor::dim: axis " + std::to_string(i) + " of " + shape_str(s));
    return s[i];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<const double> Tensor::data() const {
    if (!impl_) throw std::logic_error("Tensor: undefined tensor");
    return impl_->data;
}

std::span<double> Tensor::mutable_data() {
    if (!impl_) throw std::logic_error("Tensor: undefined tensor");
    return impl_->data;
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
    if (!is_leaf()) throw std::logic_error("Tensor::set_requires_grad: only leaves can change requires_grad");
    impl_->requires_grad = on;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->grad_fn; }

std::span<const double> Tensor::grad() const {
    if (!impl_) return {};
    return impl_->grad;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad() {
    if (impl_) impl_->grad.clear();
}

Tensor Tensor::detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape();
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

Tensor Tensor::clone() const { return detach(); }

void Tensor::backward() const {
    if (!impl_) throw std::logic_error("backward: undefined tensor");
    if (impl_->data.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(impl_->shape));
    if (!impl_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (inputs before users).
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack{{impl_.get(), 0}};
    visited.insert(impl_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        const auto* fn = node->grad_fn.get();
        if (fn && next < fn->inputs.size()) {
            TensorImpl* child = fn->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    impl_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* node = *it;
        if (!node->grad_fn || node->grad.empty()) continue;
        node->grad_fn->backward(*node);
    }
    // Release the graph: intermediate gradients and history go away, leaves keep theirs.
    for (TensorImpl* node : order) {
        if (node->grad_fn) {
            node->grad_fn.reset();
            node->grad.clear();
            node->grad.shrink_to_fit();
            node->requires_grad = false;
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(const char* op, Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                   std::function<void(const TensorImpl& out)> backward) {
    Tensor out(std::move(shape), std::move(data));
    if (!g_grad_enabled) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    auto node = std::make_shared<Node>();
    node->op = op;
    for (const auto& in : inputs) node->inputs.push_back(in.impl());
    node->backward = std::move(backward);
    out.impl()->grad_fn = std::move(node);
    out.impl()->requires_grad = true;
    return out;
}

std::size_t graph_size(const Tensor& t) {
    std::unordered_set<const TensorImpl*> seen;
    std::vector<const TensorImpl*> stack{t.impl().get()};
    std::size_t count = 0;
    while (!stack.empty()) {
        const TensorImpl* n = stack.back();
        stack.pop_back();
        if (!n || !seen.insert(n).second) continue;
        if (n->grad_fn) {
            ++count;
            for (const auto& in : n->grad_fn->inputs) stack.push_back(in.get());
        }
    }
    return count;
}

}  // namespace fog
