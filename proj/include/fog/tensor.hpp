#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fog {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

/// One recorded operation. `backward` reads the output gradient and
/// accumulates into the gradients of `inputs`.
struct Node {
    std::string op;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until a gradient reaches this tensor
    bool requires_grad = false;
    std::shared_ptr<Node> grad_fn;

    /// Allocates (zeroed) gradient storage if missing and returns it.
    std::vector<double>& grad_buffer();
};

/// Dense row-major float64 tensor with reverse-mode autodiff.
///
/// Tensors are handles: copying a Tensor shares storage. Ops never mutate
/// their inputs; they return new tensors and, when any input requires a
/// gradient and recording is enabled, attach a Node to the result.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim(std::size_t i) const;
    std::size_t ndim() const { return shape().size(); }
    std::size_t numel() const;

    std::span<const double> data() const;
    /// Mutable access for leaves (parameters, inputs). Never call on a tensor
    /// that has already been consumed by a recorded op.
    std::span<double> mutable_data();
    double item() const;
    double operator[](std::size_t i) const { return data()[i]; }

    bool requires_grad() const;
    void set_requires_grad(bool on);
    bool is_leaf() const;

    /// Gradient of the last backward pass; empty span if none reached us.
    std::span<const double> grad() const;
    bool has_grad() const;
    void zero_grad();

    /// Runs reverse-mode differentiation from this scalar. Leaf gradients
    /// accumulate; intermediate gradients and the graph are released.
    void backward() const;

    /// Same storage copy without history.
    Tensor detach() const;
    Tensor clone() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<TensorImpl> impl_;
};

/// True while gradient recording is on for this thread.
bool grad_enabled();

/// RAII guard disabling graph recording (inference, frozen networks).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Builds an op result. `inputs` decide whether history is recorded;
/// `backward` is attached only when it is.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs,
                   std::function<void(const TensorImpl& out)> backward);

/// Number of nodes reachable from `t` (test/diagnostic helper).
std::size_t graph_size(const Tensor& t);

}  // namespace fog
