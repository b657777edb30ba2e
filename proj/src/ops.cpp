#include "fog/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fog {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void require_ndim(const char* op, const Tensor& x, std::size_t n) {
    if (x.ndim() != n)
        throw std::invalid_argument(std::string(op) + ": expected " + std::to_string(n) + "-D tensor, got " +
                                    shape_str(x.shape()));
}

// Accumulates into an input's gradient only if it participates in autodiff.
template <class F>
void accumulate(const std::shared_ptr<TensorImpl>& in, F&& f) {
    if (!in->requires_grad) return;
    f(in->grad_buffer());
}

template <class Fwd, class Bwd>
Tensor unary(const char* op, const Tensor& x, Fwd fwd, Bwd dydx) {
    const auto xs = x.data();
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
    auto xi = x.impl();
    return make_result(op, x.shape(), std::move(out), {x}, [xi, dydx](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * dydx(xi->data[i], o.data[i]);
        });
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    auto ai = a.impl(), bi = b.impl();
    return make_result("add", a.shape(), std::move(out), {a, b}, [ai, bi](const TensorImpl& o) {
        for (const auto& in : {ai, bi})
            accumulate(in, [&](std::vector<double>& g) {
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
            });
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same("sub", a, b);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    auto ai = a.impl(), bi = b.impl();
    return make_result("sub", a.shape(), std::move(out), {a, b}, [ai, bi](const TensorImpl& o) {
        accumulate(ai, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        });
        accumulate(bi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
        });
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same("mul", a, b);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    auto ai = a.impl(), bi = b.impl();
    return make_result("mul", a.shape(), std::move(out), {a, b}, [ai, bi](const TensorImpl& o) {
        accumulate(ai, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bi->data[i];
        });
        accumulate(bi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * ai->data[i];
        });
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same("div", a, b);
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
    auto ai = a.impl(), bi = b.impl();
    return make_result("div", a.shape(), std::move(out), {a, b}, [ai, bi](const TensorImpl& o) {
        accumulate(ai, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] / bi->data[i];
        });
        accumulate(bi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i] * o.data[i] / bi->data[i];
        });
    });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary("add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double c) {
    return unary("mul_scalar", x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor rsub_scalar(double c, const Tensor& x) {
    return unary("rsub_scalar", x, [c](double v) { return c - v; }, [](double, double) { return -1.0; });
}

Tensor square(const Tensor& x) {
    return unary("square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x) {
    return unary(
        "sqrt", x, [](double v) { return std::sqrt(v); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor exp(const Tensor& x) {
    return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor abs(const Tensor& x) {
    return unary(
        "abs", x, [](double v) { return std::abs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor leaky_relu(const Tensor& x, double slope) {
    return unary(
        "leaky_relu", x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
    return unary(
        "sigmoid", x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary(
        "softplus", x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    auto xi = x.impl();
    return make_result("sum", Shape{1}, {s}, {x}, [xi](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (auto& v : g) v += o.grad[0];
        });
    });
}

Tensor mean(const Tensor& x) {
    const double n = static_cast<double>(x.numel());
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    double s = 0.0;
    for (double v : x.data()) s += v;
    auto xi = x.impl();
    return make_result("mean", Shape{1}, {s / n}, {x}, [xi, n](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            const double d = o.grad[0] / n;
            for (auto& v : g) v += d;
        });
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_ndim("matmul", a, 2);
    require_ndim("matmul", b, 2);
    const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) shape_error("matmul", a.shape(), b.shape());
    std::vector<double> out(m * n);
    MapMat(out.data(), m, n).noalias() = CMapMat(a.data().data(), m, k) * CMapMat(b.data().data(), k, n);
    auto ai = a.impl(), bi = b.impl();
    return make_result("matmul", Shape{m, n}, std::move(out), {a, b}, [ai, bi, m, k, n](const TensorImpl& o) {
        CMapMat go(o.grad.data(), m, n);
        accumulate(ai, [&](std::vector<double>& g) {
            MapMat(g.data(), m, k).noalias() += go * CMapMat(bi->data.data(), k, n).transpose();
        });
        accumulate(bi, [&](std::vector<double>& g) {
            MapMat(g.data(), k, n).noalias() += CMapMat(ai->data.data(), m, k).transpose() * go;
        });
    });
}

Tensor transpose(const Tensor& x) {
    require_ndim("transpose", x, 2);
    const auto m = x.dim(0), n = x.dim(1);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
    auto xi = x.impl();
    return make_result("transpose", Shape{n, m}, std::move(out), {x}, [xi, m, n](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j * m + i];
        });
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_ndim("softmax_rows", x, 2);
    const auto m = x.dim(0), n = x.dim(1);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x.data().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += (out[i * n + j] = std::exp(row[j] - mx));
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= s;
    }
    auto xi = x.impl();
    return make_result("softmax_rows", x.shape(), std::move(out), {x}, [xi, m, n](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += o.grad[i * n + j] * o.data[i * n + j];
                for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.data[i * n + j] * (o.grad[i * n + j] - dot);
            }
        });
    });
}

Tensor row_normalize(const Tensor& x, double min_norm, std::size_t* fallback_count) {
    require_ndim("row_normalize", x, 2);
    const auto m = x.dim(0), n = x.dim(1);
    std::vector<double> out(m * n, 0.0);
    std::vector<double> norms(m);
    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += x[i * n + j] * x[i * n + j];
        norms[i] = std::sqrt(s);
        if (norms[i] <= min_norm) {
            ++fallbacks;
            norms[i] = 0.0;
            out[i * n] = 1.0;
        } else {
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] / norms[i];
        }
    }
    if (fallback_count) *fallback_count = fallbacks;
    auto xi = x.impl();
    return make_result("row_normalize", x.shape(), std::move(out), {x},
                       [xi, m, n, norms = std::move(norms)](const TensorImpl& o) {
                           accumulate(xi, [&](std::vector<double>& g) {
                               for (std::size_t i = 0; i < m; ++i) {
                                   if (norms[i] == 0.0) continue;
                                   double dot = 0.0;
                                   for (std::size_t j = 0; j < n; ++j) dot += o.grad[i * n + j] * o.data[i * n + j];
                                   for (std::size_t j = 0; j < n; ++j)
                                       g[i * n + j] += (o.grad[i * n + j] - o.data[i * n + j] * dot) / norms[i];
                               }
                           });
                       });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
    std::vector<double> out(x.data().begin(), x.data().end());
    auto xi = x.impl();
    return make_result("reshape", std::move(shape), std::move(out), {x}, [xi](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        });
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Shape& ref = parts[0].shape();
    if (axis >= ref.size()) throw std::invalid_argument("concat: axis out of range for " + shape_str(ref));
    Shape out_shape = ref;
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != ref.size()) shape_error("concat", ref, s);
        for (std::size_t d = 0; d < s.size(); ++d)
            if (d != axis && s[d] != ref[d]) shape_error("concat", ref, s);
        out_shape[axis] += s[axis];
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
    for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
    const std::size_t out_row = out_shape[axis] * inner;

    std::vector<double> out(shape_numel(out_shape));
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const std::size_t row = p.dim(axis) * inner;
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(p.data().data() + o * row, row, out.data() + o * out_row + off);
        off += row;
    }
    std::vector<std::shared_ptr<TensorImpl>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    return make_result("concat", out_shape, std::move(out), parts,
                       [impls, offsets, outer, inner, out_row, axis](const TensorImpl& o) {
                           for (std::size_t k = 0; k < impls.size(); ++k) {
                               const std::size_t row = impls[k]->shape[axis] * inner;
                               accumulate(impls[k], [&](std::vector<double>& g) {
                                   for (std::size_t r = 0; r < outer; ++r)
                                       for (std::size_t i = 0; i < row; ++i)
                                           g[r * row + i] += o.grad[r * out_row + offsets[k] + i];
                               });
                           }
                       });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = x.shape();
    if (axis >= s.size() || begin >= end || end > s[axis])
        throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                    ") on axis " + std::to_string(axis) + " invalid for " + shape_str(s));
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
    for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    const std::size_t in_row = s[axis] * inner, out_row = (end - begin) * inner, off = begin * inner;
    std::vector<double> out(shape_numel(out_shape));
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(x.data().data() + o * in_row + off, out_row, out.data() + o * out_row);
    auto xi = x.impl();
    return make_result("slice", out_shape, std::move(out), {x}, [xi, outer, in_row, out_row, off](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t r = 0; r < outer; ++r)
                for (std::size_t i = 0; i < out_row; ++i) g[r * in_row + off + i] += o.grad[r * out_row + i];
        });
    });
}

namespace {

struct ConvGeom {
    std::size_t c, h, w, k, stride, pad, oh, ow;
};

// Output columns [lo, hi) whose input column ox*stride + kj - pad lies inside [0, w).
std::pair<std::size_t, std::size_t> valid_range(std::size_t kj, const ConvGeom& g) {
    const long off = static_cast<long>(kj) - static_cast<long>(g.pad);
    const long s = static_cast<long>(g.stride), w = static_cast<long>(g.w), ow = static_cast<long>(g.ow);
    long lo = off >= 0 ? 0 : (-off + s - 1) / s;
    long hi = w - off <= 0 ? 0 : (w - off - 1) / s + 1;
    lo = std::min(lo, ow);
    hi = std::clamp(hi, lo, ow);
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// col is (C*k*k) x (oh*ow), row-major.
void im2col(const double* img, const ConvGeom& g, double* col) {
    const std::size_t hw = g.oh * g.ow;
    for (std::size_t c = 0; c < g.c; ++c)
        for (std::size_t ki = 0; ki < g.k; ++ki)
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                double* dst = col + ((c * g.k + ki) * g.k + kj) * hw;
                const auto [lo, hi] = valid_range(kj, g);
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    double* row = dst + oy * g.ow;
                    const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
                    if (iy < 0 || iy >= static_cast<long>(g.h)) {
                        std::fill_n(row, g.ow, 0.0);
                        continue;
                    }
                    const double* src = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
                    const auto off = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(g.pad);
                    std::fill(row, row + lo, 0.0);
                    if (g.stride == 1) std::copy(src + (static_cast<std::ptrdiff_t>(lo) + off), src + (static_cast<std::ptrdiff_t>(hi) + off), row + lo);
                    else
                        for (std::size_t ox = lo; ox < hi; ++ox) row[ox] = src[static_cast<std::ptrdiff_t>(ox * g.stride) + off];
                    std::fill(row + hi, row + g.ow, 0.0);
                }
            }
}

void col2im_add(const double* col, const ConvGeom& g, double* img) {
    const std::size_t hw = g.oh * g.ow;
    for (std::size_t c = 0; c < g.c; ++c)
        for (std::size_t ki = 0; ki < g.k; ++ki)
            for (std::size_t kj = 0; kj < g.k; ++kj) {
                const double* src = col + ((c * g.k + ki) * g.k + kj) * hw;
                const auto [lo, hi] = valid_range(kj, g);
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
                    if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
                    double* dst = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
                    const auto off = static_cast<std::ptrdiff_t>(kj) - static_cast<std::ptrdiff_t>(g.pad);
                    const double* row = src + oy * g.ow;
                    for (std::size_t ox = lo; ox < hi; ++ox) dst[static_cast<std::ptrdiff_t>(ox * g.stride) + off] += row[ox];
                }
            }
}

// Scratch storage that skips zero-initialization.
struct Buffer {
    explicit Buffer(std::size_t n) : ptr(new double[n]) {}
    double* data() { return ptr.get(); }
    std::unique_ptr<double[]> ptr;
};

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride, std::size_t pad) {
    require_ndim("conv2d", x, 4);
    require_ndim("conv2d", weight, 4);
    const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const auto oc = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != c || weight.dim(3) != k) shape_error("conv2d", x.shape(), weight.shape());
    if (bias.defined() && bias.shape() != Shape{oc}) shape_error("conv2d", weight.shape(), bias.shape());
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
    if (h + 2 * pad < k || w + 2 * pad < k) shape_error("conv2d", x.shape(), weight.shape());
    const ConvGeom g{c, h, w, k, stride, pad, (h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1};
    const std::size_t hw = g.oh * g.ow, ckk = c * k * k;

    // Columns are kept for the weight gradient when history will be recorded.
    const bool keep = grad_enabled() && (weight.requires_grad() || (bias.defined() && bias.requires_grad()));
    auto cols = std::make_shared<Buffer>(keep ? n * ckk * hw : ckk * hw);
    std::vector<double> out(n * oc * hw);
    CMapMat wmat(weight.data().data(), oc, ckk);
    for (std::size_t b = 0; b < n; ++b) {
        double* col = cols->data() + (keep ? b * ckk * hw : 0);
        im2col(x.data().data() + b * c * h * w, g, col);
        MapMat omat(out.data() + b * oc * hw, oc, hw);
        omat.noalias() = wmat * CMapMat(col, ckk, hw);
        if (bias.defined())
            for (std::size_t o = 0; o < oc; ++o) omat.row(o).array() += bias[o];
    }
    if (!keep) cols.reset();
    auto xi = x.impl(), wi = weight.impl();
    auto bi = bias.defined() ? bias.impl() : nullptr;
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_result(
        "conv2d", Shape{n, oc, g.oh, g.ow}, std::move(out), inputs, [xi, wi, bi, g, n, oc, cols](const TensorImpl& o) {
            const std::size_t hw = g.oh * g.ow, ckk = g.c * g.k * g.k, img = g.c * g.h * g.w;
            std::unique_ptr<Buffer> scratch;
            CMapMat wmat(wi->data.data(), oc, ckk);
            for (std::size_t b = 0; b < n; ++b) {
                CMapMat go(o.grad.data() + b * oc * hw, oc, hw);
                if (wi->requires_grad) {
                    const double* col = cols ? cols->data() + b * ckk * hw : nullptr;
                    if (!col) {
                        if (!scratch) scratch = std::make_unique<Buffer>(ckk * hw);
                        im2col(xi->data.data() + b * img, g, scratch->data());
                        col = scratch->data();
                    }
                    MapMat(wi->grad_buffer().data(), oc, ckk).noalias() += go * CMapMat(col, ckk, hw).transpose();
                }
                if (bi && bi->requires_grad) {
                    auto& gb = bi->grad_buffer();
                    for (std::size_t oo = 0; oo < oc; ++oo) {
                        const double* row = o.grad.data() + (b * oc + oo) * hw;
                        gb[oo] += std::accumulate(row, row + hw, 0.0);
                    }
                }
                if (xi->requires_grad) {
                    if (!scratch) scratch = std::make_unique<Buffer>(ckk * hw);
                    MapMat(scratch->data(), ckk, hw).noalias() = wmat.transpose() * go;
                    col2im_add(scratch->data(), g, xi->grad_buffer().data() + b * img);
                }
            }
        });
}

Tensor resize_nearest(const Tensor& x, std::size_t out_h, std::size_t out_w) {
    require_ndim("resize_nearest", x, 4);
    const auto n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (out_h == 0 || out_w == 0) throw std::invalid_argument("resize_nearest: empty output size");
    std::vector<std::size_t> src(out_h * out_w);
    for (std::size_t i = 0; i < out_h; ++i)
        for (std::size_t j = 0; j < out_w; ++j) src[i * out_w + j] = (i * h / out_h) * w + (j * w / out_w);
    const std::size_t planes = n * c, in_plane = h * w, out_plane = out_h * out_w;
    std::vector<double> out(planes * out_plane);
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t i = 0; i < out_plane; ++i) out[p * out_plane + i] = x[p * in_plane + src[i]];
    auto xi = x.impl();
    return make_result("resize_nearest", Shape{n, c, out_h, out_w}, std::move(out), {x},
                       [xi, src = std::move(src), planes, in_plane, out_plane](const TensorImpl& o) {
                           accumulate(xi, [&](std::vector<double>& g) {
                               for (std::size_t p = 0; p < planes; ++p)
                                   for (std::size_t i = 0; i < out_plane; ++i)
                                       g[p * in_plane + src[i]] += o.grad[p * out_plane + i];
                           });
                       });
}

Tensor channel_mix(const Tensor& x, const std::vector<double>& weights) {
    require_ndim("channel_mix", x, 4);
    const auto n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (weights.size() != c)
        throw std::invalid_argument("channel_mix: " + std::to_string(weights.size()) + " weights for input " +
                                    shape_str(x.shape()));
    std::vector<double> out(n * hw, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < hw; ++i) out[b * hw + i] += weights[ch] * x[(b * c + ch) * hw + i];
    auto xi = x.impl();
    return make_result("channel_mix", Shape{n, 1, x.dim(2), x.dim(3)}, std::move(out), {x},
                       [xi, weights, n, c, hw](const TensorImpl& o) {
                           accumulate(xi, [&](std::vector<double>& g) {
                               for (std::size_t b = 0; b < n; ++b)
                                   for (std::size_t ch = 0; ch < c; ++ch)
                                       for (std::size_t i = 0; i < hw; ++i)
                                           g[(b * c + ch) * hw + i] += weights[ch] * o.grad[b * hw + i];
                           });
                       });
}

Tensor repeat_channels(const Tensor& x, std::size_t channels) {
    require_ndim("repeat_channels", x, 4);
    if (x.dim(1) != 1) throw std::invalid_argument("repeat_channels: expected 1 channel, got " + shape_str(x.shape()));
    const auto n = x.dim(0), hw = x.dim(2) * x.dim(3);
    std::vector<double> out(n * channels * hw);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < channels; ++ch)
            std::copy_n(x.data().data() + b * hw, hw, out.data() + (b * channels + ch) * hw);
    auto xi = x.impl();
    return make_result("repeat_channels", Shape{n, channels, x.dim(2), x.dim(3)}, std::move(out), {x},
                       [xi, n, channels, hw](const TensorImpl& o) {
                           accumulate(xi, [&](std::vector<double>& g) {
                               for (std::size_t b = 0; b < n; ++b)
                                   for (std::size_t ch = 0; ch < channels; ++ch)
                                       for (std::size_t i = 0; i < hw; ++i)
                                           g[b * hw + i] += o.grad[(b * channels + ch) * hw + i];
                           });
                       });
}

Tensor patchify(const Tensor& x, std::size_t patch) {
    require_ndim("patchify", x, 4);
    if (x.dim(0) != 1) throw std::invalid_argument("patchify: expected batch of 1, got " + shape_str(x.shape()));
    if (patch == 0) throw std::invalid_argument("patchify: patch size must be positive");
    const auto c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t gh = (h + patch - 1) / patch, gw = (w + patch - 1) / patch;
    const std::size_t cols = c * patch * patch, rows = gh * gw;
    // index into x for each output element, or npos for padding
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> src(rows * cols, npos);
    for (std::size_t py = 0; py < gh; ++py)
        for (std::size_t px = 0; px < gw; ++px)
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t dy = 0; dy < patch; ++dy)
                    for (std::size_t dx = 0; dx < patch; ++dx) {
                        const std::size_t y = py * patch + dy, xx = px * patch + dx;
                        if (y < h && xx < w)
                            src[(py * gw + px) * cols + (ch * patch + dy) * patch + dx] = (ch * h + y) * w + xx;
                    }
    std::vector<double> out(rows * cols, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (src[i] != npos) out[i] = x[src[i]];
    auto xi = x.impl();
    return make_result("patchify", Shape{rows, cols}, std::move(out), {x}, [xi, src = std::move(src)](const TensorImpl& o) {
        accumulate(xi, [&](std::vector<double>& g) {
            for (std::size_t i = 0; i < src.size(); ++i)
                if (src[i] != npos) g[src[i]] += o.grad[i];
        });
    });
}

}  // namespace fog
