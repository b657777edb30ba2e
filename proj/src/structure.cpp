#include "fog/structure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fog/fog_physics.hpp"
#include "fog/ops.hpp"
#include "fog/rng.hpp"

namespace fog {

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.normal() * scale;
    return Tensor({rows, cols}, std::move(v));
}

// S = 1 - N N^T for row-normalized N, computed on the upper triangle and
// mirrored so that symmetry and the zero diagonal are exact.
Tensor gram_dissimilarity(const Tensor& normed) {
    const std::size_t n = normed.dim(0), d = normed.dim(1);
    const auto x = normed.data();
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += x[i * d + k] * x[j * d + k];
            out[i * n + j] = out[j * n + i] = std::clamp(1.0 - dot, 0.0, 2.0);
        }
    auto ni = normed.impl();
    return make_result("gram_dissimilarity", Shape{n, n}, std::move(out), {normed}, [ni, n, d](const TensorImpl& o) {
        if (!ni->requires_grad) return;
        auto& g = ni->grad_buffer();
        // dN_i = -sum_j (G_ij + G_ji) N_j over off-diagonal pairs
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double w = -(o.grad[i * n + j] + o.grad[j * n + i]);
                if (w == 0.0) continue;
                for (std::size_t k = 0; k < d; ++k) g[i * d + k] += w * ni->data[j * d + k];
            }
    });
}

Tensor replicate_to(const Tensor& img, std::size_t channels, const char* who) {
    if (img.ndim() != 4) throw std::invalid_argument(std::string(who) + ": expected NCHW tensor, got " + shape_str(img.shape()));
    if (img.dim(1) == channels) return img;
    if (img.dim(1) == 1) return repeat_channels(img, channels);
    throw std::invalid_argument(std::string(who) + ": expected 1 or " + std::to_string(channels) + " channels, got " +
                                shape_str(img.shape()));
}

}  // namespace

StructureEncoder::StructureEncoder(StructureEncoderConfig cfg) : cfg_(cfg) {
    if (cfg_.patch_size == 0 || cfg_.key_dim == 0 || cfg_.input_channels == 0)
        throw std::invalid_argument("StructureEncoder: sizes must be positive");
    Rng rng(cfg_.seed);
    // One pixel embedding shared by all channels, weighted by luma (or evenly
    // for non-RGB inputs): keys respond to luminance structure, not to colour.
    const std::size_t pp = cfg_.patch_size * cfg_.patch_size, ch = cfg_.input_channels;
    const Tensor shared = random_matrix(pp, cfg_.key_dim, rng);
    std::vector<double> embed(ch * pp * cfg_.key_dim);
    for (std::size_t c = 0; c < ch; ++c) {
        const double wc = ch == 3 ? kLumaWeights[c] : 1.0 / static_cast<double>(ch);
        for (std::size_t i = 0; i < pp * cfg_.key_dim; ++i) embed[c * pp * cfg_.key_dim + i] = wc * shared[i];
    }
    embed_ = Tensor({ch * pp, cfg_.key_dim}, std::move(embed));
    query_ = random_matrix(cfg_.key_dim, cfg_.key_dim, rng);
    key_ = random_matrix(cfg_.key_dim, cfg_.key_dim, rng);
    value_ = random_matrix(cfg_.key_dim, cfg_.key_dim, rng);
}

Tensor StructureEncoder::positional_codes(std::size_t grid_h, std::size_t grid_w) const {
    const std::size_t d = cfg_.key_dim;
    std::vector<double> pos(grid_h * grid_w * d, 0.0);
    if (cfg_.positional) {
        // Half the width encodes the row, half the column.
        const std::size_t half = d / 2;
        for (std::size_t gy = 0; gy < grid_h; ++gy)
            for (std::size_t gx = 0; gx < grid_w; ++gx) {
                double* row = pos.data() + (gy * grid_w + gx) * d;
                for (std::size_t k = 0; k < d; ++k) {
                    const bool is_row = k < half;
                    const std::size_t kk = is_row ? k : k - half;
                    const std::size_t width = is_row ? std::max<std::size_t>(half, 1) : std::max<std::size_t>(d - half, 1);
                    const double freq = std::pow(100.0, -static_cast<double>(kk / 2 * 2) / static_cast<double>(width));
                    const double p = static_cast<double>(is_row ? gy : gx) * freq;
                    row[k] = 0.5 * ((kk % 2 == 0) ? std::sin(p) : std::cos(p));
                }
            }
    }
    return Tensor({grid_h * grid_w, d}, std::move(pos));
}

KeyMatrix StructureEncoder::extract_keys(const Tensor& image) const {
    Tensor x = replicate_to(image, cfg_.input_channels, "extract_keys");
    if (x.dim(0) != 1) throw std::invalid_argument("extract_keys: expected a single image, got " + shape_str(x.shape()));
    const std::size_t h = x.dim(2), w = x.dim(3), p = cfg_.patch_size;
    if (h < p || w < p)
        throw std::invalid_argument("extract_keys: image " + std::to_string(h) + "x" + std::to_string(w) +
                                    " is smaller than one " + std::to_string(p) + "px patch");
    const std::size_t gh = (h + p - 1) / p, gw = (w + p - 1) / p;
    // Inputs are mapped from [0, 1] to [-1, 1] before embedding.
    Tensor patches = patchify(add_scalar(mul_scalar(x, 2.0), -1.0), p);
    Tensor tokens = add(matmul(patches, embed_), positional_codes(gh, gw));
    Tensor q = matmul(tokens, query_);
    Tensor k = matmul(tokens, key_);
    Tensor v = matmul(tokens, value_);
    Tensor attn = softmax_rows(mul_scalar(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(cfg_.key_dim))));
    Tensor mixed = add(tokens, matmul(attn, v));
    return KeyMatrix{matmul(mixed, key_), gh, gw};
}

KeyMatrix StructureEncoder::extract_keys(const Image& image) const { return extract_keys(to_tensor(image)); }

NamedTensors StructureEncoder::weights() const {
    return {{"embed", embed_.clone()}, {"query", query_.clone()}, {"key", key_.clone()}, {"value", value_.clone()}};
}

SelfSimilarity self_similarity(const Tensor& keys) {
    if (keys.ndim() != 2) throw std::invalid_argument("self_similarity: expected n x d keys, got " + shape_str(keys.shape()));
    SelfSimilarity s;
    Tensor normed = row_normalize(keys, 1e-12, &s.fallbacks);
    s.matrix = gram_dissimilarity(normed);
    return s;
}

Tensor structure_loss(const Tensor& a, const Tensor& b, const StructureEncoder& enc) {
    if (a.ndim() != 4 || b.ndim() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
        throw std::invalid_argument("structure_loss: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t n = a.dim(0);
    Tensor total;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor ai = n == 1 ? a : slice(a, 0, i, i + 1);
        Tensor bi = n == 1 ? b : slice(b, 0, i, i + 1);
        Tensor sa = self_similarity(enc.extract_keys(ai).keys).matrix;
        Tensor sb = self_similarity(enc.extract_keys(bi).keys).matrix;
        Tensor d = sqrt(sum(square(sub(sa, sb))));
        total = total.defined() ? add(total, d) : d;
    }
    return n == 1 ? total : mul_scalar(total, 1.0 / static_cast<double>(n));
}

Image pca_keys_rgb(const KeyMatrix& keys) { return pca_keys_rgb(keys.keys, keys.grid_h, keys.grid_w); }

PrincipalComponents principal_components(const Tensor& keys, std::size_t count) {
    if (keys.ndim() != 2) throw std::invalid_argument("principal_components: keys must be 2-D, got " + shape_str(keys.shape()));
    const std::size_t n = keys.dim(0), d = keys.dim(1);
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat centered = Eigen::Map<const RowMat>(keys.data().data(), n, d);
    const Eigen::RowVectorXd mu = centered.colwise().mean();
    centered.rowwise() -= mu;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    // Eigenvalues below this count as zero: relative to the leading one and to the raw key energy.
    const double energy = Eigen::Map<const RowMat>(keys.data().data(), n, d).squaredNorm() / static_cast<double>(n);
    const double threshold = std::max({1e-10 * values.cwiseAbs().maxCoeff(), 1e-14 * energy, 1e-300});

    PrincipalComponents pc;
    pc.rows = n;
    for (std::size_t comp = 0; comp < count && comp < d; ++comp) {
        const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - comp);
        if (values(col) <= threshold) break;
        Eigen::VectorXd axis = eig.eigenvectors().col(col);
        Eigen::Index arg;
        axis.cwiseAbs().maxCoeff(&arg);
        if (axis(arg) < 0) axis = -axis;
        const Eigen::VectorXd proj = centered * axis;
        pc.variances.push_back(values(col));
        pc.projections.emplace_back(proj.data(), proj.data() + proj.size());
    }
    return pc;
}

Image pca_keys_rgb(const Tensor& keys, std::size_t grid_h, std::size_t grid_w) {
    if (keys.ndim() != 2 || keys.dim(0) != grid_h * grid_w)
        throw std::invalid_argument("pca_keys_rgb: keys " + shape_str(keys.shape()) + " do not match a " +
                                    std::to_string(grid_h) + "x" + std::to_string(grid_w) + " grid");
    const std::size_t n = keys.dim(0);
    if (n < 3) throw std::invalid_argument("pca_keys_rgb: need at least 3 keys");
    const PrincipalComponents pc = principal_components(keys, 3);
    Image out(grid_h, grid_w, 3, 0.5);
    for (std::size_t comp = 0; comp < pc.projections.size(); ++comp) {
        const auto& proj = pc.projections[comp];
        const auto [lo_it, hi_it] = std::minmax_element(proj.begin(), proj.end());
        const double lo = *lo_it, hi = *hi_it;
        if (!(hi > lo)) break;
        for (std::size_t i = 0; i < n; ++i) out.pixels[i * 3 + comp] = (proj[i] - lo) / (hi - lo);
    }
    return out;
}

}  // namespace fog
