#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fog/image.hpp"
#include "fog/nn.hpp"
#include "fog/tensor.hpp"

namespace fog {

struct StructureEncoderConfig {
    std::size_t patch_size = 8;
    std::size_t key_dim = 64;
    std::size_t input_channels = 3;
    bool positional = true;
    std::uint64_t seed = 0x5eed;
};

/// Patch keys of one image, row i is the key of patch i in raster order.
struct KeyMatrix {
    Tensor keys;  // n x key_dim
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;

    std::size_t rows() const { return grid_h * grid_w; }
};

/// Frozen single-block attention encoder producing patch keys.
///
/// Patches are embedded linearly (one luma-weighted pixel embedding shared by
/// the colour channels), offset by a 2-D sinusoidal position code,
/// mixed by one self-attention block, and the block's key projection of the
/// mixed tokens is returned. Weights come from the seed alone and never
/// receive gradients; gradients do flow back to the input image.
class StructureEncoder {
public:
    explicit StructureEncoder(StructureEncoderConfig cfg = {});

    const StructureEncoderConfig& config() const { return cfg_; }

    /// image: (1, C, H, W) with C == 1 (replicated) or C == input_channels.
    KeyMatrix extract_keys(const Tensor& image) const;
    KeyMatrix extract_keys(const Image& image) const;

    /// Copies of the frozen weights (for audits).
    NamedTensors weights() const;

private:
    Tensor positional_codes(std::size_t grid_h, std::size_t grid_w) const;

    StructureEncoderConfig cfg_;
    Tensor embed_;
    Tensor query_;
    Tensor key_;
    Tensor value_;
};

struct SelfSimilarity {
    Tensor matrix;             // n x n, S_ij = 1 - cos(k_i, k_j)
    std::size_t fallbacks = 0; // key rows with (near) zero norm
};

/// Cosine-dissimilarity descriptor of a key matrix. Exactly symmetric with a
/// zero diagonal and entries clamped to [0, 2]; differentiable in the keys.
SelfSimilarity self_similarity(const Tensor& keys);

/// Frobenius distance between the descriptors of two images (NCHW, 1 or 3
/// channels each, same spatial size). Batches are averaged per image.
Tensor structure_loss(const Tensor& a, const Tensor& b, const StructureEncoder& enc);

/// Leading principal components of mean-centred keys, strongest first.
/// Components at or below numerical rank are omitted.
struct PrincipalComponents {
    std::size_t rows = 0;
    std::vector<double> variances;                 // eigenvalues of the covariance
    std::vector<std::vector<double>> projections;  // per component, one value per key
};

PrincipalComponents principal_components(const Tensor& keys, std::size_t count);

/// Top-3 principal components of the keys as an RGB image over the patch
/// grid, each component min-max normalized. Components beyond the key rank
/// are filled with 0.5.
Image pca_keys_rgb(const KeyMatrix& keys);
Image pca_keys_rgb(const Tensor& keys, std::size_t grid_h, std::size_t grid_w);

}  // namespace fog
