#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "fog/nn.hpp"

namespace fog {

/// Versioned weight container.
///
/// Binary layout, all integers little-endian:
///   magic "FOGCKPT\0" (8 bytes)
///   u32 format version
///   u64 seed
///   u32 config length, config text ("key = value" lines)
///   u32 tensor count
///   manifest, per tensor: u32 name length, name, u32 ndim, ndim x u64 dims
///   blobs, per tensor in manifest order: float64 values
struct Checkpoint {
    static constexpr std::uint32_t kFormatVersion = 1;

    std::uint32_t version = kFormatVersion;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    NamedTensors tensors;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

    std::string serialize() const;
    static Checkpoint deserialize(const std::string& bytes);

    /// Appends deep copies of `params` under "prefix.name".
    void store(const std::string& prefix, const NamedTensors& params);
    /// Copies stored values into existing parameters; shapes must match.
    void restore(const std::string& prefix, const NamedTensors& params) const;

    const Tensor* find(const std::string& name) const;
    std::string config_value(const std::string& key, const std::string& fallback = "") const;
    std::string config_text() const;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fog
