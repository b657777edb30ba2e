#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fog/image.hpp"

namespace fog {

enum class RecordKind { Paired, Unpaired };

/// One manifest line: fog path, clear path or "-", paired|unpaired, depth
/// path or "-". Paths are stored resolved against the manifest directory.
struct DatasetRecord {
    std::filesystem::path fog;
    std::optional<std::filesystem::path> clear;
    RecordKind kind = RecordKind::Paired;
    std::optional<std::filesystem::path> depth;
};

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<DatasetRecord> records;

    /// Parses and checks that every referenced file exists.
    static DatasetManifest load(const std::filesystem::path& path);
    /// Writes records with paths relative to the manifest's directory.
    void save(const std::filesystem::path& path) const;

    std::vector<Image> fog_images() const;
    std::vector<Image> clear_images() const;  // records with a clear path
};

}  // namespace fog
