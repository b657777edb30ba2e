#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fog/image.hpp"

namespace fog {

struct ImageFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Reads an 8-bit grayscale or RGB image (PNG, or binary PPM/PGM by
/// extension). Bytes map linearly to [0, 1].
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG (or PPM/PGM by extension) of a 1- or 3-channel image,
/// rounding v * 255 after clamping to [0, 1].
void save_image(const std::filesystem::path& path, const Image& img);

/// Min-max normalized copy of a single-channel map; `lo`/`hi` receive the
/// raw range.
Image normalize_for_display(const Image& map, double* lo = nullptr, double* hi = nullptr);

}  // namespace fog
