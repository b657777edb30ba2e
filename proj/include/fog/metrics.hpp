#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fog/image.hpp"

namespace fog {

/// Reported for identical images instead of +inf.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) for unit-range images.
double psnr(const Image& a, const Image& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    /// RGB inputs are reduced to luma first; otherwise channels are averaged.
    bool luma = true;
};

/// Mean SSIM over all fully-contained Gaussian windows.
double ssim(const Image& a, const Image& b, const SsimOptions& opts = {});

struct EvalRow {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Tab-separated table with a header, one row per image and a trailing mean row.
void write_report(std::ostream& os, const std::vector<EvalRow>& rows);
EvalRow mean_row(const std::vector<EvalRow>& rows);

}  // namespace fog
