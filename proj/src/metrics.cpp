#include "fog/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "fog/fog_physics.hpp"

namespace fog {

namespace {

Image single_channel(const Image& img, bool luma) {
    if (img.channels == 1) return img;
    if (img.channels == 3 && luma) return to_grayscale(img);
    Image out(img.height, img.width, 1);
    for (std::size_t p = 0; p < out.size(); ++p) {
        double s = 0.0;
        for (std::size_t c = 0; c < img.channels; ++c) s += img.pixels[p * img.channels + c];
        out.pixels[p] = s / static_cast<double>(img.channels);
    }
    return out;
}

// Valid-mode separable filtering.
Image filter_valid(const Image& img, const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t ow = img.width - k + 1, oh = img.height - k + 1;
    Image rows(img.height, ow, 1);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += taps[i] * img.pixels[y * img.width + x + i];
            rows.pixels[y * ow + x] = s;
        }
    Image out(oh, ow, 1);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += taps[i] * rows.pixels[(y + i) * ow + x];
            out.pixels[y * ow + x] = s;
        }
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.size() == 0) throw std::invalid_argument("psnr: images differ in shape");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a_in, const Image& b_in, const SsimOptions& opts) {
    if (!a_in.same_shape(b_in)) throw std::invalid_argument("ssim: images differ in shape");
    const auto win = static_cast<std::size_t>(opts.window);
    if (a_in.height < win || a_in.width < win)
        throw std::invalid_argument("ssim: image smaller than the " + std::to_string(win) + "x" + std::to_string(win) +
                                    " window");
    const Image a = single_channel(a_in, opts.luma), b = single_channel(b_in, opts.luma);
    std::vector<double> taps(win);
    {
        const double c = (opts.window - 1) / 2.0;
        double s = 0.0;
        for (std::size_t i = 0; i < win; ++i) {
            const double d = static_cast<double>(i) - c;
            s += (taps[i] = std::exp(-d * d / (2 * opts.sigma * opts.sigma)));
        }
        for (auto& v : taps) v /= s;
    }
    Image aa = a, bb = b, ab = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa.pixels[i] = a.pixels[i] * a.pixels[i];
        bb.pixels[i] = b.pixels[i] * b.pixels[i];
        ab.pixels[i] = a.pixels[i] * b.pixels[i];
    }
    const Image mu_a = filter_valid(a, taps), mu_b = filter_valid(b, taps);
    const Image e_aa = filter_valid(aa, taps), e_bb = filter_valid(bb, taps), e_ab = filter_valid(ab, taps);
    const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2), c2 = std::pow(opts.k2 * opts.dynamic_range, 2);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.pixels[i], mb = mu_b.pixels[i];
        const double va = e_aa.pixels[i] - ma * ma, vb = e_bb.pixels[i] - mb * mb, cov = e_ab.pixels[i] - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

EvalRow mean_row(const std::vector<EvalRow>& rows) {
    EvalRow m{"mean", 0.0, 0.0};
    if (rows.empty()) return m;
    for (const auto& r : rows) {
        m.psnr += r.psnr;
        m.ssim += r.ssim;
    }
    m.psnr /= static_cast<double>(rows.size());
    m.ssim /= static_cast<double>(rows.size());
    return m;
}

void write_report(std::ostream& os, const std::vector<EvalRow>& rows) {
    os << "id\tpsnr\tssim\n" << std::setprecision(17);
    for (const auto& r : rows) os << r.id << '\t' << r.psnr << '\t' << r.ssim << '\n';
    const EvalRow m = mean_row(rows);
    os << m.id << '\t' << m.psnr << '\t' << m.ssim << '\n';
}

}  // namespace fog
