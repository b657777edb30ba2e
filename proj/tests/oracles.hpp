#pragma once
// Independent reference implementations used as test oracles. Deliberately
// naive: plain loops, no shared code with the library kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fog/image.hpp"
#include "fog/rng.hpp"
#include "fog/tensor.hpp"

namespace oracle {

inline fog::Tensor random_tensor(fog::Shape shape, fog::Rng& rng, double lo = -1.0, double hi = 1.0,
                                 bool requires_grad = false) {
    std::vector<double> v(fog::shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return fog::Tensor(std::move(shape), std::move(v), requires_grad);
}

inline fog::Image random_image(std::size_t h, std::size_t w, std::size_t c, fog::Rng& rng, double lo = 0.0,
                               double hi = 1.0) {
    fog::Image img(h, w, c);
    for (auto& v : img.pixels) v = rng.uniform(lo, hi);
    return img;
}

// Seven nested loops over (n, o, y, x, c, ky, kx).
inline std::vector<double> conv2d(const fog::Tensor& x, const fog::Tensor& w, const fog::Tensor& b, std::size_t s,
                                  std::size_t p) {
    const auto N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), O = w.dim(0), K = w.dim(2);
    const auto OH = (H + 2 * p - K) / s + 1, OW = (W + 2 * p - K) / s + 1;
    std::vector<double> out(N * O * OH * OW, 0.0);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t oy = 0; oy < OH; ++oy)
                for (std::size_t ox = 0; ox < OW; ++ox) {
                    double acc = b.defined() ? b[o] : 0.0;
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t ky = 0; ky < K; ++ky)
                            for (std::size_t kx = 0; kx < K; ++kx) {
                                const long iy = static_cast<long>(oy * s + ky) - static_cast<long>(p);
                                const long ix = static_cast<long>(ox * s + kx) - static_cast<long>(p);
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                                acc += x[((n * C + c) * H + iy) * W + ix] * w[((o * C + c) * K + ky) * K + kx];
                            }
                    out[((n * O + o) * OH + oy) * OW + ox] = acc;
                }
    return out;
}

inline std::vector<double> matmul(const fog::Tensor& a, const fog::Tensor& b) {
    const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t q = 0; q < k; ++q) out[i * n + j] += a[i * k + q] * b[q * n + j];
    return out;
}

// S_ij = 1 - cos(k_i, k_j) by an explicit double loop over key pairs.
inline std::vector<double> self_similarity(const fog::Tensor& keys) {
    const auto n = keys.dim(0), d = keys.dim(1);
    std::vector<double> s(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0, ni = 0, nj = 0;
            for (std::size_t q = 0; q < d; ++q) {
                dot += keys[i * d + q] * keys[j * d + q];
                ni += keys[i * d + q] * keys[i * d + q];
                nj += keys[j * d + q] * keys[j * d + q];
            }
            s[i * n + j] = 1.0 - dot / (std::sqrt(ni) * std::sqrt(nj));
        }
    return s;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

// Per-pixel uncertainty objective for a single residual r.
inline double uncertainty_objective(double r, double theta, double eps = 0.0) {
    return r / (theta + eps) + std::log(theta + 1.0);
}

// Minimizer over a uniform grid of spacing `step` on [lo, hi].
inline double grid_argmin(double r, double lo, double hi, double step) {
    double best = lo, best_v = uncertainty_objective(r, lo);
    const auto count = static_cast<std::size_t>((hi - lo) / step);
    for (std::size_t i = 1; i <= count; ++i) {
        const double th = lo + static_cast<double>(i) * step;
        const double v = uncertainty_objective(r, th);
        if (v < best_v) {
            best_v = v;
            best = th;
        }
    }
    return best;
}

inline double psnr(const fog::Image& a, const fog::Image& b) {
    double se = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) se += (a.pixels[i] - b.pixels[i]) * (a.pixels[i] - b.pixels[i]);
    const double mse = se / static_cast<double>(a.pixels.size());
    return mse == 0 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

inline fog::Image luma(const fog::Image& rgb) {
    if (rgb.channels == 1) return rgb;
    fog::Image y(rgb.height, rgb.width, 1);
    for (std::size_t r = 0; r < rgb.height; ++r)
        for (std::size_t c = 0; c < rgb.width; ++c)
            y.at(r, c) = 0.299 * rgb.at(r, c, 0) + 0.587 * rgb.at(r, c, 1) + 0.114 * rgb.at(r, c, 2);
    return y;
}

// Direct per-window SSIM with an 11x11 Gaussian (sigma 1.5) over valid windows.
inline double ssim(const fog::Image& a_in, const fog::Image& b_in) {
    const fog::Image a = luma(a_in), b = luma(b_in);
    constexpr int win = 11;
    double g[win][win], total = 0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double dy = i - 5, dx = j - 5;
            g[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * 1.5 * 1.5));
            total += g[i][j];
        }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + win <= a.height; ++y)
        for (std::size_t x = 0; x + win <= a.width; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double wgt = g[i][j] / total, va = a.at(y + i, x + j), vb = b.at(y + i, x + j);
                    ma += wgt * va;
                    mb += wgt * vb;
                    saa += wgt * va * va;
                    sbb += wgt * vb * vb;
                    sab += wgt * va * vb;
                }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return acc / static_cast<double>(count);
}

}  // namespace oracle
