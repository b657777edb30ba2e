#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fog/grad_check.hpp"
#include "fog/ops.hpp"
#include "fog/structure.hpp"
#include "oracles.hpp"

using namespace fog;

TEST_CASE("key matrix shape") {
    StructureEncoder enc;
    Rng rng(21);
    KeyMatrix k = enc.extract_keys(oracle::random_image(64, 64, 3, rng));
    CHECK(k.keys.shape() == Shape{64, 64});
    CHECK(k.grid_h == 8);
    CHECK(k.grid_w == 8);
    CHECK_THROWS_AS(enc.extract_keys(Image(7, 16, 3)), std::invalid_argument);
}

TEST_CASE("constant image gives identical keys without positional codes") {
    StructureEncoderConfig cfg;
    cfg.positional = false;
    StructureEncoder enc(cfg);
    KeyMatrix k = enc.extract_keys(Image(32, 32, 3, 0.4));
    const auto d = k.keys.dim(1);
    for (std::size_t i = 1; i < k.rows(); ++i)
        for (std::size_t q = 0; q < d; ++q) CHECK(k.keys[i * d + q] == k.keys[q]);
}

TEST_CASE("equal seeds give bit-identical keys; grayscale input is replicated") {
    Rng rng(22);
    Image img = oracle::random_image(32, 32, 3, rng);
    StructureEncoder a, b;
    KeyMatrix ka = a.extract_keys(img), kb = b.extract_keys(img);
    for (std::size_t i = 0; i < ka.keys.numel(); ++i) CHECK(ka.keys[i] == kb.keys[i]);
    Image gray(16, 16, 1, 0.0), rgb(16, 16, 3, 0.0);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray.pixels[i] = rng.uniform();
        for (int c = 0; c < 3; ++c) rgb.pixels[i * 3 + c] = gray.pixels[i];
    }
    KeyMatrix kg = a.extract_keys(gray), kr = a.extract_keys(rgb);
    for (std::size_t i = 0; i < kg.keys.numel(); ++i) CHECK(kg.keys[i] == kr.keys[i]);
    StructureEncoderConfig other;
    other.seed = 7;
    KeyMatrix kc = StructureEncoder(other).extract_keys(img);
    bool differs = false;
    for (std::size_t i = 0; i < kc.keys.numel(); ++i) differs |= kc.keys[i] != ka.keys[i];
    CHECK(differs);
}

TEST_CASE("self-similarity special cases") {
    Tensor same({3, 4}, std::vector<double>{1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4});
    const Tensor same_s = self_similarity(same).matrix;
    for (double v : same_s.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
    Tensor ortho({2, 2}, std::vector<double>{1, 0, 0, 3});
    CHECK(self_similarity(ortho).matrix[1] == doctest::Approx(1.0));
    Tensor anti({2, 3}, std::vector<double>{1, -2, 0.5, -1, 2, -0.5});
    CHECK(self_similarity(anti).matrix[1] == doctest::Approx(2.0));
    Tensor zero_row({2, 2}, std::vector<double>{0, 0, 1, 1});
    SelfSimilarity s = self_similarity(zero_row);
    CHECK(s.fallbacks == 1);
    CHECK(s.matrix[1] == doctest::Approx(1.0 - std::sqrt(0.5)));
}

TEST_CASE("self-similarity invariants and pairwise oracle") {
    Rng rng(23);
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 2 + rng.below(30), d = 1 + rng.below(16);
        Tensor keys = oracle::random_tensor({n, d}, rng);
        Tensor s = self_similarity(keys).matrix;
        const auto ref = oracle::self_similarity(keys);
        const double c = rng.uniform(1e-3, 1e3);
        Tensor scaled = self_similarity(mul_scalar(keys, c)).matrix;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(s[i * n + i]) <= 1e-12);
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(s[i * n + j] == s[j * n + i]);
                CHECK(s[i * n + j] >= 0.0);
                CHECK(s[i * n + j] <= 2.0);
                CHECK(std::abs(s[i * n + j] - ref[i * n + j]) <= 1e-10);
                CHECK(std::abs(scaled[i * n + j] - s[i * n + j]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("self-similarity gradient") {
    Rng rng(24);
    Tensor keys = oracle::random_tensor({6, 5}, rng);
    Tensor probe = oracle::random_tensor({6, 6}, rng);
    CHECK(grad_check([&](const Tensor& k) { return sum(mul(self_similarity(k).matrix, probe)); }, keys) < 1e-4);
}

TEST_CASE("structure loss properties and gradient") {
    StructureEncoderConfig cfg;
    cfg.patch_size = 4;
    cfg.key_dim = 8;
    StructureEncoder enc(cfg);
    Rng rng(25);
    Tensor a = oracle::random_tensor({1, 3, 12, 12}, rng, 0, 1);
    Tensor b = oracle::random_tensor({1, 1, 12, 12}, rng, 0, 1);
    CHECK(structure_loss(a, a, enc).item() == 0.0);
    Tensor b3 = repeat_channels(b, 3);
    CHECK(structure_loss(a, b3, enc).item() == doctest::Approx(structure_loss(b3, a, enc).item()).epsilon(1e-14));
    CHECK(structure_loss(a, b, enc).item() == doctest::Approx(structure_loss(a, b3, enc).item()).epsilon(1e-14));
    CHECK_THROWS_AS(structure_loss(a, oracle::random_tensor({1, 3, 8, 12}, rng), enc), std::invalid_argument);
    CHECK(grad_check([&](const Tensor& x) { return structure_loss(x, b, enc); }, a) < 1e-4);
    CHECK(grad_check([&](const Tensor& x) { return structure_loss(a, x, enc); }, b) < 1e-4);
}

TEST_CASE("structure loss matches brute-force descriptors") {
    StructureEncoder enc;
    Rng rng(26);
    Tensor a = oracle::random_tensor({1, 3, 32, 32}, rng, 0, 1), b = oracle::random_tensor({1, 3, 32, 32}, rng, 0, 1);
    const auto sa = oracle::self_similarity(enc.extract_keys(a).keys);
    const auto sb = oracle::self_similarity(enc.extract_keys(b).keys);
    double acc = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) acc += (sa[i] - sb[i]) * (sa[i] - sb[i]);
    CHECK(std::abs(structure_loss(a, b, enc).item() - std::sqrt(acc)) < 1e-10);
}

TEST_CASE("encoder weights never receive gradient") {
    StructureEncoder enc;
    auto before = enc.weights();
    Rng rng(27);
    Tensor a = oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1, true);
    Tensor b = oracle::random_tensor({1, 3, 16, 16}, rng, 0, 1);
    structure_loss(a, b, enc).backward();
    CHECK(a.has_grad());
    auto after = enc.weights();
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(!after[i].second.has_grad());
        for (std::size_t q = 0; q < before[i].second.numel(); ++q) CHECK(before[i].second[q] == after[i].second[q]);
    }
}

TEST_CASE("pca of rank-one keys") {
    std::vector<double> v;
    Rng rng(28);
    const std::vector<double> dir{0.3, -1.0, 2.0, 0.5};
    for (int i = 0; i < 12; ++i) {
        const double s = rng.uniform(-3, 3);
        for (double d : dir) v.push_back(1.0 + s * d);
    }
    Image img = pca_keys_rgb(Tensor({12, 4}, v), 3, 4);
    CHECK(img.height == 3);
    CHECK(img.width == 4);
    CHECK(img.channels == 3);
    double lo = 1, hi = 0;
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            lo = std::min(lo, img.at(y, x, 0));
            hi = std::max(hi, img.at(y, x, 0));
            CHECK(img.at(y, x, 1) == 0.5);
            CHECK(img.at(y, x, 2) == 0.5);
        }
    CHECK(lo == doctest::Approx(0.0));
    CHECK(hi == doctest::Approx(1.0));
    CHECK_THROWS_AS(pca_keys_rgb(Tensor({2, 4}, 1.0), 1, 2), std::invalid_argument);
    Image flat = pca_keys_rgb(Tensor({6, 4}, 0.7), 2, 3);
    for (double p : flat.pixels) CHECK(p == 0.5);
}

TEST_CASE("pca projection variances match a Jacobi eigensolver") {
    Rng rng(29);
    for (std::size_t d : {3, 8}) {
        const std::size_t n = 40;
        std::vector<double> v(n * d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t q = 0; q < d; ++q) v[i * d + q] = rng.uniform(-1, 1) * (1.0 + 4.0 / (1.0 + q)) + 0.3 * q;
        std::vector<double> mean(d, 0), cov(d * d, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t q = 0; q < d; ++q) mean[q] += v[i * d + q] / n;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < d; ++p)
                for (std::size_t q = 0; q < d; ++q)
                    cov[p * d + q] += (v[i * d + p] - mean[p]) * (v[i * d + q] - mean[q]) / n;
        const auto ev = oracle::jacobi_eigenvalues(cov, d);
        PrincipalComponents pc = principal_components(Tensor({n, d}, v), 3);
        REQUIRE(pc.projections.size() == 3);
        double prev = 1e300;
        for (std::size_t c = 0; c < 3; ++c) {
            double var = 0;
            for (double p : pc.projections[c]) var += p * p / n;
            CHECK(var <= prev);
            prev = var;
            CHECK(var == doctest::Approx(ev[c]).epsilon(1e-10));
            CHECK(pc.variances[c] == doctest::Approx(ev[c]).epsilon(1e-10));
        }
        Image img = pca_keys_rgb(Tensor({n, d}, v), 5, 8);
        for (std::size_t c = 0; c < 3; ++c) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, img.pixels[i * 3 + c]);
                hi = std::max(hi, img.pixels[i * 3 + c]);
            }
            CHECK(lo == 0.0);
            CHECK(hi == 1.0);
        }
    }
}
