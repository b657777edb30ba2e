#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fog/fog_physics.hpp"
#include "fog/ops.hpp"
#include "fog/scene.hpp"
#include "oracles.hpp"

using namespace fog;

namespace {

FogField random_field(std::size_t h, std::size_t w, Rng& rng, double t_min_target = 0.05) {
    // beta * d <= -ln(t_min_target) keeps t above the target
    const double max_bd = -std::log(t_min_target);
    FogField f;
    f.depth = oracle::random_image(h, w, 1, rng, 0.0, 2.0);
    f.beta = Image(h, w, 1);
    for (std::size_t i = 0; i < f.beta.size(); ++i)
        f.beta.pixels[i] = f.depth.pixels[i] > 0 ? rng.uniform(0.0, max_bd / f.depth.pixels[i]) : rng.uniform(0.0, 1.0);
    for (std::size_t i = 0; i < f.beta.size(); ++i) f.beta.pixels[i] = std::min(f.beta.pixels[i], 3.0);
    f.airlight = {rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};
    return f;
}

}  // namespace

TEST_CASE("transmission from depth") {
    Image d(4, 4, 1, 2.0);
    CHECK(transmission_from_depth(FogField::uniform(d, 0.0, {1.0})).pixels == std::vector<double>(16, 1.0));
    CHECK(transmission_from_depth(FogField::uniform(Image(4, 4, 1, 0.0), 3.0, {1.0})).pixels ==
          std::vector<double>(16, 1.0));
    CHECK(transmission_from_depth(FogField::uniform(d, 0.5, {1.0})).at(1, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(transmission_from_depth(FogField::uniform(d, 0.5, {1.0})).at(1, 1) == doctest::Approx(0.36788).epsilon(1e-5));
    // opaque fog clamps at t_min
    CHECK(transmission_from_depth(FogField::uniform(Image(2, 2, 1, 1e4), 1.0, {1.0})).at(0, 0) == kMinTransmission);
}

TEST_CASE("field validation") {
    Image d(2, 2, 1, 1.0);
    CHECK_THROWS_AS(transmission_from_depth(FogField::uniform(d, -0.1, {1.0})), std::invalid_argument);
    Image neg = d;
    neg.at(0, 0) = -1.0;
    CHECK_THROWS_AS(transmission_from_depth(FogField::uniform(neg, 0.1, {1.0})), std::invalid_argument);
    CHECK_THROWS_AS(render_fog(Image(2, 2, 3, 0.5), FogField::uniform(d, 0.1, {0.0, 1.0, 1.0})), std::invalid_argument);
    CHECK_THROWS_AS(render_fog(Image(3, 2, 3, 0.5), FogField::uniform(d, 0.1, {1.0})), std::invalid_argument);
    FogField f = FogField::uniform(d, 0.4, {1.0});
    CHECK(f.is_uniform());
    f.beta.at(1, 1) = 0.5;
    CHECK(!f.is_uniform());
}

TEST_CASE("render_fog hand values and limits") {
    Image j(1, 1, 1, 0.8), t(1, 1, 1, 0.5);
    CHECK(render_fog(j, t, {1.0}).at(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    Image j3(2, 2, 3, 0.3);
    CHECK(render_fog(j3, Image(2, 2, 1, 1.0), {0.9, 0.8, 0.7}) == j3);
    Image opaque = render_fog(j3, Image(2, 2, 1, 1e-9), {0.9, 0.8, 0.7});
    CHECK(opaque.at(1, 1, 0) == doctest::Approx(0.9).epsilon(1e-8));
    CHECK(opaque.at(1, 1, 2) == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("invert_fog round trip and airlight-only scene") {
    Rng rng(11);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        Image j = oracle::random_image(8, 8, 3, rng);
        FogField f = random_field(8, 8, rng);
        Image back = invert_fog(render_fog(j, f), f);
        for (std::size_t i = 0; i < j.size(); ++i) worst = std::max(worst, std::abs(back.pixels[i] - j.pixels[i]));
    }
    CHECK(worst < 1e-6);
    Image t(3, 3, 1, 0.3);
    Image a(3, 3, 3);
    for (std::size_t i = 0; i < a.size(); ++i) a.pixels[i] = std::vector<double>{0.9, 0.8, 0.7}[i % 3];
    Image back = invert_fog(a, t, {0.9, 0.8, 0.7});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(back.pixels[i] == doctest::Approx(a.pixels[i]).epsilon(1e-12));
}

TEST_CASE("invert_fog refuses ill-posed transmission") {
    FogField f = FogField::uniform(Image(2, 2, 1, 100.0), 1.0, {1.0});
    CHECK_THROWS_AS(invert_fog(Image(2, 2, 1, 0.9), f), std::domain_error);
    CHECK_THROWS_AS(invert_fog(Image(2, 2, 1, 0.9), Image(2, 2, 1, 0.04), {1.0}, 0.05), std::domain_error);
}

TEST_CASE("multiplier hand value and identity") {
    Image i(1, 1, 1, 0.9), t(1, 1, 1, 0.5);
    MultiplierMap m = feature_multiplier(i, t, {1.0});
    CHECK(m.values.at(0, 0) == doctest::Approx(0.4 / 0.45).epsilon(1e-15));
    CHECK(0.9 * m.values.at(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    MultiplierMap clear = feature_multiplier(Image(2, 2, 3, 0.4), Image(2, 2, 1, 1.0), {0.9, 0.9, 0.9});
    for (double v : clear.values.pixels) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("multiplier identity holds on non-floored pixels") {
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        Image j = oracle::random_image(8, 8, 3, rng);
        FogField f = random_field(8, 8, rng);
        Image fog = render_fog(j, f);
        Image t = transmission_from_depth(f);
        MultiplierMap m = feature_multiplier(fog, f);
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
                for (std::size_t c = 0; c < 3; ++c) {
                    const double iv = fog.at(y, x, c);
                    if (iv <= kDivisionFloor) continue;
                    const double tv = t.at(y, x), av = f.airlight[c];
                    const double unclamped = (iv - (1 - tv) * av) / tv;
                    CHECK(std::abs(iv * m.values.at(y, x, c) - unclamped) < 1e-9);
                }
    }
}

TEST_CASE("multiplier floors dark pixels and reports the count") {
    Image i(1, 2, 1);
    i.at(0, 0) = 0.0;
    i.at(0, 1) = 0.5;
    MultiplierMap m = feature_multiplier(i, Image(1, 2, 1, 1.0), {1.0});
    CHECK(m.floored == 1);
    for (double v : m.values.pixels) CHECK(v > 0.0);
}

TEST_CASE("render_fog is monotone in transmission") {
    Rng rng(13);
    Image j = oracle::random_image(4, 4, 3, rng, 0.0, 0.6);
    const std::vector<double> a{0.9, 0.85, 0.8};
    Image prev = render_fog(j, Image(4, 4, 1, 1.0), a);
    for (double t = 0.95; t > 0.0; t -= 0.05) {
        Image cur = render_fog(j, Image(4, 4, 1, t), a);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            CHECK(cur.pixels[i] >= prev.pixels[i] - 1e-15);
            CHECK(cur.pixels[i] <= a[i % 3] + 1e-15);
        }
        prev = cur;
    }
}

TEST_CASE("grayscale conversion") {
    Image white(1, 1, 3, 1.0);
    CHECK(to_grayscale(white).at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    Image red(1, 1, 3, 0.0);
    red.at(0, 0, 0) = 1.0;
    CHECK(to_grayscale(red).at(0, 0) == 0.299);
    CHECK_THROWS_AS(to_grayscale(Image(2, 2, 1)), std::invalid_argument);
    Rng rng(14);
    Image rgb = oracle::random_image(5, 7, 3, rng);
    Image y = to_grayscale(rgb);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 7; ++c)
            CHECK(y.at(r, c) == 0.299 * rgb.at(r, c, 0) + 0.587 * rgb.at(r, c, 1) + 0.114 * rgb.at(r, c, 2));
    Tensor ty = to_grayscale(to_tensor(rgb));
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(ty[i] == doctest::Approx(y.pixels[i]).epsilon(1e-15));
}

TEST_CASE("grayscale commutes with fog under achromatic airlight") {
    Rng rng(15);
    for (int k = 0; k < 10; ++k) {
        Image j = oracle::random_image(6, 6, 3, rng);
        FogField f = random_field(6, 6, rng);
        const double a = rng.uniform(0.6, 1.0);
        f.airlight = {a, a, a};
        Image lhs = to_grayscale(render_fog(j, f));
        Image rhs = render_fog(to_grayscale(j), f.grayscale());
        for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs.pixels[i] - rhs.pixels[i]) < 1e-12);
    }
}
