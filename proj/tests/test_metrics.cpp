#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"
#include "microvol/metrics.hpp"

using namespace microvol;

namespace {

Frame filled(int w, int h, std::uint8_t v) {
    Frame f(w, h);
    for (std::size_t i = 0; i < f.rgba.size(); ++i) f.rgba[i] = (i % 4 == 3) ? 255 : v;
    return f;
}

// Direct (non-separable) SSIM used as an independent oracle.
double brute_ssim(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
    const int n = 11;
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    std::vector<double> k(n * n);
    double ks = 0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            k[y * n + x] = std::exp(-((x - 5.0) * (x - 5.0) + (y - 5.0) * (y - 5.0)) / (2 * sigma * sigma));
            ks += k[y * n + x];
        }
    }
    double total = 0;
    int count = 0;
    for (int oy = 0; oy + n <= h; ++oy) {
        for (int ox = 0; ox + n <= w; ++ox) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = 0; y < n; ++y) {
                for (int x = 0; x < n; ++x) {
                    const double wgt = k[y * n + x] / ks;
                    const double va = a[(oy + y) * w + ox + x], vb = b[(oy + y) * w + ox + x];
                    ma += wgt * va;
                    mb += wgt * vb;
                    saa += wgt * va * va;
                    sbb += wgt * vb * vb;
                    sab += wgt * va * vb;
                }
            }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / count;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mse and psnr") {
    const Frame black = filled(8, 8, 0), white = filled(8, 8, 255);
    CHECK(image_mse(black, black) == 0.0);
    CHECK(std::isinf(image_psnr(black, black)));
    CHECK(image_mse(black, white) == 1.0);
    CHECK(image_psnr(black, white) == 0.0);
    CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0).epsilon(1e-12));
    const Frame a = filled(8, 8, 100), b = filled(8, 8, 151);  // offset 0.2
    CHECK(image_mse(a, b) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(image_psnr(a, b) == doctest::Approx(10 * std::log10(25.0)).epsilon(1e-12));
    Frame alpha_only = a;
    alpha_only.rgba[3] = 0;
    CHECK(image_mse(a, alpha_only) == 0.0);
    CHECK_THROWS_AS(image_mse(filled(8, 8, 0), filled(8, 9, 0)), DomainError);
}

TEST_CASE("ssim closed forms") {
    CHECK(image_ssim(filled(16, 16, 77), filled(16, 16, 77)) == doctest::Approx(1.0).epsilon(1e-12));
    const double ga = 60 / 255.0, gb = 200 / 255.0, c1 = 1e-4;
    const double expected = (2 * ga * gb + c1) / (ga * ga + gb * gb + c1);
    CHECK(image_ssim(filled(16, 16, 60), filled(16, 16, 200)) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected < 1.0);
}

TEST_CASE("anti-correlated checkerboards") {
    const int w = 24, h = 20;
    std::vector<double> a(w * h), b(w * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            a[y * w + x] = (x + y) % 2;
            b[y * w + x] = 1.0 - a[y * w + x];
        }
    }
    const double s = ssim(a, b, w, h);
    CHECK(s < 0.0);
    CHECK(s == doctest::Approx(brute_ssim(a, b, w, h)).epsilon(1e-9));
}

TEST_CASE("separable ssim equals the direct formula") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const int w = 29, h = 17;
    std::vector<double> a(w * h), b(w * h);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = u(rng);
        b[i] = 0.7 * a[i] + 0.3 * u(rng);
    }
    CHECK(ssim(a, b, w, h) == doctest::Approx(brute_ssim(a, b, w, h)).epsilon(1e-10));
    CHECK_THROWS_AS(ssim(a, b, 10, 10), DomainError);
}

TEST_CASE("luminance weights") {
    Frame f(1, 1);
    f.rgba = {255, 0, 0, 255};
    CHECK(luminance(f)[0] == doctest::Approx(0.299));
    f.rgba = {10, 10, 10, 255};
    CHECK(luminance(f)[0] == doctest::Approx(10 / 255.0));
}

TEST_CASE("reports") {
    DatasetReport empty{"empty", std::nullopt, std::nullopt, std::nullopt, {}, {}};
    const auto j = report_json({empty});
    const auto& d = j.at("datasets").at(0);
    CHECK(d.at("timing").at("n") == 0);
    CHECK(d.at("timing").at("mean_latency_ms").is_null());
    CHECK(d.at("compression_ratio").is_null());

    DatasetReport one{"one", 3.5, 10, 73, {}, {{"mfa", 0.01, 1000, 0.0, std::numeric_limits<double>::infinity(), 1.0}}};
    FrameTiming t;
    t.caching_ms = 1.0;
    t.rendering_ms = 2.0;
    t.input_latency_ms = 3.0;
    t.hits = 3;
    t.misses = 1;
    one.timings = {t};
    auto t2 = t;
    t2.caching_ms = 3.0;
    t2.input_latency_ms = 5.0;
    one.timings.push_back(t2);
    const auto k = report_json({one}).at("datasets").at(0);
    CHECK(k.at("timing").at("mean_caching_ms") == 2.0);
    CHECK(k.at("timing").at("mean_latency_ms") == 4.0);
    CHECK(k.at("timing").at("miss_rate") == 0.25);
    CHECK(k.at("searches_saved") == 63);
    CHECK(k.at("quality").at(0).at("psnr") == "inf");
    const std::string table = report_table({one});
    CHECK(table.find("mfa") != std::string::npos);
    CHECK(table.find("10 / 73") != std::string::npos);
}

}
