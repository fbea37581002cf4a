#include <doctest.h>

#include <cmath>
#include <random>

#include "microvol/ds_block.hpp"
#include "microvol/errors.hpp"
#include "microvol/lod.hpp"
#include "support.hpp"

using namespace microvol;

TEST_SUITE("ds") {

TEST_CASE("trilinear reproduction") {
    // An interior block, so every ghost sample is a true neighbour sample.
    const auto v = sample_grid(test::linear_field({0.5, -1, 2}, 0.25), {17, 17, 17}, unit_cube());
    const auto b = extract_ds_block(v, {1, {1, 2, 1}}, 4, {5, 5, 5}, 1);
    CHECK(b.interior() == Index3{5, 5, 5});
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const Box3 e = b.extent();
    for (int i = 0; i < 200; ++i) {
        const Vec3 p{e.min.x + u01(rng) * e.size().x, e.min.y + u01(rng) * e.size().y, e.min.z + u01(rng) * e.size().z};
        CHECK(b.value(p) == doctest::Approx(0.25 + 0.5 * p.x - p.y + 2 * p.z).epsilon(1e-5));
        double val = 0;
        Vec3 g;
        b.evaluate(p, val, g);
        CHECK(g.x == doctest::Approx(0.5).epsilon(1e-4));
        CHECK(g.y == doctest::Approx(-1.0).epsilon(1e-4));
        CHECK(g.z == doctest::Approx(2.0).epsilon(1e-4));
    }
    CHECK(b.value(e.min) == static_cast<double>(b.at(0, 0, 0)));
}

TEST_CASE("constant block") {
    const auto v = sample_grid(test::constant_field(3), {9, 9, 9}, unit_cube());
    const auto b = extract_ds_block(v, {1, {0, 0, 0}}, 2, {5, 5, 5}, 0);
    double val = 0;
    Vec3 g{1, 1, 1};
    b.evaluate({-0.3, -0.6, -0.1}, val, g);
    CHECK(val == 3.0);
    CHECK(g == Vec3{0, 0, 0});
}

TEST_CASE("gradient of a smooth block matches finite differences") {
    const auto v = sample_grid(marschner_lobb(1.0, 0.05), {65, 65, 65}, unit_cube());
    const auto b = extract_ds_block(v, {1, {0, 1, 0}}, 2, {33, 33, 33}, 1);
    const Box3 e = b.extent();
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u01(0.1, 0.9);
    for (int i = 0; i < 100; ++i) {
        const Vec3 p{e.min.x + u01(rng) * e.size().x, e.min.y + u01(rng) * e.size().y, e.min.z + u01(rng) * e.size().z};
        double val = 0;
        Vec3 g;
        b.evaluate(p, val, g);
        const Vec3 ga = ml_gradient(p.x, p.y, p.z, 1.0, 0.05);
        CHECK(length(g - ga) / length(ga) < 5e-2);
    }
}

TEST_CASE("ghost samples come from the neighbours") {
    const auto v = sample_grid(test::linear_field({1, 0, 0}), {9, 9, 9}, {{0, 0, 0}, {8, 8, 8}});
    const auto b = extract_ds_block(v, {1, {1, 0, 0}}, 2, {5, 5, 5}, 1);
    CHECK(b.at(-1, 0, 0) == 3.0f);
    CHECK(b.at(5, 0, 0) == 8.0f);  // clamped at the volume edge
    CHECK(b.at(0, -1, 0) == b.at(0, 0, 0));
    const auto nog = extract_ds_block(v, {1, {1, 0, 0}}, 2, {5, 5, 5}, 0);
    CHECK(nog.samples().size() == 125);
    CHECK(b.samples().size() == 343);
}

TEST_CASE("serialization") {
    const auto v = sample_grid(marschner_lobb(), {9, 9, 9}, unit_cube());
    const auto b = extract_ds_block(v, {1, {0, 0, 0}}, 2, {5, 5, 5}, 1);
    const auto bytes = serialize(b);
    CHECK(bytes.size() == kDsHeaderBytes + 343 * 4);
    CHECK(b.storage_bytes() == bytes.size());
    const auto back = deserialize_ds(bytes, b.extent(), 1);
    CHECK(serialize(back) == bytes);
    CHECK_THROWS_AS(deserialize_ds(std::span(bytes).first(bytes.size() - 4), b.extent(), 1), FormatError);
}

TEST_CASE("store sizes follow the ghost prediction") {
    const auto v = sample_grid(marschner_lobb(), {61, 61, 61}, {{0, 0, 0}, {1, 1, 1}});
    const HierarchySpec spec{1, {31, 31, 31}, 2};
    const auto with = build_ds_store(v, spec, 1);
    const auto without = build_ds_store(v, spec, 0);
    CHECK(with.blocks.size() == 8);
    const auto samples = [](const DsStore& s) {
        std::size_t n = 0;
        for (const auto& [a, b] : s.blocks) n += b.samples().size();
        return static_cast<double>(n);
    };
    // Shared boundary samples: 2 blocks of 31 samples over 60 intervals.
    CHECK(samples(without) == predicted_ds_samples(60, 2, 0));
    CHECK(samples(with) == predicted_ds_samples(60, 2, 1));
    CHECK(without.manifest.total_bytes() == 8 * (kDsHeaderBytes + 31 * 31 * 31 * 4));
    CHECK(with.manifest.total_bytes() == 8 * (kDsHeaderBytes + 33 * 33 * 33 * 4));
}

TEST_CASE("constant volume store") {
    const auto v = sample_grid(test::constant_field(1.5), {9, 9, 9}, unit_cube());
    const auto s = build_ds_store(v, {2, {5, 5, 5}, 1}, 1);
    CHECK(s.blocks.size() == 9);
    for (const auto& [a, b] : s.blocks) {
        for (float x : b.samples()) CHECK(x == 1.5f);
    }
}

}
