#include <doctest.h>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"
#include "microvol/frame.hpp"
#include "microvol/transfer_function.hpp"
#include "support.hpp"

using namespace microvol;

TEST_SUITE("tf") {

TEST_CASE("piecewise-linear lookup") {
    const TransferFunction tf({{0.0, 0, 0, 0}, {1.0, 1, 0.5, 0}}, {{0.25, 0.0}, {0.75, 1.0}}, 0.0, 2.0);
    CHECK(tf.lookup(0.5).r == doctest::Approx(0.5));
    CHECK(tf.lookup(0.5).g == doctest::Approx(0.25));
    CHECK(tf.lookup(0.5).a == doctest::Approx(0.5));
    CHECK(tf.lookup(0.1).a == 0.0);
    CHECK(tf.lookup(1.5).r == 1.0);
    CHECK(tf.lookup(1.5).a == 1.0);
    CHECK(tf.lookup(-3.0).r == 0.0);
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(TransferFunction({{0.5, 0, 0, 0}, {0.5, 1, 1, 1}}, {{0, 0}}, 0, 1), DomainError);
    CHECK_THROWS_AS(TransferFunction({{0, 1.5, 0, 0}}, {{0, 0}}, 0, 1), DomainError);
    CHECK_THROWS_AS(TransferFunction({{0, 0, 0, 0}}, {{0, -0.1}}, 0, 1), DomainError);
    CHECK_THROWS_AS(TransferFunction({{0, 0, 0, 0}}, {{0, 0}}, 1, 1), DomainError);
    CHECK_THROWS_AS(preset_transfer_function("nope"), DomainError);
}

TEST_CASE("json round trip and presets") {
    test::TempDir dir("tf");
    for (const auto& name : preset_names()) {
        const auto tf = preset_transfer_function(name, -1, 3);
        tf.save(dir / "tf.json");
        const auto back = TransferFunction::load(dir / "tf.json");
        CHECK(back.to_json() == tf.to_json());
        for (double v = -1; v <= 3; v += 0.13) {
            CHECK(back.lookup(v).a == tf.lookup(v).a);
            CHECK(back.lookup(v).b == tf.lookup(v).b);
        }
    }
    CHECK_THROWS_AS(TransferFunction::from_json(nlohmann::json{{"domain", {0, 1}}}), FormatError);
    CHECK_THROWS_AS(TransferFunction::load(dir / "missing.json"), IoError);
}

}

TEST_SUITE("frame") {

TEST_CASE("png round trip") {
    test::TempDir dir("png");
    Frame f(5, 3);
    for (std::size_t i = 0; i < f.rgba.size(); ++i) f.rgba[i] = static_cast<std::uint8_t>(i * 17);
    CHECK(decode_png(encode_png(f)) == f);
    write_png(dir / "f.png", f);
    CHECK(read_png(dir / "f.png") == f);
    const std::vector<std::uint8_t> junk{1, 2, 3, 4};
    CHECK_THROWS_AS(decode_png(junk), FormatError);
}

}
