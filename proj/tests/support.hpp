#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "microvol/volume.hpp"

namespace microvol::test {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("microvol_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline AnalyticField constant_field(double c) {
    return {[c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3{}; }};
}

inline AnalyticField linear_field(Vec3 g, double c = 0.0) {
    return {[g, c](const Vec3& p) { return c + dot(g, p); }, [g](const Vec3&) { return g; }};
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::max(std::abs(a), std::abs(b))); }

}  // namespace microvol::test
