#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "microvol/geometry.hpp"

namespace microvol {

/// Regular 3D grid of float samples, x-fastest. Immutable after construction.
class ScalarVolume {
public:
    ScalarVolume() = default;
    /// Throws DomainError on dims < 2 or length mismatch, ValidationError on non-finite samples.
    ScalarVolume(Index3 dims, Box3 bounds, std::vector<float> samples);

    const Index3& dims() const { return dims_; }
    const Box3& bounds() const { return bounds_; }
    std::span<const float> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
    }
    float at(int i, int j, int k) const { return samples_[index(i, j, k)]; }

    /// Physical position of grid sample (i,j,k).
    Vec3 position(int i, int j, int k) const;

    /// (min, max) over all samples.
    std::pair<float, float> value_range() const;

private:
    Index3 dims_{0, 0, 0};
    Box3 bounds_{};
    std::vector<float> samples_;
};

/// Scalar field given in closed form, with its gradient.
struct AnalyticField {
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> gradient;
};

inline constexpr double kMlFrequency = 6.0;
inline constexpr double kMlAlpha = 0.05;

/// Marschner-Lobb test signal.
double ml_value(double x, double y, double z, double f_m = kMlFrequency, double alpha = kMlAlpha);

/// Closed-form gradient of ml_value. The radial contribution is 0 on the z axis.
Vec3 ml_gradient(double x, double y, double z, double f_m = kMlFrequency, double alpha = kMlAlpha);

AnalyticField marschner_lobb(double f_m = kMlFrequency, double alpha = kMlAlpha);

inline constexpr std::size_t kDefaultSampleBudgetBytes = std::size_t{8} << 30;

/// Samples `field` on a dims grid whose boundary samples lie on `bounds`.
/// Throws CapacityError if the grid exceeds `budget_bytes` of float storage.
ScalarVolume sample_grid(const AnalyticField& field, Index3 dims, Box3 bounds,
                         std::size_t budget_bytes = kDefaultSampleBudgetBytes);

/// Sample-count ratio of a partitioned volume (n samples per edge, m partitions
/// per edge) to the unpartitioned one: (n+m)^3 / n^3.
double ghost_overhead(int n, int m);

/// Headerless little-endian float32, x-fastest.
void write_raw(const std::filesystem::path& path, const ScalarVolume& volume);
ScalarVolume read_raw(const std::filesystem::path& path, Index3 dims, Box3 bounds);

/// JSON sidecar with dims, bounds and value range. Conventionally `<raw>.json`.
void write_sidecar(const std::filesystem::path& path, const ScalarVolume& volume);
struct SidecarInfo {
    Index3 dims{};
    Box3 bounds{};
    std::pair<double, double> value_range{};
};
SidecarInfo read_sidecar(const std::filesystem::path& path);

/// Grows a volume to `new_dims` by replicating its last sample along each axis.
/// Bounds are extended by the same spacing so the original samples keep their positions.
ScalarVolume pad_edge_replicate(const ScalarVolume& volume, Index3 new_dims);

}  // namespace microvol
