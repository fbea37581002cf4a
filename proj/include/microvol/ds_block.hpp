#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "microvol/block.hpp"
#include "microvol/lod.hpp"
#include "microvol/volume.hpp"

namespace microvol {

/// Raw down-sampled micro-block with an optional one-sample ghost layer,
/// queried by trilinear interpolation and central differences.
class DsBlock final : public VolumeBlock {
public:
    DsBlock() = default;
    /// `samples` covers (interior + 2*ghost) per axis, x-fastest.
    DsBlock(Index3 interior, int ghost, std::vector<float> samples, Box3 extent, int lod);

    const Index3& interior() const { return interior_; }
    int ghost() const { return ghost_; }
    int lod() const { return lod_; }
    std::span<const float> samples() const { return samples_; }

    /// Sample at interior index (i,j,k); indices in [-ghost, interior + ghost - 1].
    float at(int i, int j, int k) const {
        return samples_[static_cast<std::size_t>(i + ghost_) +
                        static_cast<std::size_t>(padded_[0]) *
                            (static_cast<std::size_t>(j + ghost_) + static_cast<std::size_t>(padded_[1]) * (k + ghost_))];
    }

    /// Central-difference gradient at a grid node in index units. Without a
    /// ghost layer, faces fall back to one-sided differences.
    Vec3 node_gradient(int i, int j, int k) const;

    const Box3& extent() const override { return extent_; }
    double value(const Vec3& point) const override;
    void evaluate(const Vec3& point, double& value, Vec3& gradient) const override;
    std::size_t storage_bytes() const override;

private:
    Vec3 to_index(const Vec3& point) const;

    Index3 interior_{0, 0, 0};
    Index3 padded_{0, 0, 0};
    int ghost_ = 0;
    int lod_ = 0;
    Box3 extent_{};
    std::vector<float> samples_;
};

inline constexpr std::size_t kDsHeaderBytes = 16;

/// Header: 3 x u32 interior dims, u32 ghost; then float32 samples, little endian.
std::vector<std::uint8_t> serialize(const DsBlock& block);
DsBlock deserialize_ds(std::span<const std::uint8_t> bytes, Box3 extent, int lod);

/// Extracts a DS block for address `a`; ghost samples lie one level stride
/// outside the block and are clamped to the volume edge.
DsBlock extract_ds_block(const ScalarVolume& volume, const BlockAddress& a, int blocks_per_axis, Index3 micro_dims,
                         int ghost);

struct DsStore {
    LODManifest manifest;
    std::map<BlockAddress, DsBlock> blocks;
};

DsStore build_ds_store(const ScalarVolume& volume, const HierarchySpec& spec, int ghost = 1);
void write_ds_store(const std::filesystem::path& root, const DsStore& store);

/// Float samples stored by a DS level over n intervals split m ways:
/// (n + m * (1 + 2 * ghost))^3 at stride 1.
double predicted_ds_samples(int n, int m, int ghost);

}  // namespace microvol
