#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "microvol/geometry.hpp"
#include "microvol/volume.hpp"

namespace microvol {

/// Block coordinates within one level. Level 1 is the finest.
struct BlockAddress {
    int lod = 1;
    Index3 ijk{0, 0, 0};

    friend auto operator<=>(const BlockAddress&, const BlockAddress&) = default;
    friend bool operator==(const BlockAddress&, const BlockAddress&) = default;

    std::string to_string() const;
};

struct BlockAddressHash {
    std::size_t operator()(const BlockAddress& a) const noexcept {
        std::size_t h = static_cast<std::size_t>(a.lod);
        for (int v : a.ijk) h = h * 1000003u ^ static_cast<std::size_t>(v);
        return h;
    }
};

/// Shape of a block hierarchy. The coarsest level has `coarsest_blocks` per
/// axis and every finer level doubles that.
struct HierarchySpec {
    int levels = 4;
    Index3 micro_dims{65, 65, 65};
    int coarsest_blocks = 2;

    int blocks_per_axis(int lod) const { return coarsest_blocks << (levels - lod); }
    int finest_blocks_per_axis() const { return blocks_per_axis(1); }
};

struct ManifestEntry {
    std::string path;  // relative to the store root
    int ncp = 0;
    Box3 extent{};
    bool complex = false;
    std::size_t bytes = 0;
};

/// Index of a multi-resolution store: per-level block grids and per-block metadata.
struct LODManifest {
    std::string backend = "mfa";  // "mfa" or "ds"
    int levels = 0;
    Index3 micro_dims{0, 0, 0};
    int finest_blocks_per_axis = 0;
    int coarsest_blocks_per_axis = 0;
    int degree = 0;
    int ghost = 0;
    Index3 volume_dims{0, 0, 0};
    Box3 volume_bounds{};
    std::pair<double, double> value_range{0.0, 0.0};
    double error_bound = 0.0;
    std::map<BlockAddress, ManifestEntry> entries;

    int blocks_per_axis(int lod) const { return coarsest_blocks_per_axis << (levels - lod); }
    std::vector<BlockAddress> level_addresses(int lod) const;
    std::vector<BlockAddress> children(const BlockAddress& a) const;
    BlockAddress parent(const BlockAddress& a) const;
    std::size_t total_bytes() const;
    const ManifestEntry& at(const BlockAddress& a) const;
};

/// Block extent in normalized [-1,1]^3 coordinates.
Box3 block_extent(int blocks_per_axis, const Index3& ijk);
Box3 block_extent(const HierarchySpec& spec, const BlockAddress& a);
Box3 block_extent(const LODManifest& manifest, const BlockAddress& a);

/// Sample stride of a level. Throws PartitionError when dims are incompatible.
Index3 level_stride(Index3 volume_dims, int blocks_per_axis, Index3 micro_dims);

/// Throws PartitionError (listing nearby valid dims) unless every level of
/// `spec` partitions `volume_dims` with integer strides.
void validate_hierarchy(Index3 volume_dims, const HierarchySpec& spec);

/// Smallest dims >= volume_dims that satisfy `spec` (pad target).
Index3 padded_dims(Index3 volume_dims, const HierarchySpec& spec);

/// Cuts one level into micro-blocks. Neighbours share their boundary sample;
/// each block is stride-subsampled to micro_dims. Micro-block bounds are the
/// block extent in normalized coordinates.
std::vector<std::pair<BlockAddress, ScalarVolume>> partition_level(const ScalarVolume& volume, int lod,
                                                                   int blocks_per_axis, Index3 micro_dims);

/// Extracts a single micro-block (see partition_level).
ScalarVolume extract_micro_block(const ScalarVolume& volume, const BlockAddress& a, int blocks_per_axis,
                                 Index3 micro_dims);

/// Manifest skeleton (addresses and extents) for a volume.
LODManifest build_hierarchy(const ScalarVolume& volume, const HierarchySpec& spec);

/// Canonical store path of a block, e.g. "level-2/1_0_3.mfa".
std::string block_path(const BlockAddress& a, const std::string& extension);

void save_manifest(const std::filesystem::path& path, const LODManifest& manifest);
LODManifest load_manifest(const std::filesystem::path& path);

}  // namespace microvol
