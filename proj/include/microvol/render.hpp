#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "microvol/block.hpp"
#include "microvol/frame.hpp"
#include "microvol/geometry.hpp"
#include "microvol/lod.hpp"
#include "microvol/transfer_function.hpp"
#include "microvol/volume.hpp"

namespace microvol {

/// Camera in normalized [-1,1]^3 world coordinates. `direction` and `up` are
/// unit vectors; fov_y is in degrees.
struct PointOfView {
    Vec3 position{0.0, 0.0, 3.0};
    Vec3 direction{0.0, 0.0, -1.0};
    Vec3 up{0.0, 1.0, 0.0};
    double fov_y = 45.0;

    /// Throws DomainError on non-unit vectors, parallel direction/up or a bad fov.
    void validate() const;
    /// Looks from `position` at `target`, re-orthogonalizing `up`.
    static PointOfView look_at(Vec3 position, Vec3 target, Vec3 up = {0.0, 1.0, 0.0}, double fov_y = 45.0);
};

/// Distance thresholds separating detail levels: d < bounds[0] -> level 1,
/// bounds[0] <= d < bounds[1] -> level 2, and so on.
struct LodPolicy {
    std::vector<double> upper_bounds{0.8, 1.6, 2.4};
};

int lod_for_distance(double distance, const LodPolicy& policy = {});

inline constexpr double kNearPlane = 1e-3;

/// Blocks to render for a view: a gap-free, overlap-free cover of the part of
/// the domain inside the view frustum. Sorted by address.
std::vector<BlockAddress> select_visible(const PointOfView& pov, const LODManifest& manifest, double aspect = 1.0,
                                         const LodPolicy& policy = {});

struct Lighting {
    double ambient = 0.1;
    double diffuse = 0.7;
    double specular = 0.2;
    double shininess = 32.0;
    bool enabled = true;
};

struct RenderParams {
    int width = 512;
    int height = 512;
    double sample_distance = 1e-3;
    /// Step length the TF opacities are defined for; <= 0 means sample_distance.
    double reference_step = 0.0;
    double o_max = 0.99;
    Lighting light;

    void validate() const;
};

struct RenderStats {
    std::uint64_t rays = 0;        // rays that hit the domain
    std::uint64_t samples = 0;     // field evaluations
    std::uint64_t terminated = 0;  // rays stopped by the opacity threshold
};

struct ResidentBlock {
    BlockAddress address;
    std::shared_ptr<const VolumeBlock> block;
};

/// Renders the resident blocks. The set must contain one non-null block per
/// address of select_visible(pov, manifest); a missing block throws Error
/// naming it. Parallel over image rows.
Frame render(const PointOfView& pov, const std::vector<ResidentBlock>& resident, const LODManifest& manifest,
             const TransferFunction& tf, const RenderParams& params, RenderStats* stats = nullptr);

/// Single-threaded reference; bit-identical to render().
Frame render_serial(const PointOfView& pov, const std::vector<ResidentBlock>& resident,
                    const LODManifest& manifest, const TransferFunction& tf, const RenderParams& params,
                    RenderStats* stats = nullptr);

/// Same ray march with value and gradient from `field`, whose domain
/// `physical_bounds` is mapped onto the [-1,1]^3 world cube.
Frame render_ground_truth(const PointOfView& pov, const AnalyticField& field, const Box3& physical_bounds,
                          const TransferFunction& tf, const RenderParams& params, RenderStats* stats = nullptr);

}  // namespace microvol
