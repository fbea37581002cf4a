#include "microvol/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "microvol/errors.hpp"

namespace microvol {

namespace {

constexpr double kUnitTolerance = 1e-6;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

struct Frustum {
    Vec3 apex;
    Vec3 forward;
    std::array<Vec3, 4> side_normals;  // inward, planes through the apex
};

Frustum make_frustum(const PointOfView& pov, double aspect) {
    const Vec3 right = normalize(cross(pov.direction, pov.up));
    const Vec3 up = cross(right, pov.direction);
    const double tan_v = std::tan(radians(pov.fov_y) * 0.5);
    const double tan_h = tan_v * aspect;
    return {pov.position,
            pov.direction,
            {pov.direction * tan_h - right, pov.direction * tan_h + right, pov.direction * tan_v - up,
             pov.direction * tan_v + up}};
}

// Largest signed distance of any box corner along n, relative to origin.
double max_projection(const Box3& box, const Vec3& origin, const Vec3& n) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) d += n[a] * ((n[a] >= 0.0 ? box.max[a] : box.min[a]) - origin[a]);
    return d;
}

bool intersects(const Frustum& f, const Box3& box) {
    constexpr double eps = 1e-9;
    if (max_projection(box, f.apex, f.forward) < kNearPlane - eps) return false;
    for (const Vec3& n : f.side_normals) {
        if (max_projection(box, f.apex, n) < -eps) return false;
    }
    return true;
}

void collect(const BlockAddress& a, const LODManifest& manifest, const PointOfView& pov, const Frustum& frustum,
             const LodPolicy& policy, std::vector<BlockAddress>& out) {
    const Box3 extent = block_extent(manifest, a);
    if (!intersects(frustum, extent)) return;
    const double d = length(extent.center() - pov.position);
    if (a.lod > 1 && lod_for_distance(d, policy) < a.lod) {
        for (const auto& child : manifest.children(a)) collect(child, manifest, pov, frustum, policy, out);
        return;
    }
    out.push_back(a);
}

// Finest-cell lookup table from sample position to the covering visible block.
class BlockLocator {
public:
    BlockLocator(const LODManifest& manifest, const std::vector<BlockAddress>& visible,
                 const std::vector<ResidentBlock>& resident)
        : cells_(manifest.finest_blocks_per_axis) {
        grid_.assign(static_cast<std::size_t>(cells_) * cells_ * cells_, -1);
        for (const auto& r : resident) {
            if (r.block && !lookup_.contains(r.address)) lookup_.emplace(r.address, r.block.get());
        }
        blocks_.reserve(visible.size());
        for (const auto& a : visible) {
            const auto it = lookup_.find(a);
            if (it == lookup_.end()) {
                throw Error("block " + a.to_string() + " is visible but not resident");
            }
            const int index = static_cast<int>(blocks_.size());
            blocks_.push_back(it->second);
            const int span = 1 << (a.lod - 1);
            for (int k = a.ijk[2] * span; k < (a.ijk[2] + 1) * span; ++k) {
                for (int j = a.ijk[1] * span; j < (a.ijk[1] + 1) * span; ++j) {
                    for (int i = a.ijk[0] * span; i < (a.ijk[0] + 1) * span; ++i) {
                        grid_[(static_cast<std::size_t>(k) * cells_ + j) * cells_ + i] = index;
                    }
                }
            }
        }
    }

    void evaluate(const Vec3& p, double& value, Vec3& gradient) const {
        Index3 c{};
        for (int a = 0; a < 3; ++a) {
            c[a] = std::clamp(static_cast<int>(std::floor((p[a] + 1.0) * 0.5 * cells_)), 0, cells_ - 1);
        }
        const int index = grid_[(static_cast<std::size_t>(c[2]) * cells_ + c[1]) * cells_ + c[0]];
        if (index < 0) {
            std::ostringstream msg;
            msg << "no visible block covers sample (" << p.x << ", " << p.y << ", " << p.z << "), finest block "
                << BlockAddress{1, c}.to_string();
            throw Error(msg.str());
        }
        blocks_[static_cast<std::size_t>(index)]->evaluate(p, value, gradient);
    }

private:
    int cells_;
    std::vector<int> grid_;
    std::vector<const VolumeBlock*> blocks_;
    std::map<BlockAddress, const VolumeBlock*> lookup_;
};

class AnalyticSampler {
public:
    AnalyticSampler(const AnalyticField& field, const Box3& bounds)
        : field_(field), min_(bounds.min), half_(bounds.size() * 0.5) {
        if (bounds.degenerate()) throw DomainError("ground-truth bounds are degenerate");
    }

    void evaluate(const Vec3& p, double& value, Vec3& gradient) const {
        const Vec3 phys{min_.x + (p.x + 1.0) * half_.x, min_.y + (p.y + 1.0) * half_.y,
                        min_.z + (p.z + 1.0) * half_.z};
        value = field_.value(phys);
        const Vec3 g = field_.gradient(phys);
        gradient = {g.x * half_.x, g.y * half_.y, g.z * half_.z};
    }

private:
    const AnalyticField& field_;
    Vec3 min_;
    Vec3 half_;
};

struct Camera {
    Vec3 origin;
    Vec3 forward;
    Vec3 right;
    Vec3 up;
    double tan_h = 0.0;
    double tan_v = 0.0;
};

Camera make_camera(const PointOfView& pov, int width, int height) {
    Camera cam;
    cam.origin = pov.position;
    cam.forward = pov.direction;
    cam.right = normalize(cross(pov.direction, pov.up));
    cam.up = cross(cam.right, pov.direction);
    cam.tan_v = std::tan(radians(pov.fov_y) * 0.5);
    cam.tan_h = cam.tan_v * static_cast<double>(width) / height;
    return cam;
}

// Entry/exit parameters of the ray against [-1,1]^3; false on a miss.
bool clip_to_domain(const Vec3& o, const Vec3& d, double& t0, double& t1) {
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < -1.0 || o[a] > 1.0) return false;
            continue;
        }
        double lo = (-1.0 - o[a]) / d[a];
        double hi = (1.0 - o[a]) / d[a];
        if (lo > hi) std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
    }
    return t0 <= t1;
}

struct Counters {
    std::uint64_t rays = 0;
    std::uint64_t samples = 0;
    std::uint64_t terminated = 0;
};

template <class Sampler>
class RayMarcher {
public:
    RayMarcher(const PointOfView& pov, const Sampler& sampler, const TransferFunction& tf, const RenderParams& params)
        : cam_(make_camera(pov, params.width, params.height)), sampler_(sampler), tf_(tf), params_(params) {
        const double ref = params.reference_step > 0.0 ? params.reference_step : params.sample_distance;
        correction_ = params.sample_distance / ref;
        identity_correction_ = params.reference_step <= 0.0 || params.reference_step == params.sample_distance;
    }

    void trace_row(int y, Frame& frame, Counters& counters) const {
        for (int x = 0; x < params_.width; ++x) trace(x, y, frame.pixel(x, y), counters);
    }

private:
    void trace(int x, int y, std::uint8_t* out, Counters& counters) const {
        const double sx = (2.0 * (x + 0.5) / params_.width - 1.0) * cam_.tan_h;
        const double sy = (1.0 - 2.0 * (y + 0.5) / params_.height) * cam_.tan_v;
        const Vec3 ray = normalize(cam_.forward + cam_.right * sx + cam_.up * sy);
        double t0 = 0.0;
        double t1 = 0.0;
        double r = 0.0, g = 0.0, b = 0.0, alpha = 0.0;
        if (clip_to_domain(cam_.origin, ray, t0, t1)) {
            t0 = std::max(t0, kNearPlane / dot(ray, cam_.forward));
            if (t0 <= t1) ++counters.rays;
            const Vec3 to_eye = -ray;
            const Vec3 half = normalize(to_eye - cam_.forward);
            for (std::int64_t k = 0;; ++k) {
                const double t = t0 + static_cast<double>(k) * params_.sample_distance;
                if (t > t1) break;
                const Vec3 p = cam_.origin + ray * t;
                double value = 0.0;
                Vec3 grad;
                sampler_.evaluate(p, value, grad);
                ++counters.samples;
                const Rgba c = tf_.lookup(value);
                if (c.a <= 0.0) continue;
                const double a_s = identity_correction_ ? c.a : 1.0 - std::pow(1.0 - c.a, correction_);
                double cr = c.r, cg = c.g, cb = c.b;
                shade(grad, half, cr, cg, cb);
                const double w = (1.0 - alpha) * a_s;
                r += w * cr;
                g += w * cg;
                b += w * cb;
                alpha += w;
                if (alpha > params_.o_max) {
                    ++counters.terminated;
                    break;
                }
            }
        }
        out[0] = quantize(r);
        out[1] = quantize(g);
        out[2] = quantize(b);
        out[3] = quantize(alpha);
    }

    void shade(const Vec3& gradient, const Vec3& half, double& r, double& g, double& b) const {
        const Lighting& l = params_.light;
        if (!l.enabled) return;
        const double len = length(gradient);
        if (len == 0.0) {
            r *= l.ambient;
            g *= l.ambient;
            b *= l.ambient;
            return;
        }
        const Vec3 n = gradient / len;
        const double diffuse = std::abs(dot(n, cam_.forward));
        const double specular = l.specular * std::pow(std::abs(dot(n, half)), l.shininess);
        const double k = l.ambient + l.diffuse * diffuse;
        r = std::min(1.0, r * k + specular);
        g = std::min(1.0, g * k + specular);
        b = std::min(1.0, b * k + specular);
    }

    static std::uint8_t quantize(double v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }

    Camera cam_;
    const Sampler& sampler_;
    const TransferFunction& tf_;
    const RenderParams& params_;
    double correction_ = 1.0;
    bool identity_correction_ = true;
};

template <class Sampler>
Frame march(const PointOfView& pov, const Sampler& sampler, const TransferFunction& tf, const RenderParams& params,
            RenderStats* stats, bool parallel) {
    Frame frame(params.width, params.height);
    const RayMarcher<Sampler> marcher(pov, sampler, tf, params);
    std::uint64_t rays = 0, samples = 0, terminated = 0;
    if (parallel) {
        // Exceptions may not leave an OpenMP region; capture the first one.
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) reduction(+ : rays, samples, terminated)
        for (int y = 0; y < params.height; ++y) {
            Counters c;
            try {
                marcher.trace_row(y, frame, c);
            } catch (...) {
#pragma omp critical(microvol_render_failure)
                if (!failure) failure = std::current_exception();
            }
            rays += c.rays;
            samples += c.samples;
            terminated += c.terminated;
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        Counters c;
        for (int y = 0; y < params.height; ++y) marcher.trace_row(y, frame, c);
        rays = c.rays;
        samples = c.samples;
        terminated = c.terminated;
    }
    if (stats) *stats = {rays, samples, terminated};
    return frame;
}

Frame render_blocks(const PointOfView& pov, const std::vector<ResidentBlock>& resident, const LODManifest& manifest,
                    const TransferFunction& tf, const RenderParams& params, RenderStats* stats, bool parallel) {
    pov.validate();
    params.validate();
    const double aspect = static_cast<double>(params.width) / params.height;
    const BlockLocator locator(manifest, select_visible(pov, manifest, aspect), resident);
    return march(pov, locator, tf, params, stats, parallel);
}

}  // namespace

void PointOfView::validate() const {
    if (std::abs(length(direction) - 1.0) > kUnitTolerance) throw DomainError("POV direction must be a unit vector");
    if (std::abs(length(up) - 1.0) > kUnitTolerance) throw DomainError("POV up must be a unit vector");
    if (length(cross(direction, up)) < 1e-9) throw DomainError("POV direction and up are parallel");
    if (!(fov_y > 0.0 && fov_y < 180.0)) throw DomainError("POV fov_y must lie in (0, 180) degrees");
    for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(position[a])) throw DomainError("POV position must be finite");
    }
}

PointOfView PointOfView::look_at(Vec3 position, Vec3 target, Vec3 up, double fov_y) {
    PointOfView pov;
    pov.position = position;
    if (length(target - position) == 0.0) throw DomainError("look_at target coincides with the position");
    pov.direction = normalize(target - position);
    const Vec3 side = cross(pov.direction, up);
    if (length(side) < 1e-9 * length(up)) throw DomainError("look_at up vector is parallel to the view direction");
    const Vec3 right = normalize(side);
    pov.up = normalize(cross(right, pov.direction));
    pov.fov_y = fov_y;
    pov.validate();
    return pov;
}

void RenderParams::validate() const {
    if (width <= 0 || height <= 0) throw DomainError("image size must be positive");
    if (!(sample_distance > 0.0) || !std::isfinite(sample_distance)) {
        throw DomainError("sample distance must be positive");
    }
    if (!(o_max > 0.0 && o_max <= 1.0)) throw DomainError("o_max must lie in (0, 1]");
}

int lod_for_distance(double distance, const LodPolicy& policy) {
    const auto& b = policy.upper_bounds;
    return 1 + static_cast<int>(std::upper_bound(b.begin(), b.end(), distance) - b.begin());
}

std::vector<BlockAddress> select_visible(const PointOfView& pov, const LODManifest& manifest, double aspect,
                                         const LodPolicy& policy) {
    const Frustum frustum = make_frustum(pov, aspect);
    std::vector<BlockAddress> out;
    for (const auto& a : manifest.level_addresses(manifest.levels)) collect(a, manifest, pov, frustum, policy, out);
    std::sort(out.begin(), out.end());
    return out;
}

Frame render(const PointOfView& pov, const std::vector<ResidentBlock>& resident, const LODManifest& manifest,
             const TransferFunction& tf, const RenderParams& params, RenderStats* stats) {
    return render_blocks(pov, resident, manifest, tf, params, stats, true);
}

Frame render_serial(const PointOfView& pov, const std::vector<ResidentBlock>& resident,
                    const LODManifest& manifest, const TransferFunction& tf, const RenderParams& params,
                    RenderStats* stats) {
    return render_blocks(pov, resident, manifest, tf, params, stats, false);
}

Frame render_ground_truth(const PointOfView& pov, const AnalyticField& field, const Box3& physical_bounds,
                          const TransferFunction& tf, const RenderParams& params, RenderStats* stats) {
    pov.validate();
    params.validate();
    const AnalyticSampler sampler(field, physical_bounds);
    return march(pov, sampler, tf, params, stats, true);
}

}  // namespace microvol
