#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "microvol/block_source.hpp"
#include "microvol/cache.hpp"
#include "microvol/render.hpp"

namespace microvol {

/// Visibility computation plus cache lookups for one frame. Pins the visible
/// set, loads misses from `source` and returns handles for every visible block.
struct CachedFrame {
    std::vector<BlockAddress> visible;
    std::vector<ResidentBlock> resident;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
};

/// Throws CapacityError if the visible set exceeds the cache capacity, and
/// IoError/FormatError naming the block if a load fails.
CachedFrame cache_frame(const PointOfView& pov, const BlockSource& source, ModelCache& cache, double aspect = 1.0,
                        const LodPolicy& policy = {});

/// Next-POV guess from the most recent POVs (oldest first). nullopt = no prefetch.
using Predictor = std::function<std::optional<PointOfView>(std::span<const PointOfView> history)>;

enum class PrefetchMode { off, static_pov, linear };

PrefetchMode parse_prefetch_mode(const std::string& name);
std::string to_string(PrefetchMode mode);
Predictor make_predictor(PrefetchMode mode);

/// Constant-velocity extrapolation of position, direction and up.
/// Fewer than two history entries return the last POV.
PointOfView predict_next_linear(std::span<const PointOfView> history);

/// Rendering-done signal shared by the render dispatcher and the prefetcher.
/// Checking the signal and starting a load happen under one lock, so no load
/// can begin once finish() has returned.
class PreemptionGate {
public:
    void reset();
    /// False once rendering is done; otherwise records a load start and
    /// runs `on_start` while still holding the lock.
    bool begin_load(const std::function<void()>& on_start = {});
    /// Marks rendering done; `on_done` runs under the lock.
    void finish(const std::function<void()>& on_done = {});
    bool done() const;
    std::uint64_t loads_started() const;

private:
    mutable std::mutex mutex_;
    bool done_ = false;
    std::uint64_t started_ = 0;
};

struct PrefetchHooks {
    std::function<void(const BlockAddress&)> on_load_start;  // runs under the gate lock
};

/// Loads predicted-visible blocks that are not resident, checking the gate
/// before every load. Resident predicted blocks are touched so they survive
/// eviction. Load errors are skipped. Returns the number of blocks inserted.
std::size_t prefetch_loop(std::span<const PointOfView> history, const BlockSource& source, ModelCache& cache,
                          PreemptionGate& gate, const Predictor& predictor, double aspect = 1.0,
                          const LodPolicy& policy = {}, const PrefetchHooks& hooks = {});

struct FrameTiming {
    std::size_t frame = 0;
    double caching_ms = 0.0;
    double rendering_ms = 0.0;
    double input_latency_ms = 0.0;
    std::size_t prefetch_models_loaded = 0;
    std::size_t visible = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    double miss_rate = 0.0;
};

nlohmann::json to_json(const FrameTiming& t);

struct ReplaySummary {
    std::size_t frames = 0;
    double mean_caching_ms = 0.0;
    double mean_rendering_ms = 0.0;
    double mean_latency_ms = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t prefetch_loads = 0;
    double miss_rate = 0.0;  // misses / (hits + misses)
};

ReplaySummary summarize(std::span<const FrameTiming> timings);
nlohmann::json to_json(const ReplaySummary& s);

struct RuntimeConfig {
    std::size_t cache_capacity = 200;
    PrefetchMode prefetch = PrefetchMode::off;
    /// Overrides `prefetch` when set.
    Predictor predictor;
    RenderParams render;
    LodPolicy lod;
    std::size_t history_length = 8;
    bool record_evictions = false;
};

struct RuntimeObserver {
    std::function<void(const BlockAddress&)> on_prefetch_load_start;
    std::function<void()> on_render_done;
};

/// One caching/render role plus one prefetch role around a private cache.
/// Shared by trajectory replay and live service sessions. Not thread-safe:
/// step() must be called from one thread at a time.
class RuntimeSession {
public:
    RuntimeSession(std::shared_ptr<const BlockSource> source, TransferFunction tf, RuntimeConfig config,
                   RuntimeObserver observer = {});

    struct Step {
        FrameTiming timing;
        Frame frame;
        std::vector<BlockAddress> visible;
    };

    /// cache_frame, then render while the prefetcher runs; prefetching stops
    /// once the frame is rendered.
    Step step(const PointOfView& pov);

    /// Stops any further prefetch loads of the in-flight step.
    void cancel();

    const ModelCache& cache() const { return cache_; }
    const BlockSource& source() const { return *source_; }
    const RuntimeConfig& config() const { return config_; }
    std::vector<FrameTiming> timings() const;
    std::size_t frames() const;

private:
    std::shared_ptr<const BlockSource> source_;
    TransferFunction tf_;
    RuntimeConfig config_;
    RuntimeObserver observer_;
    Predictor predictor_;
    ModelCache cache_;
    PreemptionGate gate_;
    std::atomic<bool> cancelled_{false};
    std::deque<PointOfView> history_;
    mutable std::mutex timings_mutex_;
    std::vector<FrameTiming> timings_;
};

/// Replays a trajectory. `on_frame` sees every step as it completes, so
/// callers can flush partial results if a later frame throws.
std::vector<FrameTiming> replay(std::span<const PointOfView> trajectory, std::shared_ptr<const BlockSource> source,
                                const TransferFunction& tf, const RuntimeConfig& config,
                                const std::function<void(const RuntimeSession::Step&)>& on_frame = {},
                                RuntimeObserver observer = {});

/// JSON lines: {"pos":[x,y,z],"dir":[x,y,z],"up":[x,y,z],"fov":deg}; fov optional.
std::vector<PointOfView> read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, std::span<const PointOfView> trajectory);
PointOfView pov_from_json(const nlohmann::json& j);
nlohmann::json pov_to_json(const PointOfView& pov);

/// Circular orbit around `target` at constant elevation, looking at it.
std::vector<PointOfView> orbit_trajectory(std::size_t count, double radius, double elevation_deg = 20.0,
                                          double turns = 1.0, Vec3 target = {}, double fov_y = 45.0);

void write_timings_csv(const std::filesystem::path& path, std::span<const FrameTiming> timings);
void write_timings_json(const std::filesystem::path& path, std::span<const FrameTiming> timings);

}  // namespace microvol
