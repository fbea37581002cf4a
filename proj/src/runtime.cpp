#include "microvol/runtime.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"

namespace microvol {

CachedFrame cache_frame(const PointOfView& pov, const BlockSource& source, ModelCache& cache, double aspect,
                        const LodPolicy& policy) {
    CachedFrame out;
    out.visible = select_visible(pov, source.manifest(), aspect, policy);
    if (out.visible.size() > cache.capacity()) {
        throw CapacityError("visible set of " + std::to_string(out.visible.size()) +
                            " blocks exceeds cache capacity " + std::to_string(cache.capacity()));
    }
    cache.pin(out.visible);
    out.resident.reserve(out.visible.size());
    for (const auto& a : out.visible) {
        BlockHandle block = cache.query(a);
        if (block) {
            ++out.hits;
        } else {
            ++out.misses;
            block = source.load(a);
            cache.insert(a, block);
        }
        out.resident.push_back({a, std::move(block)});
    }
    return out;
}

PrefetchMode parse_prefetch_mode(const std::string& name) {
    if (name == "off" || name == "none") return PrefetchMode::off;
    if (name == "static") return PrefetchMode::static_pov;
    if (name == "linear") return PrefetchMode::linear;
    throw DomainError("unknown prefetch mode '" + name + "' (expected off, static or linear)");
}

std::string to_string(PrefetchMode mode) {
    switch (mode) {
        case PrefetchMode::off: return "off";
        case PrefetchMode::static_pov: return "static";
        case PrefetchMode::linear: return "linear";
    }
    return "off";
}

Predictor make_predictor(PrefetchMode mode) {
    switch (mode) {
        case PrefetchMode::off: return {};
        case PrefetchMode::static_pov:
            return [](std::span<const PointOfView> h) -> std::optional<PointOfView> {
                if (h.empty()) return std::nullopt;
                return h.back();
            };
        case PrefetchMode::linear:
            return [](std::span<const PointOfView> h) -> std::optional<PointOfView> {
                if (h.empty()) return std::nullopt;
                return predict_next_linear(h);
            };
    }
    return {};
}

PointOfView predict_next_linear(std::span<const PointOfView> history) {
    if (history.empty()) throw DomainError("cannot predict from an empty history");
    const PointOfView& cur = history.back();
    if (history.size() < 2) return cur;
    const PointOfView& prev = history[history.size() - 2];
    PointOfView next = cur;
    next.position = cur.position * 2.0 - prev.position;
    const Vec3 dir = cur.direction * 2.0 - prev.direction;
    if (length(dir) > 1e-9) next.direction = normalize(dir);
    Vec3 up = cur.up * 2.0 - prev.up;
    up = up - next.direction * dot(up, next.direction);
    if (length(up) < 1e-9) up = cur.up - next.direction * dot(cur.up, next.direction);
    if (length(up) < 1e-9) return cur;
    next.up = normalize(up);
    return next;
}

void PreemptionGate::reset() {
    std::lock_guard lock(mutex_);
    done_ = false;
    started_ = 0;
}

bool PreemptionGate::begin_load(const std::function<void()>& on_start) {
    std::lock_guard lock(mutex_);
    if (done_) return false;
    ++started_;
    if (on_start) on_start();
    return true;
}

void PreemptionGate::finish(const std::function<void()>& on_done) {
    std::lock_guard lock(mutex_);
    if (!done_ && on_done) on_done();
    done_ = true;
}

bool PreemptionGate::done() const {
    std::lock_guard lock(mutex_);
    return done_;
}

std::uint64_t PreemptionGate::loads_started() const {
    std::lock_guard lock(mutex_);
    return started_;
}

std::size_t prefetch_loop(std::span<const PointOfView> history, const BlockSource& source, ModelCache& cache,
                          PreemptionGate& gate, const Predictor& predictor, double aspect, const LodPolicy& policy,
                          const PrefetchHooks& hooks) {
    if (!predictor || gate.done()) return 0;
    const std::optional<PointOfView> next = predictor(history);
    if (!next) return 0;
    std::vector<BlockAddress> predicted;
    try {
        next->validate();
        predicted = select_visible(*next, source.manifest(), aspect, policy);
    } catch (const DomainError&) {
        return 0;
    }
    std::size_t loaded = 0;
    for (const auto& a : predicted) {
        if (cache.touch(a)) continue;
        const bool started = gate.begin_load([&] {
            if (hooks.on_load_start) hooks.on_load_start(a);
        });
        if (!started) break;
        BlockHandle block;
        try {
            block = source.load(a);
        } catch (const Error& e) {
            std::cerr << "prefetch: skipping " << a.to_string() << ": " << e.what() << '\n';
            continue;
        }
        if (!cache.try_insert(a, std::move(block))) break;
        ++loaded;
    }
    return loaded;
}

nlohmann::json to_json(const FrameTiming& t) {
    return {{"frame", t.frame},
            {"caching_ms", t.caching_ms},
            {"rendering_ms", t.rendering_ms},
            {"input_latency_ms", t.input_latency_ms},
            {"prefetch_models_loaded", t.prefetch_models_loaded},
            {"visible", t.visible},
            {"hits", t.hits},
            {"misses", t.misses},
            {"miss_rate", t.miss_rate}};
}

ReplaySummary summarize(std::span<const FrameTiming> timings) {
    ReplaySummary s;
    s.frames = timings.size();
    for (const auto& t : timings) {
        s.mean_caching_ms += t.caching_ms;
        s.mean_rendering_ms += t.rendering_ms;
        s.mean_latency_ms += t.input_latency_ms;
        s.hits += t.hits;
        s.misses += t.misses;
        s.prefetch_loads += t.prefetch_models_loaded;
    }
    if (s.frames > 0) {
        const auto n = static_cast<double>(s.frames);
        s.mean_caching_ms /= n;
        s.mean_rendering_ms /= n;
        s.mean_latency_ms /= n;
    }
    const std::uint64_t queries = s.hits + s.misses;
    s.miss_rate = queries ? static_cast<double>(s.misses) / static_cast<double>(queries) : 0.0;
    return s;
}

nlohmann::json to_json(const ReplaySummary& s) {
    return {{"frames", s.frames},
            {"mean_caching_ms", s.mean_caching_ms},
            {"mean_rendering_ms", s.mean_rendering_ms},
            {"mean_latency_ms", s.mean_latency_ms},
            {"hits", s.hits},
            {"misses", s.misses},
            {"prefetch_loads", s.prefetch_loads},
            {"miss_rate", s.miss_rate}};
}

RuntimeSession::RuntimeSession(std::shared_ptr<const BlockSource> source, TransferFunction tf, RuntimeConfig config,
                               RuntimeObserver observer)
    : source_(std::move(source)),
      tf_(std::move(tf)),
      config_(std::move(config)),
      observer_(std::move(observer)),
      predictor_(config_.predictor ? config_.predictor : make_predictor(config_.prefetch)),
      cache_(config_.cache_capacity, config_.record_evictions) {
    if (!source_) throw DomainError("runtime session needs a block source");
    config_.render.validate();
    if (config_.history_length < 2) config_.history_length = 2;
}

RuntimeSession::Step RuntimeSession::step(const PointOfView& pov) {
    using clock = std::chrono::steady_clock;
    pov.validate();
    const double aspect = static_cast<double>(config_.render.width) / config_.render.height;

    const auto t0 = clock::now();
    CachedFrame cached = cache_frame(pov, *source_, cache_, aspect, config_.lod);
    const auto t1 = clock::now();

    history_.push_back(pov);
    while (history_.size() > config_.history_length) history_.pop_front();
    const std::vector<PointOfView> history(history_.begin(), history_.end());

    gate_.reset();
    if (cancelled_.load()) gate_.finish();
    std::size_t prefetched = 0;
    std::thread prefetcher;
    if (predictor_) {
        prefetcher = std::thread([&] {
            PrefetchHooks hooks{observer_.on_prefetch_load_start};
            try {
                prefetched = prefetch_loop(history, *source_, cache_, gate_, predictor_, aspect, config_.lod, hooks);
            } catch (const std::exception& e) {
                std::cerr << "prefetch: " << e.what() << '\n';
            }
        });
    }

    Step step;
    try {
        step.frame = render(pov, cached.resident, source_->manifest(), tf_, config_.render);
    } catch (...) {
        gate_.finish();
        if (prefetcher.joinable()) prefetcher.join();
        throw;
    }
    const auto t2 = clock::now();
    gate_.finish(observer_.on_render_done);
    if (prefetcher.joinable()) prefetcher.join();

    using ms = std::chrono::duration<double, std::milli>;
    FrameTiming& t = step.timing;
    t.caching_ms = ms(t1 - t0).count();
    t.rendering_ms = ms(t2 - t1).count();
    t.input_latency_ms = ms(t2 - t0).count();
    t.prefetch_models_loaded = prefetched;
    t.visible = cached.visible.size();
    t.hits = cached.hits;
    t.misses = cached.misses;
    t.miss_rate = t.visible ? static_cast<double>(t.misses) / static_cast<double>(t.visible) : 0.0;
    step.visible = std::move(cached.visible);
    {
        std::lock_guard lock(timings_mutex_);
        t.frame = timings_.size();
        timings_.push_back(t);
    }
    return step;
}

void RuntimeSession::cancel() {
    cancelled_.store(true);
    gate_.finish();
}

std::vector<FrameTiming> RuntimeSession::timings() const {
    std::lock_guard lock(timings_mutex_);
    return timings_;
}

std::size_t RuntimeSession::frames() const {
    std::lock_guard lock(timings_mutex_);
    return timings_.size();
}

std::vector<FrameTiming> replay(std::span<const PointOfView> trajectory, std::shared_ptr<const BlockSource> source,
                                const TransferFunction& tf, const RuntimeConfig& config,
                                const std::function<void(const RuntimeSession::Step&)>& on_frame,
                                RuntimeObserver observer) {
    RuntimeSession session(std::move(source), tf, config, std::move(observer));
    std::vector<FrameTiming> out;
    out.reserve(trajectory.size());
    for (const auto& pov : trajectory) {
        const auto step = session.step(pov);
        out.push_back(step.timing);
        if (on_frame) on_frame(step);
    }
    return out;
}

namespace {

Vec3 vec_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::array<double, 3>>();
    return {v[0], v[1], v[2]};
}

}  // namespace

PointOfView pov_from_json(const nlohmann::json& j) {
    PointOfView pov;
    try {
        pov.position = vec_from_json(j.at("pos"));
        pov.direction = vec_from_json(j.at("dir"));
        pov.up = vec_from_json(j.at("up"));
        if (j.contains("fov")) pov.fov_y = j.at("fov").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("point of view: ") + e.what());
    }
    try {
        pov.validate();
    } catch (const DomainError& e) {
        throw FormatError(std::string("point of view: ") + e.what());
    }
    return pov;
}

nlohmann::json pov_to_json(const PointOfView& pov) {
    const auto v = [](const Vec3& p) { return nlohmann::json::array({p.x, p.y, p.z}); };
    return {{"pos", v(pov.position)}, {"dir", v(pov.direction)}, {"up", v(pov.up)}, {"fov", pov.fov_y}};
}

std::vector<PointOfView> read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory " + path.string());
    std::vector<PointOfView> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(pov_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_trajectory(const std::filesystem::path& path, std::span<const PointOfView> trajectory) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& pov : trajectory) out << pov_to_json(pov).dump() << '\n';
}

std::vector<PointOfView> orbit_trajectory(std::size_t count, double radius, double elevation_deg, double turns,
                                          Vec3 target, double fov_y) {
    if (!(radius > 0.0)) throw DomainError("orbit radius must be positive");
    if (!(std::abs(elevation_deg) < 89.0)) throw DomainError("orbit elevation must lie in (-89, 89) degrees");
    std::vector<PointOfView> out;
    out.reserve(count);
    const double e = elevation_deg * std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double theta = 2.0 * std::numbers::pi * turns * static_cast<double>(i) / static_cast<double>(count);
        const Vec3 offset{radius * std::cos(e) * std::cos(theta), radius * std::sin(e),
                          radius * std::cos(e) * std::sin(theta)};
        out.push_back(PointOfView::look_at(target + offset, target, {0.0, 1.0, 0.0}, fov_y));
    }
    return out;
}

void write_timings_csv(const std::filesystem::path& path, std::span<const FrameTiming> timings) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "frame,caching_ms,rendering_ms,input_latency_ms,prefetch_models_loaded,visible,hits,misses,miss_rate\n";
    for (const auto& t : timings) {
        out << t.frame << ',' << t.caching_ms << ',' << t.rendering_ms << ',' << t.input_latency_ms << ','
            << t.prefetch_models_loaded << ',' << t.visible << ',' << t.hits << ',' << t.misses << ',' << t.miss_rate
            << '\n';
    }
}

void write_timings_json(const std::filesystem::path& path, std::span<const FrameTiming> timings) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& t : timings) frames.push_back(to_json(t));
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << nlohmann::json{{"frames", frames}, {"summary", to_json(summarize(timings))}}.dump(2) << '\n';
}

}  // namespace microvol
