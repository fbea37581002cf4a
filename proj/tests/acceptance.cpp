// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: microvol_acceptance [name-filter]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <list>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "microvol/block_source.hpp"
#include "microvol/cache.hpp"
#include "microvol/ds_block.hpp"
#include "microvol/encoder.hpp"
#include "microvol/errors.hpp"
#include "microvol/metrics.hpp"
#include "microvol/render.hpp"
#include "microvol/runtime.hpp"

using namespace microvol;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [failed]");
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<ResidentBlock> resident_for(const PointOfView& pov, const BlockSource& source, double aspect = 1.0) {
    std::vector<ResidentBlock> out;
    for (const auto& a : select_visible(pov, source.manifest(), aspect)) out.push_back({a, source.load(a)});
    return out;
}

Frame render_source(const PointOfView& pov, const BlockSource& source, const TransferFunction& tf,
                    const RenderParams& params) {
    return render(pov, resident_for(pov, source), source.manifest(), tf, params);
}

// The 129^3 Marschner-Lobb store shared by the encoding, compression, cache
// and prefetch criteria.
struct BigStore {
    ScalarVolume volume;
    HierarchySpec spec{3, {33, 33, 33}, 1};
    EncodeOptions opts{1e-3, 2, false};
    EncodeResult adaptive;
    double encode_seconds = 0.0;
    std::shared_ptr<MemoryBlockSource> source;
};

BigStore& big_store() {
    static BigStore store = [] {
        BigStore s;
        s.volume = sample_grid(marschner_lobb(), {129, 129, 129}, unit_cube());
        const auto t0 = Clock::now();
        s.adaptive = cross_level_encode(s.volume, s.spec, s.opts);
        s.encode_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        s.source = memory_source(s.adaptive);
        return s;
    }();
    return store;
}

// ---------------------------------------------------------------------------

Outcome format_exactness() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<float> samples(16 * 16 * 16);
    for (auto& s : samples) s = static_cast<float>(u(rng));
    const ScalarVolume block({16, 16, 16}, {{-0.5, 0.0, 0.25}, {0.0, 0.5, 1.0}}, samples);

    int combos = 0, size_ok = 0, trip_ok = 0;
    for (int degree = 1; degree <= 3; ++degree) {
        for (int ncp = degree + 1; ncp <= 16; ++ncp) {
            ++combos;
            const MicroModel m = fit(block, ncp, degree, 2);
            const auto bytes = serialize(m);
            const std::size_t expected = 1 + (static_cast<std::size_t>(ncp + degree) * 3 +
                                              static_cast<std::size_t>(ncp) * ncp * ncp) * 4;
            size_ok += bytes.size() == expected && m.serialized_size() == expected;
            const MicroModel back = deserialize(bytes, ncp, m.extent(), 2);
            bool same = serialize(back) == bytes;
            for (int i = 0; i < 50 && same; ++i) {
                const Vec3 p{0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng)};
                same = back.value(p) == m.value(p);
            }
            trip_ok += same;
        }
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    o.check(size_ok == combos, fmt("byte length matches closed form for %d/%d (degree,ncp) pairs", size_ok, combos));
    o.check(trip_ok == combos, fmt("bit-exact round trip %d/%d", trip_ok, combos));
    o.check(secs < 1.0, fmt("runtime %.3f s < 1 s", secs));
    return o;
}

Outcome polynomial_reproduction() {
    Outcome o;
    const auto q = [](const Vec3& p) {
        return 0.3 + 0.5 * p[0] - 0.7 * p[1] + 0.2 * p[2] + 0.9 * p[0] * p[0] - 0.4 * p[1] * p[1] + 0.6 * p[2] * p[2] +
               0.8 * p[0] * p[1] - 0.3 * p[1] * p[2] + 0.5 * p[0] * p[2];
    };
    const auto dq = [](const Vec3& p) {
        return Vec3{0.5 + 1.8 * p[0] + 0.8 * p[1] + 0.5 * p[2], -0.7 - 0.8 * p[1] + 0.8 * p[0] - 0.3 * p[2],
                    0.2 + 1.2 * p[2] - 0.3 * p[1] + 0.5 * p[0]};
    };
    const ScalarVolume block = sample_grid({q, dq}, {17, 17, 17}, unit_cube());
    double worst_rmse = 0.0, worst_grad = 0.0;
    for (int ncp : {3, 5, 9, 17}) {
        const MicroModel m = fit(block, ncp, 2);
        worst_rmse = std::max(worst_rmse, error_rmse(block, m));
        std::mt19937 rng(ncp);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            const Vec3 t{u(rng), u(rng), u(rng)};
            const Vec3 p{2 * t[0] - 1, 2 * t[1] - 1, 2 * t[2] - 1};
            const Vec3 g = m.gradient(t), e = dq(p);
            const double rel = std::sqrt((g[0] - e[0]) * (g[0] - e[0]) + (g[1] - e[1]) * (g[1] - e[1]) +
                                         (g[2] - e[2]) * (g[2] - e[2])) /
                               std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
            worst_grad = std::max(worst_grad, rel);
        }
    }
    o.check(worst_rmse < 1e-5, fmt("max RMSE %.2e < 1e-5 over ncp {3,5,9,17}", worst_rmse));
    o.check(worst_grad < 1e-3, fmt("max gradient rel. error %.2e < 1e-3", worst_grad));
    return o;
}

Outcome adaptive_equals_exhaustive() {
    Outcome o;
    BigStore& s = big_store();
    const auto t0 = Clock::now();
    const EncodeResult full = full_in_level_encode(s.volume, s.spec, s.opts);
    const double full_secs = std::chrono::duration<double>(Clock::now() - t0).count();

    const EncodeResult& a = s.adaptive;
    std::size_t compared = 0, identical = 0, meets = 0, warned = 0;
    for (const auto& [addr, blk] : a.blocks) {
        const bool parent_complex = addr.lod == s.spec.levels || a.blocks.at(a.manifest.parent(addr)).complex;
        if (parent_complex) {
            ++compared;
            identical += serialize(blk.model) == serialize(full.blocks.at(addr).model);
        }
        if (blk.rmse < s.opts.error_bound) {
            ++meets;
        } else if (blk.unmeetable || !blk.searched) {
            const std::string name = addr.to_string();
            warned += std::any_of(a.warnings.begin(), a.warnings.end(),
                                  [&](const std::string& w) { return w.find(name) != std::string::npos; });
        }
    }
    o.check(compared > 0 && identical == compared,
            fmt("%zu/%zu parent-complex blocks byte-identical to full in-level search", identical, compared));
    o.check(meets + warned == a.blocks.size(),
            fmt("%zu blocks meet the 1e-3 bound, %zu warned, of %zu", meets, warned, a.blocks.size()));
    o.check(a.searched_blocks < a.total_blocks,
            fmt("searched %zu < total %zu blocks", a.searched_blocks, a.total_blocks));
    o.detail += fmt(" (adaptive %.1f s, full %.1f s)", s.encode_seconds, full_secs);
    return o;
}

Outcome compression() {
    Outcome o;
    BigStore& s = big_store();
    const EncodeResult fam = fixed_ncp_encode(s.volume, s.spec, 0, 2);
    const std::size_t adaptive = s.adaptive.manifest.total_bytes(), fixed = fam.manifest.total_bytes();
    const double ratio = static_cast<double>(fixed) / static_cast<double>(adaptive);
    o.check(ratio >= 2.0, fmt("fixed-max-NCP %zu B / adaptive %zu B = %.2fx >= 2x", fixed, adaptive, ratio));
    return o;
}

// The 61^3 two-by-two-by-two octant setup used for quality and boundary checks.
struct OctantSetup {
    Box3 bounds{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
    AnalyticField field = marschner_lobb();
    ScalarVolume volume = sample_grid(field, {61, 61, 61}, bounds);
    HierarchySpec eight{1, {31, 31, 31}, 2};
    HierarchySpec one{1, {61, 61, 61}, 1};
    TransferFunction tf = preset_transfer_function("bands", volume.value_range().first, volume.value_range().second);
};

OctantSetup& octants() {
    static OctantSetup s;
    return s;
}

Outcome quality_ordering() {
    Outcome o;
    OctantSetup& s = octants();
    const auto mfa = memory_source(fixed_ncp_encode(s.volume, s.eight, 30, 2));
    const auto ds_ghost = memory_source(build_ds_store(s.volume, s.eight, 1));
    const auto ds_plain = memory_source(build_ds_store(s.volume, s.eight, 0));
    const std::size_t mb = mfa->manifest().total_bytes();
    const std::size_t gb = ds_ghost->manifest().total_bytes(), pb = ds_plain->manifest().total_bytes();
    o.check(mb <= gb && mb <= pb, fmt("storage MFA %zu B <= DS %zu B (ghost) and %zu B (no ghost)", mb, gb, pb));

    const PointOfView pov = PointOfView::look_at({2.0, 1.5, 2.5}, {0.0, 0.0, 0.0});
    int better = 0;
    std::string rows;
    for (double sd : {0.02, 0.01, 0.005, 0.0025}) {
        RenderParams p;
        p.width = p.height = 256;
        p.sample_distance = sd;
        const Frame truth = render_ground_truth(pov, s.field, s.bounds, s.tf, p);
        const Frame fm = render_source(pov, *mfa, s.tf, p);
        const Frame fg = render_source(pov, *ds_ghost, s.tf, p);
        const Frame fp = render_source(pov, *ds_plain, s.tf, p);
        const double pm = image_psnr(truth, fm), pg = image_psnr(truth, fg), pp = image_psnr(truth, fp);
        const double sm = image_ssim(truth, fm), sg = image_ssim(truth, fg), sp = image_ssim(truth, fp);
        better += pm > pg && pm > pp && sm > sg && sm > sp;
        rows += fmt(" sd %g: MFA %.1f dB/%.4f, DS %.1f dB/%.4f, DS-noghost %.1f dB/%.4f;", sd, pm, sm, pg, sg, pp, sp);
    }
    o.check(better >= 3, fmt("MFA strictly better PSNR and SSIM at %d/4 sample distances (need 3)", better));
    o.detail += rows;
    return o;
}

// Max per-channel difference over pixels within one of the central row or column.
int boundary_deviation(const Frame& a, const Frame& b) {
    int worst = 0;
    const int cx = a.width / 2, cy = a.height / 2;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            if (std::abs(x - cx) > 1 && std::abs(y - cy) > 1) continue;
            for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(a.pixel(x, y)[c] - b.pixel(x, y)[c]));
        }
    }
    return worst;
}

Outcome boundary_artifact() {
    Outcome o;
    OctantSetup& s = octants();
    const PointOfView pov = PointOfView::look_at({0.0, 0.0, 3.0}, {0.0, 0.0, 0.0});
    RenderParams p;
    p.width = p.height = 255;
    p.sample_distance = 0.005;
    const auto dev = [&](const BlockSource& eight, const BlockSource& one) {
        return boundary_deviation(render_source(pov, eight, s.tf, p), render_source(pov, one, s.tf, p));
    };
    const int mfa_dev = dev(*memory_source(fixed_ncp_encode(s.volume, s.eight, 30, 2)),
                            *memory_source(fixed_ncp_encode(s.volume, s.one, 59, 2)));
    const DsStore plain8 = build_ds_store(s.volume, s.eight, 0), plain1 = build_ds_store(s.volume, s.one, 0);
    const DsStore ghost8 = build_ds_store(s.volume, s.eight, 1), ghost1 = build_ds_store(s.volume, s.one, 1);
    const int ds_dev = dev(*memory_source(plain8), *memory_source(plain1));
    const int ghost_dev = dev(*memory_source(ghost8), *memory_source(ghost1));
    o.check(mfa_dev < ds_dev, fmt("boundary pixel deviation MFA %d < DS without ghost %d", mfa_dev, ds_dev));

    // Value and gradient at grid samples on the internal faces, from every block
    // touching the sample, against the unpartitioned block.
    const DsBlock& whole = ghost1.blocks.begin()->second;
    double worst = 0.0;
    std::size_t points = 0;
    for (int axis = 0; axis < 3; ++axis) {
        for (int j = 0; j < 61; ++j) {
            for (int k = 0; k < 61; ++k) {
                Vec3 p3{};
                p3[axis] = 0.0;
                p3[(axis + 1) % 3] = -1.0 + 2.0 * j / 60.0;
                p3[(axis + 2) % 3] = -1.0 + 2.0 * k / 60.0;
                double v0 = 0.0;
                Vec3 g0{};
                whole.evaluate(p3, v0, g0);
                for (const auto& [addr, blk] : ghost8.blocks) {
                    const Box3& e = blk.extent();
                    bool inside = true;
                    for (int c = 0; c < 3; ++c) inside = inside && p3[c] >= e.min[c] - 1e-12 && p3[c] <= e.max[c] + 1e-12;
                    if (!inside) continue;
                    double v = 0.0;
                    Vec3 g{};
                    blk.evaluate(p3, v, g);
                    worst = std::max(worst, std::abs(v - v0));
                    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(g[c] - g0[c]));
                    ++points;
                }
            }
        }
    }
    o.check(worst < 1e-6, fmt("DS with ghost: max value/gradient deviation %.2e < 1e-6 over %zu boundary evaluations "
                              "(pixel deviation %d)",
                              worst, points, ghost_dev));
    return o;
}

Outcome ghost_overhead_check() {
    Outcome o;
    const double g = ghost_overhead(16, 4);
    o.check(g == 1.953125, fmt("ghost_overhead(16,4) = %.9g, expected exactly 1.953125", g));

    const OctantSetup& s = octants();
    bool all_match = true;
    std::string rows;
    for (int ghost : {0, 1}) {
        for (const auto& spec : {s.eight, HierarchySpec{2, {16, 16, 16}, 2}}) {
            const DsStore store = build_ds_store(s.volume, spec, ghost);
            for (int lod = 1; lod <= spec.levels; ++lod) {
                const int m = spec.blocks_per_axis(lod);
                const int stride = (61 - 1) / (m * (spec.micro_dims[0] - 1));
                std::size_t bytes = 0, blocks = 0;
                for (const auto& a : store.manifest.level_addresses(lod)) {
                    bytes += store.manifest.at(a).bytes;
                    ++blocks;
                }
                // Per-axis samples at the level's own stride, plus the block headers.
                const double predicted =
                    predicted_ds_samples(60 / stride, m, ghost) * 4.0 + static_cast<double>(blocks * kDsHeaderBytes);
                all_match = all_match && static_cast<double>(bytes) == predicted;
                rows += fmt(" ghost %d m %d: %zu B vs %.0f B;", ghost, m, bytes, predicted);
            }
        }
    }
    o.check(all_match, "DS level bytes equal the prediction");
    o.detail += rows;
    return o;
}

// Reference LRU: a list, front = least recent.
struct ReferenceLru {
    std::size_t capacity;
    std::list<int> order;
    std::vector<int> evicted;

    bool access(int key) {
        const auto it = std::find(order.begin(), order.end(), key);
        if (it != order.end()) {
            order.splice(order.end(), order, it);
            return true;
        }
        if (order.size() == capacity) {
            evicted.push_back(order.front());
            order.pop_front();
        }
        order.push_back(key);
        return false;
    }
};

Outcome cache_semantics() {
    Outcome o;
    BigStore& s = big_store();
    const auto pov = PointOfView::look_at({0.3, 0.2, 1.2}, {0.0, 0.0, 0.0});
    const std::size_t ws = select_visible(pov, s.source->manifest()).size();

    bool threw = false;
    try {
        ModelCache small(ws - 1);
        cache_frame(pov, *s.source, small);
    } catch (const CapacityError&) {
        threw = true;
    }
    o.check(threw, fmt("capacity %zu < working set %zu raises CapacityError", ws - 1, ws));

    ModelCache exact(ws);
    const CachedFrame first = cache_frame(pov, *s.source, exact);
    const CachedFrame second = cache_frame(pov, *s.source, exact);
    o.check(first.misses == ws && second.misses == 0,
            fmt("capacity = working set %zu: first frame %llu misses, repeat %llu misses", ws,
                static_cast<unsigned long long>(first.misses), static_cast<unsigned long long>(second.misses)));

    bool equivalent = true;
    for (std::size_t cap : {1u, 7u, 16u}) {
        ModelCache cache(cap, true);
        ReferenceLru ref{cap, {}, {}};
        std::mt19937 rng(static_cast<unsigned>(cap));
        std::uniform_int_distribution<int> key(0, 24);
        auto block = std::make_shared<const DsBlock>();
        for (int i = 0; i < 10000; ++i) {
            const int k = key(rng);
            const BlockAddress a{1, {k, 0, 0}};
            const bool hit = cache.query(a) != nullptr;
            if (!hit) cache.insert(a, block);
            equivalent = equivalent && hit == ref.access(k);
        }
        std::vector<int> got;
        for (const auto& a : cache.eviction_log()) got.push_back(a.ijk[0]);
        std::vector<int> order;
        for (const auto& a : cache.recency_order()) order.push_back(a.ijk[0]);
        equivalent = equivalent && got == ref.evicted && order == std::vector<int>(ref.order.begin(), ref.order.end());
    }
    o.check(equivalent, "hits, eviction order and final recency match a reference LRU over 10,000 accesses "
                        "(capacities 1, 7, 16)");
    return o;
}

struct PrefetchRun {
    ReplaySummary summary;
    std::vector<FrameTiming> timings;
    std::size_t loads_after_done = 0;
    std::size_t hooked_loads = 0;
};

PrefetchRun run_orbit(PrefetchMode mode, std::size_t capacity, const std::vector<PointOfView>& trajectory) {
    BigStore& s = big_store();
    const auto [vmin, vmax] = s.volume.value_range();
    RuntimeConfig config;
    config.cache_capacity = capacity;
    config.prefetch = mode;
    config.render.width = config.render.height = 64;
    config.render.sample_distance = 0.02;

    PrefetchRun run;
    std::mutex m;
    bool rendering_done = false;
    RuntimeObserver observer;
    observer.on_prefetch_load_start = [&](const BlockAddress&) {
        std::lock_guard lock(m);
        ++run.hooked_loads;
        run.loads_after_done += rendering_done;
    };
    observer.on_render_done = [&] {
        std::lock_guard lock(m);
        rendering_done = true;
    };
    s.source->set_io_delay(std::chrono::microseconds(500));
    run.timings = replay(trajectory, s.source, preset_transfer_function("bands", vmin, vmax), config,
                         [&](const RuntimeSession::Step&) {
                             std::lock_guard lock(m);
                             rendering_done = false;
                         },
                         observer);
    s.source->set_io_delay(std::chrono::microseconds(0));
    run.summary = summarize(run.timings);
    return run;
}

std::vector<PrefetchRun>& orbit_runs() {
    static std::vector<PrefetchRun> runs = [] {
        const auto trajectory = orbit_trajectory(100, 1.4, 20.0);
        std::vector<PrefetchRun> r;
        r.push_back(run_orbit(PrefetchMode::off, 27, trajectory));
        r.push_back(run_orbit(PrefetchMode::linear, 27, trajectory));
        return r;
    }();
    return runs;
}

Outcome prefetch_benefit() {
    Outcome o;
    BigStore& s = big_store();
    const auto trajectory = orbit_trajectory(100, 1.4, 20.0);
    std::set<BlockAddress> all;
    std::size_t peak = 0;
    for (const auto& pov : trajectory) {
        const auto v = select_visible(pov, s.source->manifest());
        peak = std::max(peak, v.size());
        all.insert(v.begin(), v.end());
    }
    const std::size_t capacity = 27;
    o.check(capacity >= peak && capacity < all.size(),
            fmt("capacity %zu: peak frame %zu, union working set %zu", capacity, peak, all.size()));
    const auto& runs = orbit_runs();
    const auto& off = runs[0].summary;
    const auto& lin = runs[1].summary;
    o.check(lin.miss_rate < off.miss_rate,
            fmt("miss rate linear %.4f < off %.4f (%llu prefetch loads)", lin.miss_rate, off.miss_rate,
                static_cast<unsigned long long>(lin.prefetch_loads)));
    o.check(runs[1].loads_after_done == 0 && runs[1].hooked_loads > 0,
            fmt("%zu prefetch loads observed, %zu started after rendering_done", runs[1].hooked_loads,
                runs[1].loads_after_done));
    return o;
}

Outcome latency_identity() {
    Outcome o;
    std::size_t frames = 0, ok = 0;
    double worst = 0.0;
    for (const auto& run : orbit_runs()) {
        for (const auto& t : run.timings) {
            const double gap = std::abs(t.input_latency_ms - (t.caching_ms + t.rendering_ms));
            worst = std::max(worst, gap);
            ++frames;
            ok += gap <= 1.0;
        }
    }
    o.check(frames > 0 && ok == frames,
            fmt("%zu/%zu frames satisfy latency = caching + rendering within 1 ms (worst %.3g ms)", ok, frames, worst));
    return o;
}

Outcome early_termination() {
    Outcome o;
    BigStore& s = big_store();
    const auto [vmin, vmax] = s.volume.value_range();
    // Dense enough that most rays reach the threshold.
    const TransferFunction tf({{vmin, 0.9, 0.3, 0.1}, {vmax, 0.2, 0.6, 0.9}}, {{vmin, 0.3}, {vmax, 0.6}}, vmin, vmax);
    int worst = 0;
    std::uint64_t terminated = 0;
    for (const auto& pov : {PointOfView::look_at({2.0, 1.5, 2.5}, {0, 0, 0}), PointOfView::look_at({0.3, 0.2, 1.2}, {0, 0, 0})}) {
        RenderParams p;
        p.width = p.height = 128;
        p.sample_distance = 0.01;
        const auto resident = resident_for(pov, *s.source);
        RenderStats st;
        const Frame a = render(pov, resident, s.source->manifest(), tf, p, &st);
        terminated += st.terminated;
        p.o_max = 1.0;
        const Frame b = render(pov, resident, s.source->manifest(), tf, p);
        for (std::size_t i = 0; i < a.rgba.size(); ++i) {
            if (i % 4 == 3) continue;
            worst = std::max(worst, std::abs(a.rgba[i] - b.rgba[i]));
        }
    }
    const double bound = 0.01 * 255.0 + 1.0;
    o.check(worst <= bound && terminated > 0,
            fmt("max channel difference %d <= %.2f (8-bit units); %llu rays terminated early", worst, bound,
                static_cast<unsigned long long>(terminated)));
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string filter = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, Outcome (*)()>> criteria = {
        {"format-exactness", format_exactness},
        {"polynomial-reproduction", polynomial_reproduction},
        {"adaptive-equals-exhaustive", adaptive_equals_exhaustive},
        {"compression", compression},
        {"quality-ordering", quality_ordering},
        {"boundary-artifact", boundary_artifact},
        {"ghost-overhead", ghost_overhead_check},
        {"cache-semantics", cache_semantics},
        {"prefetch-benefit", prefetch_benefit},
        {"latency-identity", latency_identity},
        {"early-termination", early_termination},
    };
    int failed = 0, run = 0;
    for (const auto& [name, fn] : criteria) {
        if (!filter.empty() && name.find(filter) == std::string::npos) continue;
        ++run;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", run - failed, run);
    return failed == 0 ? 0 : 1;
}
