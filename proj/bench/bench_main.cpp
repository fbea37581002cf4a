// Serial references against the OpenMP kernels. Speedup needs more than one core.

#include <benchmark/benchmark.h>

#include "microvol/block_source.hpp"
#include "microvol/encoder.hpp"
#include "microvol/render.hpp"

using namespace microvol;

namespace {

struct Scene {
    ScalarVolume volume = sample_grid(marschner_lobb(), {65, 65, 65}, unit_cube());
    HierarchySpec spec{2, {17, 17, 17}, 2};
    std::shared_ptr<MemoryBlockSource> source = memory_source(fixed_ncp_encode(volume, spec, 9, 2));
    TransferFunction tf = preset_transfer_function("bands", volume.value_range().first, volume.value_range().second);
    PointOfView pov = PointOfView::look_at({2.0, 1.5, 2.5}, {0.0, 0.0, 0.0});
    std::vector<ResidentBlock> resident;

    Scene() {
        for (const auto& a : select_visible(pov, source->manifest())) resident.push_back({a, source->load(a)});
    }
};

const Scene& scene() {
    static const Scene s;
    return s;
}

template <bool Parallel>
void BM_Render(benchmark::State& state) {
    const Scene& s = scene();
    RenderParams p;
    p.width = p.height = static_cast<int>(state.range(0));
    p.sample_distance = 0.005;
    for (auto _ : state) {
        Frame f = Parallel ? render(s.pov, s.resident, s.source->manifest(), s.tf, p)
                           : render_serial(s.pov, s.resident, s.source->manifest(), s.tf, p);
        benchmark::DoNotOptimize(f.rgba.data());
    }
    state.SetItemsProcessed(state.iterations() * p.width * p.height);
}

template <bool Parallel>
void BM_Encode(benchmark::State& state) {
    const Scene& s = scene();
    const EncodeOptions opts{1e-3, 2, false};
    for (auto _ : state) {
        EncodeResult r = Parallel ? cross_level_encode(s.volume, s.spec, opts) : cross_level_encode_serial(s.volume, s.spec, opts);
        benchmark::DoNotOptimize(r.searched_blocks);
    }
}

}  // namespace

BENCHMARK(BM_Render<false>)->Name("render/serial")->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Render<true>)->Name("render/openmp")->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Encode<false>)->Name("encode/serial")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_Encode<true>)->Name("encode/openmp")->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
