#include "microvol/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include "microvol/errors.hpp"

namespace microvol {

double error_rmse(const ScalarVolume& block, const MicroModel& model) {
    const auto decoded = decode_grid(model, block.dims());
    const auto samples = block.samples();
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = decoded[i] - samples[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(samples.size()));
}

namespace {

int max_ncp(const ScalarVolume& block) {
    const Index3& d = block.dims();
    return std::min({d[0], d[1], d[2]});
}

SearchResult exhaustive_search(const ScalarVolume& block, double bound, int degree, int lod) {
    SearchResult r;
    const int ncp_min = degree + 1;
    const int ncp_max = max_ncp(block);
    std::optional<MicroModel> best;
    std::optional<MicroModel> largest;
    for (int ncp = ncp_max; ncp >= ncp_min; --ncp) {
        MicroModel m = fit(block, ncp, degree, lod);
        const double err = error_rmse(block, m);
        r.profile[ncp] = err;
        if (err < bound) {
            r.ncp_star = ncp;
            best = std::move(m);
        } else if (ncp == ncp_max) {
            largest = std::move(m);
        }
    }
    if (best) {
        r.model = std::move(*best);
    } else {
        r.ncp_star = ncp_max;
        r.unmeetable = true;
        r.model = std::move(*largest);
    }
    r.complex = r.ncp_star > ncp_min;
    return r;
}

SearchResult bisection_search(const ScalarVolume& block, double bound, int degree, int lod) {
    SearchResult r;
    const int ncp_min = degree + 1;
    const int ncp_max = max_ncp(block);
    auto trial = [&](int ncp) {
        MicroModel m = fit(block, ncp, degree, lod);
        r.profile[ncp] = error_rmse(block, m);
        return std::make_pair(r.profile[ncp] < bound, std::move(m));
    };
    auto [ok_max, model_max] = trial(ncp_max);
    if (!ok_max) {
        r.ncp_star = ncp_max;
        r.unmeetable = true;
        r.complex = true;
        r.model = std::move(model_max);
        return r;
    }
    int lo = ncp_min;
    int hi = ncp_max;
    MicroModel best = std::move(model_max);
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        auto [ok, m] = trial(mid);
        if (ok) {
            hi = mid;
            best = std::move(m);
        } else {
            lo = mid + 1;
        }
    }
    r.ncp_star = hi;
    r.model = std::move(best);
    r.complex = r.ncp_star > ncp_min;
    return r;
}

enum class Mode { cross_level, full, fixed };

struct LevelTask {
    BlockAddress address;
    bool search = false;
};

EncodedBlock encode_block(const ScalarVolume& volume, const HierarchySpec& spec, const LevelTask& task,
                          const EncodeOptions& opts, int fixed_ncp) {
    const ScalarVolume block =
        extract_micro_block(volume, task.address, spec.blocks_per_axis(task.address.lod), spec.micro_dims);
    EncodedBlock out;
    if (task.search) {
        SearchResult r = in_level_search(block, opts.error_bound, opts.degree, task.address.lod, opts.assume_monotone);
        out.rmse = r.profile.at(r.ncp_star);
        out.profile = std::move(r.profile);
        out.model = std::move(r.model);
        out.searched = true;
        out.complex = r.complex;
        out.unmeetable = r.unmeetable;
    } else {
        const int ncp = fixed_ncp > 0 ? fixed_ncp : opts.degree + 1;
        out.model = fit(block, ncp, opts.degree, task.address.lod);
        out.rmse = error_rmse(block, out.model);
    }
    return out;
}

EncodeResult encode_levels(const ScalarVolume& volume, const HierarchySpec& spec, const EncodeOptions& opts,
                           Mode mode, int fixed_ncp, bool parallel) {
    EncodeResult result;
    result.manifest = build_hierarchy(volume, spec);
    result.manifest.degree = opts.degree;
    result.manifest.error_bound = mode == Mode::fixed ? 0.0 : opts.error_bound;
    if (mode == Mode::fixed && fixed_ncp <= 0) fixed_ncp = std::min({spec.micro_dims[0], spec.micro_dims[1], spec.micro_dims[2]});

    std::set<BlockAddress> complex_parents;
    for (int lod = spec.levels; lod >= 1; --lod) {
        const auto addresses = result.manifest.level_addresses(lod);
        std::vector<LevelTask> tasks;
        tasks.reserve(addresses.size());
        for (const auto& a : addresses) {
            bool search = false;
            switch (mode) {
                case Mode::full: search = true; break;
                case Mode::fixed: search = false; break;
                case Mode::cross_level:
                    search = lod == spec.levels || complex_parents.contains(result.manifest.parent(a));
                    break;
            }
            tasks.push_back({a, search});
        }

        std::vector<std::optional<EncodedBlock>> slots(tasks.size());
        std::vector<std::string> errors(tasks.size());
        const auto n = static_cast<std::ptrdiff_t>(tasks.size());
        auto run = [&](std::ptrdiff_t i) {
            try {
                slots[static_cast<std::size_t>(i)] =
                    encode_block(volume, spec, tasks[static_cast<std::size_t>(i)], opts, fixed_ncp);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        };
        if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
            for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
        } else {
            for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
        }

        // Deterministic reduction in address order; the level barrier is here.
        complex_parents.clear();
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const BlockAddress& a = tasks[i].address;
            if (!errors[i].empty()) throw NumericError("encoding block " + a.to_string() + ": " + errors[i]);
            EncodedBlock& b = *slots[i];
            ManifestEntry& e = result.manifest.entries.at(a);
            e.path = block_path(a, ".mfa");
            e.ncp = b.model.ncp();
            e.complex = b.complex;
            e.bytes = b.model.serialized_size();
            result.fits += b.searched ? b.profile.size() : 1;
            if (b.searched) ++result.searched_blocks;
            if (b.complex) complex_parents.insert(a);
            if (b.unmeetable) {
                result.warnings.push_back("block " + a.to_string() + ": no NCP meets RMSE bound " +
                                          std::to_string(opts.error_bound) + " (best " + std::to_string(b.rmse) +
                                          "); using NCP " + std::to_string(b.model.ncp()));
            }
            result.blocks.emplace(a, std::move(b));
        }
    }
    result.total_blocks = result.blocks.size();
    return result;
}

}  // namespace

SearchResult in_level_search(const ScalarVolume& block, double error_bound, int degree, int lod,
                             bool assume_monotone) {
    if (!(error_bound > 0.0)) throw DomainError("error bound must be > 0");
    if (max_ncp(block) < degree + 1) throw DomainError("micro-block is smaller than degree + 1");
    return assume_monotone ? bisection_search(block, error_bound, degree, lod)
                           : exhaustive_search(block, error_bound, degree, lod);
}

EncodeResult cross_level_encode(const ScalarVolume& volume, const HierarchySpec& spec, const EncodeOptions& opts) {
    return encode_levels(volume, spec, opts, Mode::cross_level, 0, true);
}

EncodeResult cross_level_encode_serial(const ScalarVolume& volume, const HierarchySpec& spec,
                                       const EncodeOptions& opts) {
    return encode_levels(volume, spec, opts, Mode::cross_level, 0, false);
}

EncodeResult full_in_level_encode(const ScalarVolume& volume, const HierarchySpec& spec, const EncodeOptions& opts) {
    return encode_levels(volume, spec, opts, Mode::full, 0, true);
}

EncodeResult fixed_ncp_encode(const ScalarVolume& volume, const HierarchySpec& spec, int ncp, int degree) {
    EncodeOptions opts;
    opts.degree = degree;
    return encode_levels(volume, spec, opts, Mode::fixed, ncp, true);
}

void write_mfa_store(const std::filesystem::path& root, const EncodeResult& result) {
    std::filesystem::create_directories(root);
    for (const auto& [a, b] : result.blocks) {
        const auto& entry = result.manifest.at(a);
        const auto path = root / entry.path;
        std::filesystem::create_directories(path.parent_path());
        const auto bytes = serialize(b.model);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    save_manifest(root / "manifest.json", result.manifest);
}

double compression_ratio(const LODManifest& manifest, std::size_t raw_bytes) {
    const std::size_t total = manifest.total_bytes();
    if (total == 0) throw DomainError("manifest has no encoded bytes");
    return static_cast<double>(raw_bytes) / static_cast<double>(total);
}

}  // namespace microvol
