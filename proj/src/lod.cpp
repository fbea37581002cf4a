#include "microvol/lod.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"

namespace microvol {

std::string BlockAddress::to_string() const {
    std::ostringstream os;
    os << "L" << lod << "(" << ijk[0] << "," << ijk[1] << "," << ijk[2] << ")";
    return os.str();
}

std::vector<BlockAddress> LODManifest::level_addresses(int lod) const {
    std::vector<BlockAddress> out;
    const int b = blocks_per_axis(lod);
    out.reserve(static_cast<std::size_t>(b) * b * b);
    for (int k = 0; k < b; ++k) {
        for (int j = 0; j < b; ++j) {
            for (int i = 0; i < b; ++i) out.push_back({lod, {i, j, k}});
        }
    }
    return out;
}

std::vector<BlockAddress> LODManifest::children(const BlockAddress& a) const {
    std::vector<BlockAddress> out;
    if (a.lod <= 1) return out;
    out.reserve(8);
    for (int dk = 0; dk < 2; ++dk) {
        for (int dj = 0; dj < 2; ++dj) {
            for (int di = 0; di < 2; ++di) {
                out.push_back({a.lod - 1, {2 * a.ijk[0] + di, 2 * a.ijk[1] + dj, 2 * a.ijk[2] + dk}});
            }
        }
    }
    return out;
}

BlockAddress LODManifest::parent(const BlockAddress& a) const {
    return {a.lod + 1, {a.ijk[0] / 2, a.ijk[1] / 2, a.ijk[2] / 2}};
}

std::size_t LODManifest::total_bytes() const {
    std::size_t total = 0;
    for (const auto& [addr, e] : entries) total += e.bytes;
    return total;
}

const ManifestEntry& LODManifest::at(const BlockAddress& a) const {
    const auto it = entries.find(a);
    if (it == entries.end()) throw FormatError("manifest has no block " + a.to_string());
    return it->second;
}

namespace {

std::string dims_str(const Index3& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

Box3 block_extent(int blocks_per_axis, const Index3& ijk) {
    Box3 box;
    for (int ax = 0; ax < 3; ++ax) {
        box.min[ax] = -1.0 + 2.0 * ijk[ax] / blocks_per_axis;
        box.max[ax] = -1.0 + 2.0 * (ijk[ax] + 1) / blocks_per_axis;
    }
    return box;
}

Box3 block_extent(const HierarchySpec& spec, const BlockAddress& a) {
    return block_extent(spec.blocks_per_axis(a.lod), a.ijk);
}

Box3 block_extent(const LODManifest& manifest, const BlockAddress& a) {
    return block_extent(manifest.blocks_per_axis(a.lod), a.ijk);
}

Index3 level_stride(Index3 volume_dims, int blocks_per_axis, Index3 micro_dims) {
    Index3 stride{};
    for (int ax = 0; ax < 3; ++ax) {
        const int intervals = volume_dims[ax] - 1;
        const int micro = micro_dims[ax] - 1;
        if (blocks_per_axis < 1 || micro < 1 || intervals % blocks_per_axis != 0 ||
            (intervals / blocks_per_axis) % micro != 0) {
            throw PartitionError("dims " + dims_str(volume_dims) + " cannot be split into " +
                                 std::to_string(blocks_per_axis) + " blocks per axis of " + dims_str(micro_dims) +
                                 " samples with shared boundaries");
        }
        stride[ax] = intervals / blocks_per_axis / micro;
    }
    return stride;
}

Index3 padded_dims(Index3 volume_dims, const HierarchySpec& spec) {
    Index3 out{};
    for (int ax = 0; ax < 3; ++ax) {
        const int unit = spec.finest_blocks_per_axis() * (spec.micro_dims[ax] - 1);
        const int intervals = volume_dims[ax] - 1;
        // A multiple of the finest unit also satisfies every coarser level.
        out[ax] = ((intervals + unit - 1) / unit) * unit + 1;
        if (out[ax] < unit + 1) out[ax] = unit + 1;
    }
    return out;
}

void validate_hierarchy(Index3 volume_dims, const HierarchySpec& spec) {
    if (spec.levels < 1) throw PartitionError("hierarchy needs at least one level");
    if (spec.coarsest_blocks < 1) throw PartitionError("coarsest level needs at least one block per axis");
    try {
        for (int lod = 1; lod <= spec.levels; ++lod) {
            (void)level_stride(volume_dims, spec.blocks_per_axis(lod), spec.micro_dims);
        }
    } catch (const PartitionError& e) {
        const Index3 pad = padded_dims(volume_dims, spec);
        const Index3 unit{spec.finest_blocks_per_axis() * (spec.micro_dims[0] - 1),
                          spec.finest_blocks_per_axis() * (spec.micro_dims[1] - 1),
                          spec.finest_blocks_per_axis() * (spec.micro_dims[2] - 1)};
        throw PartitionError(std::string(e.what()) + "; valid dims per axis are k*" + std::to_string(unit[0]) +
                             "+1 (nearest: " + dims_str(pad) + ", reachable by edge-replication padding)");
    }
}

ScalarVolume extract_micro_block(const ScalarVolume& volume, const BlockAddress& a, int blocks_per_axis,
                                 Index3 micro_dims) {
    const Index3 stride = level_stride(volume.dims(), blocks_per_axis, micro_dims);
    Index3 origin{};
    for (int ax = 0; ax < 3; ++ax) {
        const int span = (volume.dims()[ax] - 1) / blocks_per_axis;
        origin[ax] = a.ijk[ax] * span;
    }
    std::vector<float> samples(static_cast<std::size_t>(micro_dims[0]) * micro_dims[1] * micro_dims[2]);
    std::size_t n = 0;
    for (int k = 0; k < micro_dims[2]; ++k) {
        for (int j = 0; j < micro_dims[1]; ++j) {
            for (int i = 0; i < micro_dims[0]; ++i) {
                samples[n++] =
                    volume.at(origin[0] + i * stride[0], origin[1] + j * stride[1], origin[2] + k * stride[2]);
            }
        }
    }
    return ScalarVolume(micro_dims, block_extent(blocks_per_axis, a.ijk), std::move(samples));
}

std::vector<std::pair<BlockAddress, ScalarVolume>> partition_level(const ScalarVolume& volume, int lod,
                                                                   int blocks_per_axis, Index3 micro_dims) {
    (void)level_stride(volume.dims(), blocks_per_axis, micro_dims);
    const std::size_t count = static_cast<std::size_t>(blocks_per_axis) * blocks_per_axis * blocks_per_axis;
    std::vector<std::pair<BlockAddress, ScalarVolume>> out(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(count); ++n) {
        const int b = blocks_per_axis;
        const BlockAddress a{lod, {static_cast<int>(n % b), static_cast<int>((n / b) % b), static_cast<int>(n / (b * b))}};
        out[static_cast<std::size_t>(n)] = {a, extract_micro_block(volume, a, blocks_per_axis, micro_dims)};
    }
    return out;
}

LODManifest build_hierarchy(const ScalarVolume& volume, const HierarchySpec& spec) {
    validate_hierarchy(volume.dims(), spec);
    LODManifest m;
    m.levels = spec.levels;
    m.micro_dims = spec.micro_dims;
    m.finest_blocks_per_axis = spec.finest_blocks_per_axis();
    m.coarsest_blocks_per_axis = spec.coarsest_blocks;
    m.volume_dims = volume.dims();
    m.volume_bounds = volume.bounds();
    const auto [lo, hi] = volume.value_range();
    m.value_range = {lo, hi};
    for (int lod = spec.levels; lod >= 1; --lod) {
        for (const auto& a : m.level_addresses(lod)) {
            ManifestEntry e;
            e.extent = block_extent(spec, a);
            m.entries.emplace(a, e);
        }
    }
    return m;
}

std::string block_path(const BlockAddress& a, const std::string& extension) {
    return "level-" + std::to_string(a.lod) + "/" + std::to_string(a.ijk[0]) + "_" + std::to_string(a.ijk[1]) + "_" +
           std::to_string(a.ijk[2]) + extension;
}

namespace {

nlohmann::json box_json(const Box3& b) {
    return {{"min", {b.min.x, b.min.y, b.min.z}}, {"max", {b.max.x, b.max.y, b.max.z}}};
}

Box3 box_from(const nlohmann::json& j) {
    const auto lo = j.at("min").get<std::array<double, 3>>();
    const auto hi = j.at("max").get<std::array<double, 3>>();
    return {{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}};
}

}  // namespace

void save_manifest(const std::filesystem::path& path, const LODManifest& m) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& [a, e] : m.entries) {
        blocks.push_back({{"lod", a.lod},
                          {"ijk", a.ijk},
                          {"path", e.path},
                          {"ncp", e.ncp},
                          {"extent", box_json(e.extent)},
                          {"complex", e.complex},
                          {"bytes", e.bytes}});
    }
    const nlohmann::json j = {{"format", "microvol-manifest"},
                              {"version", 1},
                              {"backend", m.backend},
                              {"levels", m.levels},
                              {"micro_dims", m.micro_dims},
                              {"finest_blocks_per_axis", m.finest_blocks_per_axis},
                              {"coarsest_blocks_per_axis", m.coarsest_blocks_per_axis},
                              {"degree", m.degree},
                              {"ghost", m.ghost},
                              {"volume_dims", m.volume_dims},
                              {"volume_bounds", box_json(m.volume_bounds)},
                              {"value_range", {m.value_range.first, m.value_range.second}},
                              {"error_bound", m.error_bound},
                              {"blocks", blocks}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(1) << '\n';
}

LODManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        LODManifest m;
        m.backend = j.at("backend").get<std::string>();
        m.levels = j.at("levels").get<int>();
        m.micro_dims = j.at("micro_dims").get<Index3>();
        m.finest_blocks_per_axis = j.at("finest_blocks_per_axis").get<int>();
        m.coarsest_blocks_per_axis = j.at("coarsest_blocks_per_axis").get<int>();
        m.degree = j.value("degree", 0);
        m.ghost = j.value("ghost", 0);
        m.volume_dims = j.at("volume_dims").get<Index3>();
        m.volume_bounds = box_from(j.at("volume_bounds"));
        const auto vr = j.at("value_range").get<std::array<double, 2>>();
        m.value_range = {vr[0], vr[1]};
        m.error_bound = j.value("error_bound", 0.0);
        for (const auto& b : j.at("blocks")) {
            BlockAddress a{b.at("lod").get<int>(), b.at("ijk").get<Index3>()};
            ManifestEntry e;
            e.path = b.at("path").get<std::string>();
            e.ncp = b.at("ncp").get<int>();
            e.extent = box_from(b.at("extent"));
            e.complex = b.at("complex").get<bool>();
            e.bytes = b.at("bytes").get<std::size_t>();
            m.entries.emplace(a, std::move(e));
        }
        if (m.levels < 1 || m.coarsest_blocks_per_axis < 1 ||
            m.finest_blocks_per_axis != m.blocks_per_axis(1)) {
            throw FormatError("inconsistent level layout");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace microvol
