#include "microvol/ds_block.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "microvol/detail/little_endian.hpp"
#include "microvol/errors.hpp"

namespace microvol {

DsBlock::DsBlock(Index3 interior, int ghost, std::vector<float> samples, Box3 extent, int lod)
    : interior_(interior), ghost_(ghost), lod_(lod), extent_(extent), samples_(std::move(samples)) {
    if (ghost_ < 0 || ghost_ > 1) throw DomainError("DS ghost width must be 0 or 1");
    for (int a = 0; a < 3; ++a) {
        if (interior_[a] < 2) throw DomainError("DS block needs >= 2 samples per axis");
        padded_[a] = interior_[a] + 2 * ghost_;
    }
    if (extent_.degenerate()) throw DomainError("DS block extent is degenerate");
    if (samples_.size() != static_cast<std::size_t>(padded_[0]) * padded_[1] * padded_[2]) {
        throw DomainError("DS block sample count does not match its dims");
    }
}

Vec3 DsBlock::to_index(const Vec3& point) const {
    Vec3 idx;
    const Vec3 size = extent_.size();
    for (int a = 0; a < 3; ++a) {
        idx[a] = std::clamp((point[a] - extent_.min[a]) / size[a] * (interior_[a] - 1), 0.0,
                            static_cast<double>(interior_[a] - 1));
    }
    return idx;
}

Vec3 DsBlock::node_gradient(int i, int j, int k) const {
    const Index3 n{i, j, k};
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Index3 lo = n;
        Index3 hi = n;
        double span = 2.0;
        if (ghost_ > 0) {
            lo[a] -= 1;
            hi[a] += 1;
        } else {
            lo[a] = std::max(n[a] - 1, 0);
            hi[a] = std::min(n[a] + 1, interior_[a] - 1);
            span = hi[a] - lo[a];
        }
        g[a] = (at(hi[0], hi[1], hi[2]) - at(lo[0], lo[1], lo[2])) / span;
    }
    return g;
}

namespace {

struct Cell {
    Index3 base;
    Vec3 t;
};

Cell locate(const Vec3& idx, const Index3& interior) {
    Cell c;
    for (int a = 0; a < 3; ++a) {
        c.base[a] = std::min(static_cast<int>(std::floor(idx[a])), interior[a] - 2);
        c.t[a] = idx[a] - c.base[a];
    }
    return c;
}

}  // namespace

double DsBlock::value(const Vec3& point) const {
    const Cell c = locate(to_index(point), interior_);
    double v = 0.0;
    for (int dk = 0; dk < 2; ++dk) {
        const double wz = dk ? c.t.z : 1.0 - c.t.z;
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.t.y : 1.0 - c.t.y;
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.t.x : 1.0 - c.t.x;
                v += wx * wy * wz * at(c.base[0] + di, c.base[1] + dj, c.base[2] + dk);
            }
        }
    }
    return v;
}

void DsBlock::evaluate(const Vec3& point, double& value, Vec3& gradient) const {
    const Cell c = locate(to_index(point), interior_);
    double v = 0.0;
    Vec3 g;
    for (int dk = 0; dk < 2; ++dk) {
        const double wz = dk ? c.t.z : 1.0 - c.t.z;
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.t.y : 1.0 - c.t.y;
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.t.x : 1.0 - c.t.x;
                const double w = wx * wy * wz;
                const int i = c.base[0] + di;
                const int j = c.base[1] + dj;
                const int k = c.base[2] + dk;
                v += w * at(i, j, k);
                g = g + node_gradient(i, j, k) * w;
            }
        }
    }
    const Vec3 size = extent_.size();
    value = v;
    gradient = {g.x * (interior_[0] - 1) / size.x, g.y * (interior_[1] - 1) / size.y,
                g.z * (interior_[2] - 1) / size.z};
}

std::size_t DsBlock::storage_bytes() const { return kDsHeaderBytes + samples_.size() * 4; }

std::vector<std::uint8_t> serialize(const DsBlock& block) {
    std::vector<std::uint8_t> out;
    out.reserve(block.storage_bytes());
    for (int a = 0; a < 3; ++a) detail::put_u32(out, static_cast<std::uint32_t>(block.interior()[a]));
    detail::put_u32(out, static_cast<std::uint32_t>(block.ghost()));
    for (float v : block.samples()) detail::put_f32(out, v);
    return out;
}

DsBlock deserialize_ds(std::span<const std::uint8_t> bytes, Box3 extent, int lod) {
    if (bytes.size() < kDsHeaderBytes) throw FormatError("DS block shorter than its header");
    Index3 interior{};
    for (int a = 0; a < 3; ++a) interior[a] = static_cast<int>(detail::get_u32(bytes.data() + 4 * a));
    const int ghost = static_cast<int>(detail::get_u32(bytes.data() + 12));
    if (ghost > 1) throw FormatError("DS ghost width " + std::to_string(ghost) + " unsupported");
    std::size_t count = 1;
    for (int a = 0; a < 3; ++a) {
        if (interior[a] < 2 || interior[a] > 65536) throw FormatError("DS block dims out of range");
        count *= static_cast<std::size_t>(interior[a] + 2 * ghost);
    }
    if (bytes.size() != kDsHeaderBytes + 4 * count) {
        throw FormatError("DS block is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(kDsHeaderBytes + 4 * count));
    }
    std::vector<float> samples(count);
    for (std::size_t i = 0; i < count; ++i) {
        samples[i] = detail::get_f32(bytes.data() + kDsHeaderBytes + 4 * i);
        if (!std::isfinite(samples[i])) throw FormatError("non-finite DS sample");
    }
    return DsBlock(interior, ghost, std::move(samples), extent, lod);
}

DsBlock extract_ds_block(const ScalarVolume& volume, const BlockAddress& a, int blocks_per_axis, Index3 micro_dims,
                         int ghost) {
    const Index3 stride = level_stride(volume.dims(), blocks_per_axis, micro_dims);
    const Index3& dims = volume.dims();
    Index3 origin{};
    Index3 padded{};
    for (int ax = 0; ax < 3; ++ax) {
        origin[ax] = a.ijk[ax] * ((dims[ax] - 1) / blocks_per_axis);
        padded[ax] = micro_dims[ax] + 2 * ghost;
    }
    std::vector<float> samples(static_cast<std::size_t>(padded[0]) * padded[1] * padded[2]);
    std::size_t n = 0;
    for (int k = -ghost; k < micro_dims[2] + ghost; ++k) {
        const int z = std::clamp(origin[2] + k * stride[2], 0, dims[2] - 1);
        for (int j = -ghost; j < micro_dims[1] + ghost; ++j) {
            const int y = std::clamp(origin[1] + j * stride[1], 0, dims[1] - 1);
            for (int i = -ghost; i < micro_dims[0] + ghost; ++i) {
                const int x = std::clamp(origin[0] + i * stride[0], 0, dims[0] - 1);
                samples[n++] = volume.at(x, y, z);
            }
        }
    }
    return DsBlock(micro_dims, ghost, std::move(samples), block_extent(blocks_per_axis, a.ijk), a.lod);
}

DsStore build_ds_store(const ScalarVolume& volume, const HierarchySpec& spec, int ghost) {
    DsStore store;
    store.manifest = build_hierarchy(volume, spec);
    store.manifest.backend = "ds";
    store.manifest.ghost = ghost;
    for (int lod = spec.levels; lod >= 1; --lod) {
        const auto addresses = store.manifest.level_addresses(lod);
        std::vector<DsBlock> blocks(addresses.size());
        const int b = spec.blocks_per_axis(lod);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(addresses.size()); ++i) {
            blocks[static_cast<std::size_t>(i)] =
                extract_ds_block(volume, addresses[static_cast<std::size_t>(i)], b, spec.micro_dims, ghost);
        }
        for (std::size_t i = 0; i < addresses.size(); ++i) {
            ManifestEntry& e = store.manifest.entries.at(addresses[i]);
            e.path = block_path(addresses[i], ".dsb");
            e.bytes = blocks[i].storage_bytes();
            store.blocks.emplace(addresses[i], std::move(blocks[i]));
        }
    }
    return store;
}

void write_ds_store(const std::filesystem::path& root, const DsStore& store) {
    std::filesystem::create_directories(root);
    for (const auto& [a, block] : store.blocks) {
        const auto path = root / store.manifest.at(a).path;
        std::filesystem::create_directories(path.parent_path());
        const auto bytes = serialize(block);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    save_manifest(root / "manifest.json", store.manifest);
}

double predicted_ds_samples(int n, int m, int ghost) {
    const double per_axis = static_cast<double>(n) + static_cast<double>(m) * (1 + 2 * ghost);
    return per_axis * per_axis * per_axis;
}

}  // namespace microvol
