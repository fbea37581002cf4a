#include "microvol/volume.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "microvol/detail/little_endian.hpp"
#include "microvol/errors.hpp"

namespace microvol {

namespace {

std::size_t product(const Index3& d) {
    return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
}

std::string dims_str(const Index3& d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

}  // namespace

ScalarVolume::ScalarVolume(Index3 dims, Box3 bounds, std::vector<float> samples)
    : dims_(dims), bounds_(bounds), samples_(std::move(samples)) {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] < 2) throw DomainError("volume dims must be >= 2 per axis, got " + dims_str(dims_));
    }
    if (bounds_.degenerate()) throw DomainError("volume bounds are degenerate");
    if (samples_.size() != product(dims_)) {
        throw DomainError("sample count " + std::to_string(samples_.size()) + " does not match dims " +
                          dims_str(dims_));
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i])) {
            throw ValidationError("non-finite sample at linear index " + std::to_string(i));
        }
    }
}

Vec3 ScalarVolume::position(int i, int j, int k) const {
    const Vec3 size = bounds_.size();
    return {bounds_.min.x + size.x * i / (dims_[0] - 1), bounds_.min.y + size.y * j / (dims_[1] - 1),
            bounds_.min.z + size.z * k / (dims_[2] - 1)};
}

std::pair<float, float> ScalarVolume::value_range() const {
    if (samples_.empty()) return {0.0f, 0.0f};
    const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
    return {*lo, *hi};
}

double ml_value(double x, double y, double z, double f_m, double alpha) {
    constexpr double pi = std::numbers::pi;
    const double r = std::sqrt(x * x + y * y);
    const double rho = std::cos(2.0 * pi * f_m * std::cos(pi * r / 2.0));
    return (1.0 - std::sin(pi * z / 2.0) + alpha * (1.0 + rho)) / (2.0 * (1.0 + alpha));
}

Vec3 ml_gradient(double x, double y, double z, double f_m, double alpha) {
    constexpr double pi = std::numbers::pi;
    const double norm = 2.0 * (1.0 + alpha);
    Vec3 g;
    g.z = -(pi / 2.0) * std::cos(pi * z / 2.0) / norm;
    const double r = std::sqrt(x * x + y * y);
    if (r > 0.0) {
        // d rho / dr = pi^2 f_M sin(pi r / 2) sin(2 pi f_M cos(pi r / 2))
        const double drho = pi * pi * f_m * std::sin(pi * r / 2.0) * std::sin(2.0 * pi * f_m * std::cos(pi * r / 2.0));
        const double radial = alpha * drho / norm;
        g.x = radial * x / r;
        g.y = radial * y / r;
    }
    return g;
}

AnalyticField marschner_lobb(double f_m, double alpha) {
    return {[=](const Vec3& p) { return ml_value(p.x, p.y, p.z, f_m, alpha); },
            [=](const Vec3& p) { return ml_gradient(p.x, p.y, p.z, f_m, alpha); }};
}

ScalarVolume sample_grid(const AnalyticField& field, Index3 dims, Box3 bounds, std::size_t budget_bytes) {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2) throw DomainError("sample_grid dims must be >= 2 per axis, got " + dims_str(dims));
    }
    if (bounds.degenerate()) throw DomainError("sample_grid bounds are degenerate");
    const double bytes = 4.0 * dims[0] * static_cast<double>(dims[1]) * dims[2];
    if (bytes > static_cast<double>(budget_bytes)) {
        throw CapacityError("grid " + dims_str(dims) + " needs " + std::to_string(bytes) +
                            " bytes, exceeding the memory budget of " + std::to_string(budget_bytes));
    }
    std::vector<float> samples(product(dims));
    const Vec3 size = bounds.size();
    const std::size_t plane = static_cast<std::size_t>(dims[0]) * dims[1];
#pragma omp parallel for schedule(static)
    for (int k = 0; k < dims[2]; ++k) {
        // Endpoints are assigned exactly so boundary samples sit on the bounds.
        const double z = k == dims[2] - 1 ? bounds.max.z : bounds.min.z + size.z * k / (dims[2] - 1);
        for (int j = 0; j < dims[1]; ++j) {
            const double y = j == dims[1] - 1 ? bounds.max.y : bounds.min.y + size.y * j / (dims[1] - 1);
            float* row = samples.data() + plane * k + static_cast<std::size_t>(dims[0]) * j;
            for (int i = 0; i < dims[0]; ++i) {
                const double x = i == dims[0] - 1 ? bounds.max.x : bounds.min.x + size.x * i / (dims[0] - 1);
                row[i] = static_cast<float>(field.value({x, y, z}));
            }
        }
    }
    return ScalarVolume(dims, bounds, std::move(samples));
}

double ghost_overhead(int n, int m) {
    if (n < 1) throw DomainError("ghost_overhead requires n >= 1");
    if (m < 1 || m > n) {
        throw DomainError("ghost_overhead requires 1 <= m <= n, got m=" + std::to_string(m) +
                          " n=" + std::to_string(n));
    }
    const double ratio = static_cast<double>(n + m) / n;
    return ratio * ratio * ratio;
}

void write_raw(const std::filesystem::path& path, const ScalarVolume& volume) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(volume.size() * 4);
    for (float v : volume.samples()) {
        if (!std::isfinite(v)) throw ValidationError("refusing to write non-finite sample");
        detail::put_f32(bytes, v);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

ScalarVolume read_raw(const std::filesystem::path& path, Index3 dims, Box3 bounds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t expected = product(dims) * 4;
    if (bytes.size() != expected) {
        throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected) + " for dims " + dims_str(dims));
    }
    std::vector<float> samples(product(dims));
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = detail::get_f32(bytes.data() + 4 * i);
    return ScalarVolume(dims, bounds, std::move(samples));
}

void write_sidecar(const std::filesystem::path& path, const ScalarVolume& volume) {
    const auto [lo, hi] = volume.value_range();
    const Box3& b = volume.bounds();
    nlohmann::json j = {
        {"dims", volume.dims()},
        {"bounds", {{"min", {b.min.x, b.min.y, b.min.z}}, {"max", {b.max.x, b.max.y, b.max.z}}}},
        {"value_range", {lo, hi}},
        {"dtype", "float32"},
        {"byte_order", "little"},
        {"layout", "x-fastest"},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

SidecarInfo read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        SidecarInfo info;
        info.dims = j.at("dims").get<Index3>();
        const auto lo = j.at("bounds").at("min").get<std::array<double, 3>>();
        const auto hi = j.at("bounds").at("max").get<std::array<double, 3>>();
        info.bounds = {{lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]}};
        if (j.contains("value_range")) {
            const auto vr = j.at("value_range").get<std::array<double, 2>>();
            info.value_range = {vr[0], vr[1]};
        }
        return info;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ScalarVolume pad_edge_replicate(const ScalarVolume& volume, Index3 new_dims) {
    const Index3& d = volume.dims();
    for (int a = 0; a < 3; ++a) {
        if (new_dims[a] < d[a]) throw DomainError("padding cannot shrink a volume");
    }
    std::vector<float> samples(product(new_dims));
    for (int k = 0; k < new_dims[2]; ++k) {
        for (int j = 0; j < new_dims[1]; ++j) {
            for (int i = 0; i < new_dims[0]; ++i) {
                const std::size_t dst = static_cast<std::size_t>(i) +
                                        static_cast<std::size_t>(new_dims[0]) *
                                            (static_cast<std::size_t>(j) + static_cast<std::size_t>(new_dims[1]) * k);
                samples[dst] = volume.at(std::min(i, d[0] - 1), std::min(j, d[1] - 1), std::min(k, d[2] - 1));
            }
        }
    }
    Box3 b = volume.bounds();
    const Vec3 size = b.size();
    for (int a = 0; a < 3; ++a) b.max[a] = b.min[a] + size[a] * (new_dims[a] - 1) / (d[a] - 1);
    return ScalarVolume(new_dims, b, std::move(samples));
}

}  // namespace microvol
