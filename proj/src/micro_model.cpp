#include "microvol/micro_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include <Eigen/Dense>

#include "microvol/bspline.hpp"
#include "microvol/detail/little_endian.hpp"
#include "microvol/errors.hpp"

namespace microvol {

namespace {

using Matrix = Eigen::MatrixXd;

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }
std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

/// Knots as stored (rounded through float32), so fitting and evaluation agree.
std::vector<double> stored_knots(int ncp, int degree) {
    return to_double(to_float(bspline::clamped_uniform_knots(ncp, degree)));
}

/// Left pseudo-inverse (ncp x n) of the collocation matrix for n uniform samples.
class FitOperatorCache {
public:
    std::shared_ptr<const Matrix> get(int n, int ncp, int degree) {
        const auto key = std::make_tuple(n, ncp, degree);
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        const auto knots = stored_knots(ncp, degree);
        const auto params = bspline::uniform_params(n);
        const auto dense = bspline::collocation_matrix(knots, degree, ncp, params);
        Matrix basis(n, ncp);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < ncp; ++c) basis(r, c) = dense[static_cast<std::size_t>(r) * ncp + c];
        }
        Eigen::HouseholderQR<Matrix> qr(basis);
        Matrix inverse = qr.solve(Matrix::Identity(n, n));
        if (!inverse.allFinite()) throw NumericError("singular least-squares system");
        auto op = std::make_shared<const Matrix>(std::move(inverse));
        std::lock_guard lock(mutex_);
        return cache_.emplace(key, std::move(op)).first->second;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, std::shared_ptr<const Matrix>> cache_;
};

FitOperatorCache& fit_operators() {
    static FitOperatorCache cache;
    return cache;
}

/// Applies `op` (m x n0) along the fastest axis of a (n0, n1, n2) grid and
/// rotates axes, producing (n1, n2, m). Three calls return to x-fastest order.
std::vector<double> apply_and_rotate(const std::vector<double>& data, Index3 dims, const Matrix& op) {
    const Eigen::Index n0 = dims[0];
    const Eigen::Index rest = static_cast<Eigen::Index>(dims[1]) * dims[2];
    Eigen::Map<const Matrix> in(data.data(), n0, rest);
    std::vector<double> out(static_cast<std::size_t>(rest * op.rows()));
    Eigen::Map<Matrix> result(out.data(), rest, op.rows());
    result.noalias() = in.transpose() * op.transpose();
    return out;
}

void clamp_param(Vec3& u, bool* clamped) {
    bool outside = false;
    for (int a = 0; a < 3; ++a) {
        if (u[a] < 0.0 || u[a] > 1.0 || std::isnan(u[a])) {
            outside = true;
            u[a] = std::isnan(u[a]) ? 0.0 : std::clamp(u[a], 0.0, 1.0);
        }
    }
    if (clamped) *clamped = outside;
}

}  // namespace

MicroModel::MicroModel(int degree, int ncp, std::array<std::vector<float>, 3> knots,
                       std::vector<float> control_points, Box3 extent, int lod)
    : degree_(degree), ncp_(ncp), lod_(lod), extent_(extent), knots_(std::move(knots)),
      control_points_(std::move(control_points)) {
    if (degree_ < 1 || degree_ > bspline::kMaxDegree) {
        throw DomainError("micro-model degree " + std::to_string(degree_) + " unsupported");
    }
    if (ncp_ < degree_ + 1) throw DomainError("micro-model ncp must be >= degree + 1");
    if (extent_.degenerate()) throw DomainError("micro-model extent is degenerate");
    const std::size_t knot_count = static_cast<std::size_t>(ncp_ + degree_ + 1);
    for (int a = 0; a < 3; ++a) {
        const auto& k = knots_[a];
        if (k.size() != knot_count) throw DomainError("knot vector has wrong length");
        for (std::size_t i = 0; i < k.size(); ++i) {
            if (!std::isfinite(k[i])) throw DomainError("non-finite knot");
            if (i > 0 && k[i] < k[i - 1]) throw DomainError("knot vector is decreasing");
        }
        for (int i = 0; i <= degree_; ++i) {
            if (k[static_cast<std::size_t>(i)] != 0.0f || k[knot_count - 1 - static_cast<std::size_t>(i)] != 1.0f) {
                throw DomainError("knot vector is not clamped to [0,1]");
            }
        }
        knots_d_[a] = to_double(k);
    }
    const std::size_t cp_count = static_cast<std::size_t>(ncp_) * ncp_ * ncp_;
    if (control_points_.size() != cp_count) throw DomainError("control point count must be ncp^3");
    for (float c : control_points_) {
        if (!std::isfinite(c)) throw DomainError("non-finite control point");
    }
}

Vec3 MicroModel::to_param(Vec3 point) const {
    const Vec3 size = extent_.size();
    return {(point.x - extent_.min.x) / size.x, (point.y - extent_.min.y) / size.y,
            (point.z - extent_.min.z) / size.z};
}

double MicroModel::value(Vec3 u, bool* clamped) const {
    clamp_param(u, clamped);
    std::array<bspline::BasisRow, 3> basis{};
    std::array<int, 3> first{};
    for (int a = 0; a < 3; ++a) {
        const int span = bspline::find_span(knots_d_[a], degree_, ncp_, u[a]);
        bspline::basis_values(knots_d_[a], degree_, span, u[a], basis[a]);
        first[a] = span - degree_;
    }
    double sum = 0.0;
    for (int k = 0; k <= degree_; ++k) {
        double plane = 0.0;
        for (int j = 0; j <= degree_; ++j) {
            const float* row = &control_points_[static_cast<std::size_t>(first[0]) +
                                                static_cast<std::size_t>(ncp_) *
                                                    (static_cast<std::size_t>(first[1] + j) +
                                                     static_cast<std::size_t>(ncp_) * (first[2] + k))];
            double line = 0.0;
            for (int i = 0; i <= degree_; ++i) line += basis[0][i] * row[i];
            plane += basis[1][j] * line;
        }
        sum += basis[2][k] * plane;
    }
    return sum;
}

void MicroModel::evaluate(Vec3 u, double& value, Vec3& gradient) const {
    clamp_param(u, nullptr);
    std::array<bspline::BasisRow, 3> basis{};
    std::array<bspline::BasisRow, 3> deriv{};
    std::array<int, 3> first{};
    for (int a = 0; a < 3; ++a) {
        const int span = bspline::find_span(knots_d_[a], degree_, ncp_, u[a]);
        bspline::basis_values_and_derivatives(knots_d_[a], degree_, span, u[a], basis[a], deriv[a]);
        first[a] = span - degree_;
    }
    double v = 0.0;
    double gx = 0.0;
    double gy = 0.0;
    double gz = 0.0;
    for (int k = 0; k <= degree_; ++k) {
        double pv = 0.0;
        double px = 0.0;
        double py = 0.0;
        for (int j = 0; j <= degree_; ++j) {
            const float* row = &control_points_[static_cast<std::size_t>(first[0]) +
                                                static_cast<std::size_t>(ncp_) *
                                                    (static_cast<std::size_t>(first[1] + j) +
                                                     static_cast<std::size_t>(ncp_) * (first[2] + k))];
            double lv = 0.0;
            double ld = 0.0;
            for (int i = 0; i <= degree_; ++i) {
                lv += basis[0][i] * row[i];
                ld += deriv[0][i] * row[i];
            }
            pv += basis[1][j] * lv;
            px += basis[1][j] * ld;
            py += deriv[1][j] * lv;
        }
        v += basis[2][k] * pv;
        gx += basis[2][k] * px;
        gy += basis[2][k] * py;
        gz += deriv[2][k] * pv;
    }
    const Vec3 size = extent_.size();
    value = v;
    gradient = {gx / size.x, gy / size.y, gz / size.z};
}

Vec3 MicroModel::gradient(Vec3 u, bool* clamped) const {
    bool outside = false;
    clamp_param(u, &outside);
    if (clamped) *clamped = outside;
    double v = 0.0;
    Vec3 g;
    evaluate(u, v, g);
    return g;
}

std::size_t MicroModel::serialized_size() const { return microvol::serialized_size(ncp_, degree_); }

std::size_t serialized_size(int ncp, int degree) {
    const std::size_t n = static_cast<std::size_t>(ncp);
    return 1 + ((n + static_cast<std::size_t>(degree)) * 3 + n * n * n) * 4;
}

MicroModel fit(const ScalarVolume& block, int ncp, int degree, int lod) {
    if (degree < 1 || degree > bspline::kMaxDegree) {
        throw DomainError("fit degree " + std::to_string(degree) + " unsupported");
    }
    const Index3& dims = block.dims();
    const int min_edge = std::min({dims[0], dims[1], dims[2]});
    if (min_edge < degree + 1) throw DomainError("block edge shorter than degree + 1");
    if (ncp < degree + 1 || ncp > min_edge) {
        throw DomainError("ncp " + std::to_string(ncp) + " outside [" + std::to_string(degree + 1) + ", " +
                          std::to_string(min_edge) + "]");
    }
    std::vector<double> grid(block.samples().begin(), block.samples().end());
    Index3 shape = dims;
    for (int step = 0; step < 3; ++step) {
        const auto op = fit_operators().get(shape[0], ncp, degree);
        grid = apply_and_rotate(grid, shape, *op);
        shape = {shape[1], shape[2], ncp};
    }
    std::vector<float> control_points(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw NumericError("non-finite control point from least-squares fit");
        control_points[i] = static_cast<float>(grid[i]);
    }
    const auto knots = to_float(bspline::clamped_uniform_knots(ncp, degree));
    return MicroModel(degree, ncp, {knots, knots, knots}, std::move(control_points), block.bounds(), lod);
}

std::vector<double> decode_grid(const MicroModel& model, Index3 dims) {
    const int ncp = model.ncp();
    std::vector<double> grid(model.control_points().begin(), model.control_points().end());
    Index3 shape{ncp, ncp, ncp};
    for (int step = 0; step < 3; ++step) {
        const int n = dims[step];
        const auto knots = to_double(model.knots(step));
        const auto params = bspline::uniform_params(n);
        const auto dense = bspline::collocation_matrix(knots, model.degree(), ncp, params);
        const Matrix basis =
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(dense.data(), n, ncp);
        grid = apply_and_rotate(grid, shape, basis);
        shape = {shape[1], shape[2], n};
    }
    return grid;
}

std::vector<std::uint8_t> serialize(const MicroModel& model) {
    std::vector<std::uint8_t> out;
    out.reserve(model.serialized_size());
    out.push_back(static_cast<std::uint8_t>(model.degree()));
    for (int a = 0; a < 3; ++a) {
        const auto knots = model.knots(a);
        for (std::size_t i = 1; i < knots.size(); ++i) detail::put_f32(out, knots[i]);
    }
    for (float c : model.control_points()) detail::put_f32(out, c);
    return out;
}

MicroModel deserialize(std::span<const std::uint8_t> bytes, int ncp, Box3 extent, int lod) {
    if (bytes.empty()) throw FormatError("empty micro-model");
    const int degree = bytes[0];
    if (degree < 1 || degree >= ncp || degree > bspline::kMaxDegree) {
        throw FormatError("micro-model degree byte " + std::to_string(degree) + " invalid for ncp " +
                          std::to_string(ncp));
    }
    const std::size_t expected = serialized_size(ncp, degree);
    if (bytes.size() != expected) {
        throw FormatError("micro-model is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected));
    }
    const std::uint8_t* p = bytes.data() + 1;
    std::array<std::vector<float>, 3> knots;
    for (int a = 0; a < 3; ++a) {
        knots[a].reserve(static_cast<std::size_t>(ncp + degree + 1));
        knots[a].push_back(0.0f);
        for (int i = 0; i < ncp + degree; ++i, p += 4) knots[a].push_back(detail::get_f32(p));
    }
    std::vector<float> control_points(static_cast<std::size_t>(ncp) * ncp * ncp);
    for (auto& c : control_points) {
        c = detail::get_f32(p);
        p += 4;
    }
    try {
        return MicroModel(degree, ncp, std::move(knots), std::move(control_points), extent, lod);
    } catch (const DomainError& e) {
        throw FormatError(std::string("invalid micro-model contents: ") + e.what());
    }
}

}  // namespace microvol
