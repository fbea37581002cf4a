#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "microvol/geometry.hpp"
#include "microvol/volume.hpp"

namespace microvol {

/// Tensor-product B-spline encoding of one micro-block.
///
/// Same degree and control-point count (ncp) on every axis. Knots and control
/// points are held at float32 precision so a model evaluates identically before
/// and after a serialization round trip. The extent is the block's box in
/// normalized volume coordinates; queries take extent-local parameters in [0,1]^3.
class MicroModel {
public:
    MicroModel() = default;
    /// `knots` are the full clamped vectors (ncp + degree + 1 values per axis).
    /// Throws DomainError if any invariant is violated.
    MicroModel(int degree, int ncp, std::array<std::vector<float>, 3> knots, std::vector<float> control_points,
               Box3 extent, int lod);

    int degree() const { return degree_; }
    int ncp() const { return ncp_; }
    int lod() const { return lod_; }
    const Box3& extent() const { return extent_; }
    std::span<const float> knots(int axis) const { return knots_[axis]; }
    std::span<const float> control_points() const { return control_points_; }
    float control_point(int i, int j, int k) const {
        return control_points_[static_cast<std::size_t>(i) +
                               static_cast<std::size_t>(ncp_) *
                                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(ncp_) * k)];
    }

    /// Spline value at parameter u. Parameters outside [0,1] are clamped and
    /// `clamped` (if given) is set.
    double value(Vec3 u, bool* clamped = nullptr) const;

    /// Gradient with respect to normalized volume coordinates (parameter
    /// derivative divided by extent length per axis).
    Vec3 gradient(Vec3 u, bool* clamped = nullptr) const;

    /// Value and gradient from a single basis evaluation.
    void evaluate(Vec3 u, double& value, Vec3& gradient) const;

    /// Maps a point in normalized volume coordinates to extent-local parameters.
    Vec3 to_param(Vec3 point) const;

    std::size_t serialized_size() const;

private:
    int degree_ = 0;
    int ncp_ = 0;
    int lod_ = 0;
    Box3 extent_{};
    std::array<std::vector<float>, 3> knots_;
    std::array<std::vector<double>, 3> knots_d_;
    std::vector<float> control_points_;
};

/// Size in bytes of a serialized model: 1 + ((ncp + degree) * 3 + ncp^3) * 4.
std::size_t serialized_size(int ncp, int degree);

/// Least-squares tensor-product fit with uniform clamped knots and uniform
/// sample parameters. The model extent is `block.bounds()`.
/// Throws DomainError unless degree in [1, kMaxDegree] and ncp in [degree+1, min block edge].
MicroModel fit(const ScalarVolume& block, int ncp, int degree, int lod = 0);

/// Evaluates the model at the uniform parameters of a dims grid (separable).
std::vector<double> decode_grid(const MicroModel& model, Index3 dims);

/// Byte layout: [u8 degree][3 x (ncp+degree) f32 knots t1..t_{ncp+degree}][ncp^3 f32 control points], little endian.
std::vector<std::uint8_t> serialize(const MicroModel& model);

/// Inverse of serialize. ncp and extent come from the manifest. Throws FormatError.
MicroModel deserialize(std::span<const std::uint8_t> bytes, int ncp, Box3 extent, int lod);

}  // namespace microvol
