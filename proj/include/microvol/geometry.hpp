#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace microvol {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
    friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
    friend constexpr bool operator==(Vec3 a, Vec3 b) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) {
    const double len = length(a);
    return len > 0.0 ? a / len : a;
}

/// Axis-aligned box. Used both for physical bounds of a volume and for block
/// extents in normalized [-1,1]^3 coordinates.
struct Box3 {
    Vec3 min;
    Vec3 max;

    Vec3 size() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5; }
    bool degenerate() const { return !(max.x > min.x && max.y > min.y && max.z > min.z); }
    bool contains(Vec3 p, double eps = 0.0) const {
        for (int a = 0; a < 3; ++a) {
            if (p[a] < min[a] - eps || p[a] > max[a] + eps) return false;
        }
        return true;
    }
    bool contains(const Box3& other, double eps = 0.0) const {
        return contains(other.min, eps) && contains(other.max, eps);
    }
    friend bool operator==(const Box3&, const Box3&) = default;
};

inline Box3 unit_cube() { return {{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}}; }

using Index3 = std::array<int, 3>;

}  // namespace microvol
