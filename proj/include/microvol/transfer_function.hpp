#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace microvol {

struct ColorPoint {
    double scalar = 0.0;
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

struct OpacityPoint {
    double scalar = 0.0;
    double alpha = 0.0;
};

struct Rgba {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
    double a = 0.0;
};

/// Piecewise-linear scalar -> color and scalar -> opacity maps over an explicit
/// scalar domain. Values outside the domain are clamped to it; values outside
/// the control-point range take the nearest end point.
class TransferFunction {
public:
    TransferFunction() = default;
    /// Throws DomainError unless control scalars strictly increase and
    /// components lie in [0,1].
    TransferFunction(std::vector<ColorPoint> color, std::vector<OpacityPoint> opacity, double domain_min,
                     double domain_max);

    Rgba lookup(double value) const;

    const std::vector<ColorPoint>& color() const { return color_; }
    const std::vector<OpacityPoint>& opacity() const { return opacity_; }
    double domain_min() const { return domain_min_; }
    double domain_max() const { return domain_max_; }

    nlohmann::json to_json() const;
    static TransferFunction from_json(const nlohmann::json& j);
    static TransferFunction load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::vector<ColorPoint> color_;
    std::vector<OpacityPoint> opacity_;
    double domain_min_ = 0.0;
    double domain_max_ = 1.0;
};

/// Semi-transparent iso-band presets used by the tools and tests.
TransferFunction preset_transfer_function(const std::string& name, double domain_min = 0.0, double domain_max = 1.0);
std::vector<std::string> preset_names();

}  // namespace microvol
