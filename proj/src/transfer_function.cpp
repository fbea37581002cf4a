#include "microvol/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"

namespace microvol {

namespace {

bool unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

template <class Point, class Get>
double interpolate(const std::vector<Point>& pts, double s, Get get) {
    if (s <= pts.front().scalar) return get(pts.front());
    if (s >= pts.back().scalar) return get(pts.back());
    const auto hi = std::upper_bound(pts.begin(), pts.end(), s,
                                     [](double v, const Point& p) { return v < p.scalar; });
    const auto lo = hi - 1;
    const double t = (s - lo->scalar) / (hi->scalar - lo->scalar);
    return get(*lo) + t * (get(*hi) - get(*lo));
}

}  // namespace

TransferFunction::TransferFunction(std::vector<ColorPoint> color, std::vector<OpacityPoint> opacity,
                                   double domain_min, double domain_max)
    : color_(std::move(color)), opacity_(std::move(opacity)), domain_min_(domain_min), domain_max_(domain_max) {
    if (!(domain_max_ > domain_min_)) throw DomainError("transfer function domain is empty");
    if (color_.empty() || opacity_.empty()) throw DomainError("transfer function needs control points");
    for (std::size_t i = 0; i < color_.size(); ++i) {
        const auto& c = color_[i];
        if (!unit(c.r) || !unit(c.g) || !unit(c.b)) throw DomainError("color components must lie in [0,1]");
        if (i > 0 && !(c.scalar > color_[i - 1].scalar)) throw DomainError("color scalars must strictly increase");
    }
    for (std::size_t i = 0; i < opacity_.size(); ++i) {
        if (!unit(opacity_[i].alpha)) throw DomainError("opacity must lie in [0,1]");
        if (i > 0 && !(opacity_[i].scalar > opacity_[i - 1].scalar)) {
            throw DomainError("opacity scalars must strictly increase");
        }
    }
}

Rgba TransferFunction::lookup(double value) const {
    const double s = std::clamp(value, domain_min_, domain_max_);
    return {interpolate(color_, s, [](const ColorPoint& p) { return p.r; }),
            interpolate(color_, s, [](const ColorPoint& p) { return p.g; }),
            interpolate(color_, s, [](const ColorPoint& p) { return p.b; }),
            interpolate(opacity_, s, [](const OpacityPoint& p) { return p.alpha; })};
}

nlohmann::json TransferFunction::to_json() const {
    nlohmann::json color = nlohmann::json::array();
    for (const auto& c : color_) color.push_back({c.scalar, c.r, c.g, c.b});
    nlohmann::json opacity = nlohmann::json::array();
    for (const auto& o : opacity_) opacity.push_back({o.scalar, o.alpha});
    return {{"domain", {domain_min_, domain_max_}}, {"color", color}, {"opacity", opacity}};
}

TransferFunction TransferFunction::from_json(const nlohmann::json& j) {
    try {
        const auto domain = j.at("domain").get<std::array<double, 2>>();
        std::vector<ColorPoint> color;
        for (const auto& c : j.at("color")) {
            const auto v = c.get<std::array<double, 4>>();
            color.push_back({v[0], v[1], v[2], v[3]});
        }
        std::vector<OpacityPoint> opacity;
        for (const auto& o : j.at("opacity")) {
            const auto v = o.get<std::array<double, 2>>();
            opacity.push_back({v[0], v[1]});
        }
        return TransferFunction(std::move(color), std::move(opacity), domain[0], domain[1]);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("transfer function: ") + e.what());
    }
}

TransferFunction TransferFunction::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transfer function " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void TransferFunction::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

std::vector<std::string> preset_names() { return {"bands", "opaque", "ramp"}; }

TransferFunction preset_transfer_function(const std::string& name, double lo, double hi) {
    const auto at = [&](double t) { return lo + t * (hi - lo); };
    if (name == "bands") {
        // Three translucent iso-bands, blue -> green -> red.
        return TransferFunction(
            {{at(0.0), 0.1, 0.2, 0.9}, {at(0.25), 0.1, 0.5, 0.9}, {at(0.5), 0.2, 0.9, 0.3}, {at(0.75), 0.9, 0.6, 0.1},
             {at(1.0), 0.9, 0.1, 0.1}},
            {{at(0.0), 0.0},
             {at(0.20), 0.0},
             {at(0.25), 0.25},
             {at(0.30), 0.0},
             {at(0.45), 0.0},
             {at(0.50), 0.35},
             {at(0.55), 0.0},
             {at(0.70), 0.0},
             {at(0.75), 0.5},
             {at(0.80), 0.0},
             {at(1.0), 0.0}},
            lo, hi);
    }
    if (name == "opaque") {
        return TransferFunction({{at(0.0), 0.9, 0.8, 0.6}, {at(1.0), 0.9, 0.8, 0.6}}, {{at(0.0), 1.0}, {at(1.0), 1.0}},
                                lo, hi);
    }
    if (name == "ramp") {
        return TransferFunction({{at(0.0), 0.0, 0.0, 1.0}, {at(0.5), 1.0, 1.0, 1.0}, {at(1.0), 1.0, 0.0, 0.0}},
                                {{at(0.0), 0.0}, {at(1.0), 0.08}}, lo, hi);
    }
    throw DomainError("unknown transfer function preset '" + name + "'");
}

}  // namespace microvol
