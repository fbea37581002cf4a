#pragma once

#include <cstddef>

#include "microvol/geometry.hpp"
#include "microvol/micro_model.hpp"

namespace microvol {

/// A decoded, query-ready block. Points are in normalized [-1,1]^3 volume
/// coordinates; gradients are with respect to those coordinates.
/// Implementations are immutable and safe for concurrent readers.
class VolumeBlock {
public:
    virtual ~VolumeBlock() = default;

    virtual const Box3& extent() const = 0;
    virtual double value(const Vec3& point) const = 0;
    virtual void evaluate(const Vec3& point, double& value, Vec3& gradient) const = 0;
    /// Bytes of the on-disk representation.
    virtual std::size_t storage_bytes() const = 0;
};

class MfaBlock final : public VolumeBlock {
public:
    explicit MfaBlock(MicroModel model) : model_(std::move(model)) {}

    const MicroModel& model() const { return model_; }

    const Box3& extent() const override { return model_.extent(); }
    double value(const Vec3& point) const override { return model_.value(model_.to_param(point)); }
    void evaluate(const Vec3& point, double& value, Vec3& gradient) const override {
        model_.evaluate(model_.to_param(point), value, gradient);
    }
    std::size_t storage_bytes() const override { return model_.serialized_size(); }

private:
    MicroModel model_;
};

}  // namespace microvol
