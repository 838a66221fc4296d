#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"

namespace ptomo {

// Physical configuration: square side L and the ratio L/lambda. The carrier
// wavenumber is k = 2*pi*(L/lambda)/L; the propagating harmonic rides on
// e^{2ikx} and only the slow envelope is discretized.
struct WaveParams {
    double length_L;
    double l_over_lambda;

    WaveParams(double length, double ratio) : length_L(length), l_over_lambda(ratio) {
        if (!(length_L > 0.0) || !std::isfinite(length_L))
            throw InvalidArgument("wave params: length must be positive");
        if (!(l_over_lambda > 0.0) || !std::isfinite(l_over_lambda))
            throw InvalidArgument("wave params: L/lambda must be positive");
    }

    double wavenumber() const { return 2.0 * std::numbers::pi * l_over_lambda / length_L; }
};

// Uniform angle set: count angles starting at 0 with the given step.
inline std::vector<double> uniform_angles(int count, double step_deg) {
    if (count < 1) throw InvalidArgument("angle count must be >= 1");
    if (!(step_deg > 0.0)) throw InvalidArgument("angle step must be positive");
    const double step = step_deg * std::numbers::pi / 180.0;
    if ((count - 1) * step >= 2.0 * std::numbers::pi)
        throw InvalidArgument("angle set exceeds a full turn");
    std::vector<double> a(count);
    for (int i = 0; i < count; ++i) a[i] = i * step;
    return a;
}

// Measurement array: one complex transverse profile v(L/2, y) per view angle.
class Sinogram {
public:
    Sinogram(std::vector<double> angles, int ny, const WaveParams& params)
        : angles_(std::move(angles)), ny_(ny), params_(params),
          values_(angles_.size() * static_cast<std::size_t>(ny), cplx{}) {
        if (angles_.empty()) throw InvalidArgument("sinogram needs at least one angle");
        if (ny_ < 2) throw InvalidArgument("sinogram needs n_y >= 2");
        for (std::size_t i = 0; i < angles_.size(); ++i) {
            if (!std::isfinite(angles_[i]) || angles_[i] < 0.0 ||
                angles_[i] >= 2.0 * std::numbers::pi)
                throw ValueOutOfRange("sinogram angle " + std::to_string(i) +
                                      " outside [0, 2*pi)");
            if (i > 0 && !(angles_[i] > angles_[i - 1]))
                throw ValueOutOfRange("sinogram angles must be strictly increasing");
        }
    }

    int n_angles() const { return static_cast<int>(angles_.size()); }
    int ny() const { return ny_; }
    const std::vector<double>& angles() const { return angles_; }
    const WaveParams& params() const { return params_; }

    cplx& at(int ia, int iy) { return values_[static_cast<std::size_t>(ia) * ny_ + iy]; }
    const cplx& at(int ia, int iy) const {
        return values_[static_cast<std::size_t>(ia) * ny_ + iy];
    }
    std::span<cplx> row(int ia) {
        return {values_.data() + static_cast<std::size_t>(ia) * ny_, static_cast<std::size_t>(ny_)};
    }
    std::span<const cplx> row(int ia) const {
        return {values_.data() + static_cast<std::size_t>(ia) * ny_, static_cast<std::size_t>(ny_)};
    }
    std::vector<cplx>& values() { return values_; }
    const std::vector<cplx>& values() const { return values_; }

    double dy() const { return params_.length_L / (ny_ - 1); }

    // Rectangle-rule weight of the theta integration. Angle sets produced by
    // uniform_angles are equispaced; anything else is rejected so forward and
    // adjoint can never disagree on the measure.
    double angle_step() const {
        if (angles_.size() == 1) return 2.0 * std::numbers::pi;
        const double step = angles_[1] - angles_[0];
        for (std::size_t i = 2; i < angles_.size(); ++i)
            if (std::fabs(angles_[i] - angles_[i - 1] - step) > 1e-9)
                throw ValueOutOfRange("sinogram angles are not equispaced");
        return step;
    }

    // Measurement-space pairing with measure dtheta * dy.
    cplx inner(const Sinogram& other) const {
        if (other.ny_ != ny_ || other.angles_ != angles_)
            throw ShapeMismatch("sinogram inner: incompatible shapes");
        return l2_inner(std::span<const cplx>(values_), std::span<const cplx>(other.values_),
                        angle_step() * dy());
    }

    double norm() const { return l2_norm(std::span<const cplx>(values_), angle_step() * dy()); }

    bool all_finite() const {
        for (const cplx& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

private:
    std::vector<double> angles_;
    int ny_;
    WaveParams params_;
    std::vector<cplx> values_;
};

}  // namespace ptomo
