#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ptomo/errors.hpp"

namespace ptomo {

namespace detail {
inline double mag(double v) { return std::fabs(v); }
inline double mag(const std::complex<double>& v) { return std::abs(v); }
}  // namespace detail

// Tridiagonal system in banded storage: lower has n-1 sub-diagonal entries,
// diag has n, upper has n-1 super-diagonal entries.
template <class T>
struct TridiagonalSystem {
    std::vector<T> lower;
    std::vector<T> diag;
    std::vector<T> upper;

    std::size_t size() const { return diag.size(); }

    void validate() const {
        const std::size_t n = diag.size();
        if (n == 0) throw ShapeMismatch("tridiagonal system is empty");
        if (lower.size() != n - 1 || upper.size() != n - 1)
            throw ShapeMismatch("tridiagonal bands: lower " + std::to_string(lower.size()) +
                                ", upper " + std::to_string(upper.size()) + " for n = " +
                                std::to_string(n));
    }

    // y = M x, used by tests to check solutions by substitution.
    std::vector<T> multiply(std::span<const T> x) const {
        validate();
        const std::size_t n = diag.size();
        if (x.size() != n) throw ShapeMismatch("tridiagonal multiply: rhs size mismatch");
        std::vector<T> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            T acc = diag[i] * x[i];
            if (i > 0) acc += lower[i - 1] * x[i - 1];
            if (i + 1 < n) acc += upper[i] * x[i + 1];
            y[i] = acc;
        }
        return y;
    }

    double max_coefficient() const {
        double m = 0.0;
        for (const T& v : diag) m = std::max(m, detail::mag(v));
        for (const T& v : lower) m = std::max(m, detail::mag(v));
        for (const T& v : upper) m = std::max(m, detail::mag(v));
        return m;
    }
};

// Thomas elimination without pivoting. The paraxial step matrices are
// strictly diagonally dominant in modulus, so breakdown only signals a
// genuinely bad system; we detect it rather than reorder.
template <class T>
class TridiagFactor {
public:
    explicit TridiagFactor(const TridiagonalSystem<T>& sys) {
        sys.validate();
        const std::size_t n = sys.size();
        const double floor_mag = 1e-14 * sys.max_coefficient();
        lower_ = sys.lower;
        pivot_.resize(n);
        upper_ = sys.upper;
        mult_.resize(n > 0 ? n - 1 : 0);
        pivot_[0] = sys.diag[0];
        if (detail::mag(pivot_[0]) <= floor_mag)
            throw SingularPivot("tridiagonal pivot 0 below " + std::to_string(floor_mag));
        for (std::size_t i = 1; i < n; ++i) {
            mult_[i - 1] = lower_[i - 1] / pivot_[i - 1];
            pivot_[i] = sys.diag[i] - mult_[i - 1] * upper_[i - 1];
            if (detail::mag(pivot_[i]) <= floor_mag)
                throw SingularPivot("tridiagonal pivot " + std::to_string(i) + " below " +
                                    std::to_string(floor_mag));
        }
    }

    std::size_t size() const { return pivot_.size(); }

    void solve_in_place(std::span<T> rhs) const {
        const std::size_t n = pivot_.size();
        if (rhs.size() != n) throw ShapeMismatch("tridiagonal solve: rhs size mismatch");
        for (std::size_t i = 1; i < n; ++i) rhs[i] -= mult_[i - 1] * rhs[i - 1];
        rhs[n - 1] /= pivot_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) / pivot_[i];
    }

    std::vector<T> solve(std::span<const T> rhs) const {
        std::vector<T> x(rhs.begin(), rhs.end());
        solve_in_place(x);
        return x;
    }

private:
    std::vector<T> lower_;
    std::vector<T> pivot_;
    std::vector<T> upper_;
    std::vector<T> mult_;
};

template <class T>
std::vector<T> tridiag_solve(const TridiagonalSystem<T>& sys,
                             std::span<const std::type_identity_t<T>> rhs) {
    return TridiagFactor<T>(sys).solve(rhs);
}

}  // namespace ptomo
