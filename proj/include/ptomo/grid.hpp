#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "ptomo/errors.hpp"

namespace ptomo {

using cplx = std::complex<double>;

// Uniform node-centered grid on the square Omega = (-L/2, L/2)^2.
// Node (ix, iy) sits at (-L/2 + ix*dx, -L/2 + iy*dy); boundary nodes are
// part of the grid and carry Dirichlet values.
class Grid2D {
public:
    Grid2D(int nx, int ny, double length)
        : nx_(nx), ny_(ny), length_(length) {
        if (nx < 2 || ny < 2)
            throw InvalidArgument("grid needs at least 2 nodes per axis, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
        if (!(length > 0.0) || !std::isfinite(length))
            throw InvalidArgument("grid side length must be positive and finite");
    }

    static Grid2D square(int n, double length) { return Grid2D(n, n, length); }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double length() const { return length_; }
    double dx() const { return length_ / (nx_ - 1); }
    double dy() const { return length_ / (ny_ - 1); }
    double cell_measure() const { return dx() * dy(); }

    double x(int ix) const { return -0.5 * length_ + ix * dx(); }
    double y(int iy) const { return -0.5 * length_ + iy * dy(); }

    std::size_t count() const { return static_cast<std::size_t>(nx_) * ny_; }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(ix) * ny_ + iy; }

    bool operator==(const Grid2D& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && length_ == o.length_;
    }
    bool operator!=(const Grid2D& o) const { return !(*this == o); }

private:
    int nx_;
    int ny_;
    double length_;
};

// Scalar field sampled on a Grid2D, row-major with x as the slow index.
template <class T>
class Field {
public:
    explicit Field(const Grid2D& grid, T fill = T{})
        : grid_(grid), values_(grid.count(), fill) {}

    Field(const Grid2D& grid, std::vector<T> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.count())
            throw ShapeMismatch("field value count " + std::to_string(values_.size()) +
                                " does not match grid " + std::to_string(grid_.count()));
    }

    const Grid2D& grid() const { return grid_; }

    T& at(int ix, int iy) { return values_[grid_.index(ix, iy)]; }
    const T& at(int ix, int iy) const { return values_[grid_.index(ix, iy)]; }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    std::span<T> row(int ix) { return {values_.data() + grid_.index(ix, 0), static_cast<std::size_t>(grid_.ny())}; }
    std::span<const T> row(int ix) const {
        return {values_.data() + grid_.index(ix, 0), static_cast<std::size_t>(grid_.ny())};
    }

    bool all_finite() const {
        for (const T& v : values_)
            if (!is_finite(v)) return false;
        return true;
    }

    // Bilinear interpolation at a physical point; zero outside Omega.
    T sample(double px, double py) const {
        const double hx = grid_.dx(), hy = grid_.dy();
        const double gx = (px + 0.5 * grid_.length()) / hx;
        const double gy = (py + 0.5 * grid_.length()) / hy;
        if (gx < 0.0 || gy < 0.0 || gx > grid_.nx() - 1 || gy > grid_.ny() - 1) return T{};
        int ix = static_cast<int>(std::floor(gx));
        int iy = static_cast<int>(std::floor(gy));
        if (ix == grid_.nx() - 1) --ix;
        if (iy == grid_.ny() - 1) --iy;
        const double fx = gx - ix, fy = gy - iy;
        return at(ix, iy) * ((1 - fx) * (1 - fy)) + at(ix, iy + 1) * ((1 - fx) * fy) +
               at(ix + 1, iy) * (fx * (1 - fy)) + at(ix + 1, iy + 1) * (fx * fy);
    }

private:
    static bool is_finite(double v) { return std::isfinite(v); }
    static bool is_finite(const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

    Grid2D grid_;
    std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

inline ComplexField to_complex(const RealField& f) {
    ComplexField out(f.grid());
    for (std::size_t i = 0; i < f.values().size(); ++i) out.values()[i] = f.values()[i];
    return out;
}

inline RealField real_part(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t i = 0; i < f.values().size(); ++i) out.values()[i] = f.values()[i].real();
    return out;
}

inline RealField modulus(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t i = 0; i < f.values().size(); ++i) out.values()[i] = std::abs(f.values()[i]);
    return out;
}

// L2 pairing sum_i a_i * conj(b_i) * measure; conjugate-linear in the
// second argument.
inline cplx l2_inner(std::span<const cplx> a, std::span<const cplx> b, double measure = 1.0) {
    if (a.size() != b.size())
        throw ShapeMismatch("l2_inner spans of size " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    cplx acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
    return acc * measure;
}

inline double l2_inner(std::span<const double> a, std::span<const double> b, double measure = 1.0) {
    if (a.size() != b.size())
        throw ShapeMismatch("l2_inner spans of size " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc * measure;
}

template <class T>
auto l2_inner(const Field<T>& a, const Field<T>& b) {
    if (a.grid() != b.grid()) throw ShapeMismatch("l2_inner fields on different grids");
    return l2_inner(std::span<const T>(a.values()), std::span<const T>(b.values()),
                    a.grid().cell_measure());
}

inline double l2_norm(std::span<const cplx> a, double measure = 1.0) {
    double acc = 0.0;
    for (const cplx& v : a) acc += std::norm(v);
    return std::sqrt(acc * measure);
}

inline double l2_norm(std::span<const double> a, double measure = 1.0) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return std::sqrt(acc * measure);
}

template <class T>
double l2_norm(const Field<T>& a) {
    return l2_norm(std::span<const T>(a.values()), a.grid().cell_measure());
}

}  // namespace ptomo
