#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"
#include "ptomo/io.hpp"

namespace ptomo {

// Nonlinearity map beta with a label for reports. Values are normalized to
// [0, 1] and vanish on a 2-cell boundary margin (the forward model assumes
// compact support away from the frame).
struct Phantom {
    RealField field;
    std::string name;
};

// Zeroes every node within `cells` of any edge.
inline void enforce_margin(RealField& f, int cells) {
    const int nx = f.grid().nx(), ny = f.grid().ny();
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            if (ix < cells || iy < cells || ix >= nx - cells || iy >= ny - cells)
                f.at(ix, iy) = 0.0;
}

// Fraction of total |mass| sitting within `cells` of an edge; used to warn
// when a phantom crowds the Dirichlet frame.
inline double boundary_mass_fraction(const RealField& f, int cells) {
    const int nx = f.grid().nx(), ny = f.grid().ny();
    double total = 0.0, edge = 0.0;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) {
            const double m = std::fabs(f.at(ix, iy));
            total += m;
            if (ix < cells || iy < cells || ix >= nx - cells || iy >= ny - cells) edge += m;
        }
    return total > 0.0 ? edge / total : 0.0;
}

namespace detail {

struct Ellipse {
    double a;     // semi-axis along x before rotation
    double b;     // semi-axis along y before rotation
    double x0;
    double y0;
    double phi_deg;
    double value;
};

// Ten-ellipse head phantom, the standard parameterization on [-1,1]^2
// (same table as Kak & Slaney, Table 3.1, in x-semi/y-semi form).
inline const std::array<Ellipse, 10>& shepp_logan_table() {
    static const std::array<Ellipse, 10> t = {{
        {0.6900, 0.9200, 0.00, 0.0000, 0.0, 2.00},
        {0.6624, 0.8740, 0.00, -0.0184, 0.0, -0.98},
        {0.1100, 0.3100, 0.22, 0.0000, -18.0, -0.02},
        {0.1600, 0.4100, -0.22, 0.0000, 18.0, -0.02},
        {0.2100, 0.2500, 0.00, 0.3500, 0.0, 0.01},
        {0.0460, 0.0460, 0.00, 0.1000, 0.0, 0.01},
        {0.0460, 0.0460, 0.00, -0.1000, 0.0, 0.01},
        {0.0460, 0.0230, -0.08, -0.6050, 0.0, 0.01},
        {0.0230, 0.0230, 0.00, -0.6050, 0.0, 0.01},
        {0.0230, 0.0460, 0.06, -0.6050, 0.0, 0.01},
    }};
    return t;
}

inline double ellipse_sum(double u, double v) {
    double acc = 0.0;
    for (const Ellipse& e : shepp_logan_table()) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double c = std::cos(phi), s = std::sin(phi);
        const double du = u - e.x0, dv = v - e.y0;
        const double p = (c * du + s * dv) / e.a;
        const double q = (-s * du + c * dv) / e.b;
        if (p * p + q * q <= 1.0) acc += e.value;
    }
    return acc;
}

}  // namespace detail

// Head-phantom intensity at a physical point of a domain with side L
// (the [-1,1]^2 table is stretched to the inscribed square). Unnormalized:
// values sum the raw ellipse intensities (max 2.0 inside the skull rim).
inline double shepp_logan_point(double x, double y, double length) {
    return detail::ellipse_sum(2.0 * x / length, 2.0 * y / length);
}

inline Phantom shepp_logan(const Grid2D& grid) {
    RealField f(grid);
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy)
            f.at(ix, iy) = shepp_logan_point(grid.x(ix), grid.y(iy), grid.length());
    enforce_margin(f, 2);
    double mx = 0.0;
    for (double v : f.values()) mx = std::max(mx, v);
    if (mx > 0.0)
        for (double& v : f.values()) v = std::max(0.0, v) / mx;
    return {std::move(f), "shepp-logan"};
}

// Disk of the given radius with a linear edge ramp of width `edge` (full
// transition width, physical units). The ramp keeps line integrals
// second-order accurate in the grid spacing; edge <= 0 means one cell.
inline Phantom disk(const Grid2D& grid, double cx, double cy, double radius,
                    double amplitude = 1.0, double edge = 0.0) {
    if (!(radius > 0.0)) throw InvalidArgument("disk radius must be positive");
    const double w = edge > 0.0 ? edge : std::min(grid.dx(), grid.dy());
    RealField f(grid);
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double r = std::hypot(grid.x(ix) - cx, grid.y(iy) - cy);
            const double t = (radius + 0.5 * w - r) / w;
            f.at(ix, iy) = amplitude * std::clamp(t, 0.0, 1.0);
        }
    enforce_margin(f, 2);
    return {std::move(f), "disk"};
}

inline Phantom gaussian_bump(const Grid2D& grid, double cx, double cy, double sigma,
                             double amplitude = 1.0) {
    if (!(sigma > 0.0)) throw InvalidArgument("bump width must be positive");
    RealField f(grid);
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double dx = grid.x(ix) - cx, dy = grid.y(iy) - cy;
            f.at(ix, iy) = amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    enforce_margin(f, 2);
    return {std::move(f), "gaussian"};
}

// Procedural branching-vessel pattern: seeded random walks that split and
// thin, each step stamped as a capsule with a smoothstep cross-section.
// Stands in for external angiogram rasters when none is on disk.
inline Phantom vessels(const Grid2D& grid, std::uint64_t seed) {
    RealField f(grid);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double L = grid.length();

    const auto stamp = [&](double ax, double ay, double bx, double by, double thick) {
        const double pad = thick * 1.5;
        const int ix0 = std::max(0, static_cast<int>((std::min(ax, bx) - pad + L / 2) / grid.dx()));
        const int ix1 = std::min(grid.nx() - 1,
                                 static_cast<int>((std::max(ax, bx) + pad + L / 2) / grid.dx()) + 1);
        const int iy0 = std::max(0, static_cast<int>((std::min(ay, by) - pad + L / 2) / grid.dy()));
        const int iy1 = std::min(grid.ny() - 1,
                                 static_cast<int>((std::max(ay, by) + pad + L / 2) / grid.dy()) + 1);
        const double ex = bx - ax, ey = by - ay;
        const double len2 = ex * ex + ey * ey;
        for (int ix = ix0; ix <= ix1; ++ix)
            for (int iy = iy0; iy <= iy1; ++iy) {
                const double px = grid.x(ix) - ax, py = grid.y(iy) - ay;
                const double t = len2 > 0.0 ? std::clamp((px * ex + py * ey) / len2, 0.0, 1.0) : 0.0;
                const double d = std::hypot(px - t * ex, py - t * ey);
                if (d < thick) {
                    const double u = 1.0 - d / thick;
                    const double v = u * u * (3.0 - 2.0 * u);
                    f.at(ix, iy) = std::max(f.at(ix, iy), v);
                }
            }
    };

    struct Walker {
        double x, y, heading, thick;
        int depth;
    };
    std::vector<Walker> stack;
    for (int t = 0; t < 3; ++t) {
        const double x0 = -0.38 * L + 0.76 * L * unit(rng);
        stack.push_back({x0, -0.38 * L, std::numbers::pi / 2 + 0.4 * (unit(rng) - 0.5),
                         0.016 * L, 0});
    }
    int segments = 0;
    const double bound = 0.40 * L;
    while (!stack.empty() && segments < 4000) {
        Walker w = stack.back();
        stack.pop_back();
        const int steps = 14 + static_cast<int>(unit(rng) * 10);
        for (int s = 0; s < steps && segments < 4000; ++s) {
            const double step = 0.035 * L;
            const double nx = w.x + step * std::cos(w.heading);
            const double ny = w.y + step * std::sin(w.heading);
            if (std::fabs(nx) > bound || std::fabs(ny) > bound) break;
            stamp(w.x, w.y, nx, ny, w.thick);
            ++segments;
            w.x = nx;
            w.y = ny;
            w.heading += 0.55 * (unit(rng) - 0.5);
            w.thick *= 0.985;
            if (w.depth < 4 && unit(rng) < 0.16) {
                Walker child = w;
                child.depth = w.depth + 1;
                child.thick = w.thick * 0.7;
                child.heading = w.heading + (unit(rng) < 0.5 ? 0.8 : -0.8);
                if (child.thick > 0.002 * L) stack.push_back(child);
            }
        }
    }
    enforce_margin(f, 2);
    return {std::move(f), "vessels"};
}

// Reads a PGM (P5) or real RF64 raster and resamples it onto `grid` by
// bilinear interpolation, then rescales to [0,1] and clears the margin.
// Source and target domains are identified by relative position.
inline Phantom load_raster(const std::string& path, const Grid2D& grid) {
    auto is = detail::open_in(path);
    char magic[2] = {0, 0};
    is.read(magic, 2);
    is.close();

    RealField src = [&]() -> RealField {
        if (magic[0] == 'P' && magic[1] == '5') {
            PgmImage img = read_pgm(path);
            if (img.width < 2 || img.height < 2)
                throw UnsupportedFormat(path + ": raster too small to resample");
            Grid2D g(img.height, img.width, grid.length());
            RealField f(g);
            for (int ix = 0; ix < g.nx(); ++ix)
                for (int iy = 0; iy < g.ny(); ++iy)
                    f.at(ix, iy) =
                        static_cast<double>(img.pixels[static_cast<std::size_t>(ix) * g.ny() + iy]) /
                        img.maxval;
            return f;
        }
        if (magic[0] == 'R' && magic[1] == 'F') return read_rf64_real(path);
        throw UnsupportedFormat(path + ": expected PGM (P5) or real RF64");
    }();

    RealField f(grid);
    const double stretch = src.grid().length() / grid.length();
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy)
            f.at(ix, iy) = src.sample(grid.x(ix) * stretch, grid.y(iy) * stretch);

    double lo = f.values()[0], hi = f.values()[0];
    for (double v : f.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo) {
        for (double& v : f.values()) v = (v - lo) / (hi - lo);
    } else {
        for (double& v : f.values()) v = hi > 0.0 ? 1.0 : 0.0;
    }
    enforce_margin(f, 2);
    return {std::move(f), "raster"};
}

// ---------------------------------------------------------------------------
// Rotation as an explicit sparse linear map. rotate(f)(x) = f(R_theta x)
// with bilinear gather weights; rotate_transpose applies the literal matrix
// transpose (a scatter), which is what makes the inversion's dot test exact.
// Rotating by -theta instead would differ at interpolation level.

class RotationOperator {
public:
    RotationOperator(double theta, const Grid2D& grid) : theta_(theta), grid_(grid) {
        const int nx = grid.nx(), ny = grid.ny();
        const double c = std::cos(theta), s = std::sin(theta);
        row_start_.reserve(grid.count() + 1);
        row_start_.push_back(0);
        entries_.reserve(grid.count() * 4);
        // Fractional index snap: preimages landing on a node (right angles,
        // theta = 0) collapse to a single unit weight, so those cases are
        // exact index permutations.
        const double snap = 1e-9;
        for (int ix = 0; ix < nx; ++ix) {
            const double x = grid.x(ix);
            for (int iy = 0; iy < ny; ++iy) {
                const double y = grid.y(iy);
                const double px = c * x - s * y;
                const double py = s * x + c * y;
                const double gx = (px + 0.5 * grid.length()) / grid.dx();
                const double gy = (py + 0.5 * grid.length()) / grid.dy();
                if (gx > -snap && gy > -snap && gx < nx - 1 + snap && gy < ny - 1 + snap) {
                    int ix0 = static_cast<int>(std::floor(gx));
                    int iy0 = static_cast<int>(std::floor(gy));
                    double fx = gx - ix0, fy = gy - iy0;
                    if (std::fabs(fx - std::round(fx)) < snap) {
                        ix0 += static_cast<int>(std::round(fx));
                        fx = 0.0;
                    }
                    if (std::fabs(fy - std::round(fy)) < snap) {
                        iy0 += static_cast<int>(std::round(fy));
                        fy = 0.0;
                    }
                    ix0 = std::clamp(ix0, 0, nx - 1);
                    iy0 = std::clamp(iy0, 0, ny - 1);
                    const bool ex = fx > 0.0 && ix0 + 1 < nx;
                    const bool ey = fy > 0.0 && iy0 + 1 < ny;
                    const auto push = [&](int i, int j, double w) {
                        if (w > 0.0) entries_.push_back({grid.index(i, j), w});
                    };
                    push(ix0, iy0, (1 - fx) * (1 - fy));
                    if (ey) push(ix0, iy0 + 1, (1 - fx) * fy);
                    if (ex) push(ix0 + 1, iy0, fx * (1 - fy));
                    if (ex && ey) push(ix0 + 1, iy0 + 1, fx * fy);
                }
                row_start_.push_back(entries_.size());
            }
        }
    }

    double theta() const { return theta_; }
    const Grid2D& grid() const { return grid_; }

    template <class T>
    Field<T> apply(const Field<T>& f) const {
        if (f.grid() != grid_) throw GridMismatch("rotate: field grid differs from operator grid");
        Field<T> out(grid_);
        const std::vector<T>& v = f.values();
        for (std::size_t row = 0; row < grid_.count(); ++row) {
            T acc{};
            for (std::size_t e = row_start_[row]; e < row_start_[row + 1]; ++e)
                acc += v[entries_[e].col] * entries_[e].w;
            out.values()[row] = acc;
        }
        return out;
    }

    template <class T>
    Field<T> apply_transpose(const Field<T>& g) const {
        if (g.grid() != grid_)
            throw GridMismatch("rotate_transpose: field grid differs from operator grid");
        Field<T> out(grid_);
        const std::vector<T>& v = g.values();
        for (std::size_t row = 0; row < grid_.count(); ++row) {
            const T gv = v[row];
            for (std::size_t e = row_start_[row]; e < row_start_[row + 1]; ++e)
                out.values()[entries_[e].col] += gv * entries_[e].w;
        }
        return out;
    }

private:
    struct Entry {
        std::size_t col;
        double w;
    };
    double theta_;
    Grid2D grid_;
    std::vector<std::size_t> row_start_;
    std::vector<Entry> entries_;
};

template <class T>
Field<T> rotate(const RotationOperator& op, const Field<T>& f) {
    return op.apply(f);
}

template <class T>
Field<T> rotate_transpose(const RotationOperator& op, const Field<T>& g) {
    return op.apply_transpose(g);
}

}  // namespace ptomo
