#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"
#include "ptomo/parallel.hpp"
#include "ptomo/phantom.hpp"
#include "ptomo/sinogram.hpp"
#include "ptomo/tridiag.hpp"

namespace ptomo {

// Crank-Nicolson march of the envelope equation
//     dv/dx + (1/(4ik)) d2v/dy2 = beta(x, y)
// across the square, x slice by slice:
//     (I + (dx/2) A) v_{j+1} = (I - (dx/2) A) v_j + dx * beta_{j+1/2}
// with A = (1/(4ik)) D_yy on the n_y - 2 interior nodes (Dirichlet rows at
// y = +-L/2 eliminated) and beta_{j+1/2} the average of columns j and j+1.
// A is anti-Hermitian, so the homogeneous propagator is exactly unitary and
// the conjugate transpose of one step is the same step with the two
// matrices swapped; back_propagate exploits that to realize the exact
// discrete adjoint.
class EnvelopeMarcher {
public:
    EnvelopeMarcher(const Grid2D& grid, const WaveParams& params, bool diffusion = true)
        : grid_(grid), dx_(grid.dx()) {
        if (grid.ny() < 3) throw InvalidArgument("march needs n_y >= 3");
        const std::size_t m = static_cast<std::size_t>(grid.ny()) - 2;
        // gamma = (dx/2) * (1/(4ik)) / dy^2; the step matrices are
        // I +- gamma * tridiag(1, -2, 1), both diagonally dominant.
        const cplx gamma = diffusion
                               ? cplx{0.0, -1.0} * (dx_ / (8.0 * params.wavenumber() *
                                                           grid.dy() * grid.dy()))
                               : cplx{0.0, 0.0};
        plus_ = band_matrix(m, gamma);
        minus_ = band_matrix(m, -gamma);
        plus_factor_.emplace(plus_);
        minus_factor_.emplace(minus_);
    }

    const Grid2D& grid() const { return grid_; }

    // One forward step: u <- M+^{-1} (M- u + dx * b).
    void step(std::vector<cplx>& u, const std::vector<cplx>& b) const {
        std::vector<cplx> rhs = minus_.multiply(u);
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += dx_ * b[i];
        plus_factor_->solve_in_place(rhs);
        u.swap(rhs);
    }

    // Full envelope field; initial holds v(-L/2, y) on all n_y nodes when a
    // nonzero entry slice is wanted (test hook), otherwise the Dirichlet
    // zero column is used.
    template <class T>
    ComplexField march_envelope(const Field<T>& beta,
                                const std::vector<cplx>* initial = nullptr) const {
        check_beta(beta);
        ComplexField v(grid_);
        std::vector<cplx> u = initial_interior(initial);
        store_slice(v, 0, u, initial);
        std::vector<cplx> b(u.size());
        for (int j = 0; j + 1 < grid_.nx(); ++j) {
            source_column(beta, j, b);
            step(u, b);
            store_slice(v, j + 1, u, nullptr);
        }
        return v;
    }

    // Exit profile v(L/2, y) on all n_y nodes (boundary zeros included).
    template <class T>
    std::vector<cplx> final_slice(const Field<T>& beta,
                                  const std::vector<cplx>* initial = nullptr) const {
        check_beta(beta);
        std::vector<cplx> u = initial_interior(initial);
        std::vector<cplx> b(u.size());
        for (int j = 0; j + 1 < grid_.nx(); ++j) {
            source_column(beta, j, b);
            step(u, b);
        }
        std::vector<cplx> row(grid_.ny(), cplx{});
        for (std::size_t i = 0; i < u.size(); ++i) row[i + 1] = u[i];
        return row;
    }

    // Conjugate transpose of final_slice as a map beta -> exit profile:
    // given eta on the exit edge, returns the field cbar with
    // <final_slice(beta), eta>_euclid = <beta, cbar>_euclid for any beta.
    // Per reverse step: z = M-^{-1} vbar, columns j and j+1 gain (dx/2) z,
    // vbar <- M+ z (using M+^H = M-, M-^H = M+).
    ComplexField back_propagate(std::span<const cplx> eta) const {
        if (eta.size() != static_cast<std::size_t>(grid_.ny()))
            throw ShapeMismatch("back_propagate: exit profile length mismatch");
        ComplexField cbar(grid_);
        std::vector<cplx> vbar(eta.begin() + 1, eta.end() - 1);
        for (int j = grid_.nx() - 2; j >= 0; --j) {
            std::vector<cplx> z = minus_factor_->solve(vbar);
            for (std::size_t i = 0; i < z.size(); ++i) {
                const cplx w = 0.5 * dx_ * z[i];
                cbar.at(j, static_cast<int>(i) + 1) += w;
                cbar.at(j + 1, static_cast<int>(i) + 1) += w;
            }
            vbar = plus_.multiply(z);
        }
        return cbar;
    }

private:
    static TridiagonalSystem<cplx> band_matrix(std::size_t m, cplx gamma) {
        TridiagonalSystem<cplx> sys;
        sys.diag.assign(m, 1.0 - 2.0 * gamma);
        sys.lower.assign(m - 1, gamma);
        sys.upper.assign(m - 1, gamma);
        return sys;
    }

    template <class T>
    void check_beta(const Field<T>& beta) const {
        if (beta.grid() != grid_) throw GridMismatch("march: beta grid differs");
    }

    std::vector<cplx> initial_interior(const std::vector<cplx>* initial) const {
        const std::size_t m = static_cast<std::size_t>(grid_.ny()) - 2;
        std::vector<cplx> u(m, cplx{});
        if (initial) {
            if (initial->size() != static_cast<std::size_t>(grid_.ny()))
                throw ShapeMismatch("march: initial slice length mismatch");
            for (std::size_t i = 0; i < m; ++i) u[i] = (*initial)[i + 1];
        }
        return u;
    }

    void store_slice(ComplexField& v, int j, const std::vector<cplx>& u,
                     const std::vector<cplx>* full) const {
        if (full) {
            for (int iy = 0; iy < grid_.ny(); ++iy) v.at(j, iy) = (*full)[iy];
            return;
        }
        for (std::size_t i = 0; i < u.size(); ++i) v.at(j, static_cast<int>(i) + 1) = u[i];
    }

    template <class T>
    void source_column(const Field<T>& beta, int j, std::vector<cplx>& b) const {
        for (std::size_t i = 0; i < b.size(); ++i) {
            const int iy = static_cast<int>(i) + 1;
            b[i] = cplx(0.5) * (cplx(beta.at(j, iy)) + cplx(beta.at(j + 1, iy)));
        }
    }

    Grid2D grid_;
    double dx_;
    TridiagonalSystem<cplx> plus_;
    TridiagonalSystem<cplx> minus_;
    std::optional<TridiagFactor<cplx>> plus_factor_;
    std::optional<TridiagFactor<cplx>> minus_factor_;
};

template <class T>
ComplexField march_envelope(const Field<T>& beta, const WaveParams& params,
                            const std::vector<cplx>* initial = nullptr, bool diffusion = true) {
    return EnvelopeMarcher(beta.grid(), params, diffusion).march_envelope(beta, initial);
}

// Sinogram assembly: for each view angle rotate beta, march, keep the exit
// profile. Rows are disjoint slots, so the result is bitwise identical for
// any worker count.
template <class T>
Sinogram forward_map_generic(const Field<T>& beta, const std::vector<double>& angles,
                             const WaveParams& params, int threads = 1, bool diffusion = true) {
    const Grid2D& g = beta.grid();
    if (std::fabs(g.length() - params.length_L) > 1e-12 * params.length_L)
        throw GridMismatch("forward_map: grid length differs from wave params");
    Sinogram sino(angles, g.ny(), params);
    EnvelopeMarcher marcher(g, params, diffusion);
    parallel_for(sino.n_angles(), threads, [&](int ia) {
        const RotationOperator rot(sino.angles()[ia], g);
        const Field<T> rotated = rot.apply(beta);
        const std::vector<cplx> row = marcher.final_slice(rotated);
        std::copy(row.begin(), row.end(), sino.row(ia).begin());
    });
    return sino;
}

inline Sinogram forward_map(const RealField& beta, const std::vector<double>& angles,
                            const WaveParams& params, int threads = 1, bool diffusion = true) {
    return forward_map_generic(beta, angles, params, threads, diffusion);
}

inline Sinogram forward_map(const Phantom& beta, const std::vector<double>& angles,
                            const WaveParams& params, int threads = 1) {
    return forward_map_generic(beta.field, angles, params, threads, true);
}

inline Sinogram forward_map_complex(const ComplexField& beta, const std::vector<double>& angles,
                                    const WaveParams& params, int threads = 1) {
    return forward_map_generic(beta, angles, params, threads, true);
}

// Lateral Dirichlet walls reflect; phantoms are expected to keep their mass
// away from the frame. Returns a warning line when more than 0.1% of the
// mass sits within 5 cells of an edge.
inline std::optional<std::string> margin_warning(const RealField& beta) {
    const double frac = boundary_mass_fraction(beta, 5);
    if (frac > 1e-3)
        return "warning: " + std::to_string(100.0 * frac) +
               "% of phantom mass within 5 cells of the domain edge; expect boundary artifacts";
    return std::nullopt;
}

}  // namespace ptomo
