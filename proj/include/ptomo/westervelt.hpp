#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "ptomo/errors.hpp"

namespace ptomo {

// C-infinity boundary pulse: bump envelope times a sinusoid, identically
// zero outside (t_on, t_off). `phase` shifts the carrier; pi/2 turns the
// sine into a cosine.
struct Pulse {
    double t_on = 0.0;
    double t_off = 0.0;
    double omega = 0.0;
    double phase = 0.0;

    Pulse() = default;
    Pulse(double on, double off, double w, double ph = 0.0)
        : t_on(on), t_off(off), omega(w), phase(ph) {
        if (!(t_off > t_on)) throw InvalidArgument("pulse: empty support");
        if (!(omega > 0.0)) throw InvalidArgument("pulse: carrier frequency must be positive");
    }

    bool zero() const { return t_off <= t_on; }

    double operator()(double t) const {
        if (zero() || t <= t_on || t >= t_off) return 0.0;
        const double s = 2.0 * (t - t_on) / (t_off - t_on) - 1.0;
        const double envelope = std::exp(1.0 - 1.0 / (1.0 - s * s));
        return envelope * std::sin(omega * (t - t_on) + phase);
    }
};

// One fixed experiment: domain [0, X], constant sound speed, beta supported
// inside (0, X), probe pulse f1 = f2 at x = 0 and receiver pulse f0 near
// t = T. Node counts are cells + 1 in both axes.
struct Westervelt1DConfig {
    double X = 1.0;
    double c = 1.0;
    double T = 1.5;
    int n_x = 400;
    int n_t = 1200;
    std::function<double(double)> beta;
    Pulse f1;
    Pulse f0;
    double eps1 = 1e-3;
    double eps2 = 1e-3;

    static Westervelt1DConfig standard(int n_x) {
        Westervelt1DConfig cfg;
        cfg.n_x = n_x;
        cfg.n_t = 3 * n_x;  // CFL number 0.5 for c = 1, T = 1.5 X
        // The emitted pulse rides carrier omega; the quadratic interaction
        // radiates at DC and 2*omega, phase-matched with the forward-going
        // wave. The receiver pulse therefore listens at the second harmonic
        // on the far boundary (transmission geometry). Its window [1.05,
        // 1.25] = emitter window + one domain transit, so the backward probe
        // overlays the interaction region exactly; the pi/2 carrier phase
        // puts it in phase with d/dt of the squared pulse rather than in
        // quadrature.
        const double omega = 2.0 * std::numbers::pi * 7.5;
        cfg.f1 = Pulse(0.05, 0.25, omega);
        cfg.f0 = Pulse(1.05, 1.25, 2.0 * omega, 0.5 * std::numbers::pi);
        cfg.beta = [](double x) {
            const double s = (x - 0.5) / 0.06;
            return 0.4 * std::exp(-0.5 * s * s);
        };
        return cfg;
    }

    double dx() const { return X / n_x; }
    double dt() const { return T / n_t; }

    void validate() const {
        if (n_x < 8 || n_t < 8) throw InvalidArgument("westervelt: grid too small");
        if (!(X > 0.0) || !(c > 0.0) || !(T > X / c))
            throw InvalidArgument("westervelt: need X > 0, c > 0, T > X/c");
        if (c * dt() / dx() > 0.5 + 1e-12)
            throw CFLViolation("westervelt: c dt/dx = " + std::to_string(c * dt() / dx()) +
                               " exceeds 0.5");
        if (!beta) throw InvalidArgument("westervelt: beta profile not set");
        if (std::fabs(beta(0.0)) > 1e-12 || std::fabs(beta(X)) > 1e-12)
            throw InvalidArgument("westervelt: beta must vanish at the boundary");
        // Pulses must be identically zero on a 5-step margin at their ends
        // of the time axis so the zero initial/terminal levels are exact.
        if (!f1.zero() && f1.t_on < 5.0 * dt())
            throw InvalidArgument("westervelt: f1 must vanish for the first 5 time steps");
        if (!f0.zero() && f0.t_off > T - 5.0 * dt())
            throw InvalidArgument("westervelt: f0 must vanish for the last 5 time steps");
    }

    std::vector<double> beta_samples() const {
        std::vector<double> b(n_x + 1);
        for (int i = 0; i <= n_x; ++i) b[i] = beta(i * dx());
        return b;
    }
};

// Space-time trace: p[(n_t + 1) x (n_x + 1)] row-major in time, plus
// one-sided second-order Neumann derivatives at both ends.
struct WaveTrace1D {
    int n_x = 0;
    int n_t = 0;
    double dx = 0.0;
    double dt = 0.0;
    std::vector<double> p;

    WaveTrace1D() = default;
    WaveTrace1D(int nx, int nt, double hx, double ht)
        : n_x(nx), n_t(nt), dx(hx), dt(ht),
          p(static_cast<std::size_t>(nt + 1) * (nx + 1), 0.0) {}

    double& at(int n, int i) { return p[static_cast<std::size_t>(n) * (n_x + 1) + i]; }
    double at(int n, int i) const { return p[static_cast<std::size_t>(n) * (n_x + 1) + i]; }

    double dpdx_left(int n) const {
        return (-3.0 * at(n, 0) + 4.0 * at(n, 1) - at(n, 2)) / (2.0 * dx);
    }
    double dpdx_right(int n) const {
        return (3.0 * at(n, n_x) - 4.0 * at(n, n_x - 1) + at(n, n_x - 2)) / (2.0 * dx);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : p) m = std::max(m, std::fabs(v));
        return m;
    }
};

// Explicit scheme for (c^{-2} - 2 beta p) p_tt = p_xx + 2 beta (p_t)^2 with
// the coefficient frozen at the current level and a backward difference in
// the quadratic term:
//   p^{n+1} = 2 p^n - p^{n-1}
//           + dt^2 (D_xx p^n + 2 beta (D_t^- p^n)^2) / (c^{-2} - 2 beta p^n),
// Dirichlet p(t, 0) = amplitude * f(t), p(t, X) = 0, first two levels zero.
inline WaveTrace1D solve_nonlinear(const Westervelt1DConfig& cfg,
                                   const std::function<double(double)>& f, double amplitude) {
    cfg.validate();
    const int nx = cfg.n_x, nt = cfg.n_t;
    const double hx = cfg.dx(), ht = cfg.dt();
    const double inv_c2 = 1.0 / (cfg.c * cfg.c);
    const std::vector<double> beta = cfg.beta_samples();
    WaveTrace1D tr(nx, nt, hx, ht);
    tr.at(0, 0) = amplitude * f(0.0);
    tr.at(1, 0) = amplitude * f(ht);
    for (int n = 1; n < nt; ++n) {
        const double* pm = &tr.p[static_cast<std::size_t>(n - 1) * (nx + 1)];
        const double* pc = &tr.p[static_cast<std::size_t>(n) * (nx + 1)];
        double* pn = &tr.p[static_cast<std::size_t>(n + 1) * (nx + 1)];
        for (int i = 1; i < nx; ++i) {
            const double coef = inv_c2 - 2.0 * beta[i] * pc[i];
            if (coef <= 0.1 * inv_c2)
                throw CoefficientDegenerate(
                    "westervelt: c^-2 - 2 beta p fell to " + std::to_string(coef) +
                    " at step " + std::to_string(n));
            const double dxx = (pc[i + 1] - 2.0 * pc[i] + pc[i - 1]) / (hx * hx);
            const double dtm = (pc[i] - pm[i]) / ht;
            pn[i] = 2.0 * pc[i] - pm[i] +
                    ht * ht * (dxx + 2.0 * beta[i] * dtm * dtm) / coef;
        }
        pn[0] = amplitude * f((n + 1) * ht);
        pn[nx] = 0.0;
    }
    return tr;
}

enum class TimeDirection { forward, backward };
enum class BoundarySide { left, right };

// Linear wave equation c^{-2} p_tt - p_xx = source with the same stencil.
// Backward runs the recursion in reversed time (terminal conditions zero at
// t = T, boundary data read in forward time); the returned trace is in
// forward time orientation. The Dirichlet data f acts on the chosen
// endpoint, zero on the other. `source` may be empty or a full trace.
inline WaveTrace1D solve_linear(const Westervelt1DConfig& cfg,
                                const std::function<double(double)>& f,
                                TimeDirection direction = TimeDirection::forward,
                                const WaveTrace1D* source = nullptr,
                                BoundarySide side = BoundarySide::left) {
    cfg.validate();
    const int nx = cfg.n_x, nt = cfg.n_t;
    const double hx = cfg.dx(), ht = cfg.dt();
    const double c2 = cfg.c * cfg.c;
    const bool back = direction == TimeDirection::backward;
    const int bidx = side == BoundarySide::left ? 0 : nx;
    const int zidx = nx - bidx;
    if (source && (source->n_x != nx || source->n_t != nt))
        throw ShapeMismatch("solve_linear: source trace shape mismatch");
    const auto bdata = [&](int n) {
        return f(back ? cfg.T - n * ht : n * ht);
    };
    const auto src = [&](int n, int i) {
        if (!source) return 0.0;
        return source->at(back ? nt - n : n, i);
    };
    WaveTrace1D tr(nx, nt, hx, ht);
    tr.at(0, bidx) = bdata(0);
    tr.at(1, bidx) = bdata(1);
    for (int n = 1; n < nt; ++n) {
        const double* pm = &tr.p[static_cast<std::size_t>(n - 1) * (nx + 1)];
        const double* pc = &tr.p[static_cast<std::size_t>(n) * (nx + 1)];
        double* pn = &tr.p[static_cast<std::size_t>(n + 1) * (nx + 1)];
        for (int i = 1; i < nx; ++i) {
            const double dxx = (pc[i + 1] - 2.0 * pc[i] + pc[i - 1]) / (hx * hx);
            pn[i] = 2.0 * pc[i] - pm[i] + ht * ht * c2 * (dxx + src(n, i));
        }
        pn[bidx] = bdata(n + 1);
        pn[zidx] = 0.0;
    }
    if (!back) return tr;
    WaveTrace1D fwd(nx, nt, hx, ht);
    for (int n = 0; n <= nt; ++n)
        for (int i = 0; i <= nx; ++i) fwd.at(n, i) = tr.at(nt - n, i);
    return fwd;
}

// Second derivative of the discrete solution map with respect to the two
// boundary amplitudes. The direct form sources the linear stencil with
//   2 beta (u1 D_tt u2 + u2 D_tt u1 + 2 D_t^- u1 D_t^- u2),
// which is the exact epsilon1-epsilon2 derivative of the nonlinear update
// (a centered D_tt of the plain product u1 u2 differs from it by O(dt) and
// would floor the epsilon convergence of the finite-difference stencil).
struct SecondLinearization {
    WaveTrace1D u_fd;
    WaveTrace1D u_direct;
    WaveTrace1D u1;
    WaveTrace1D u2;
};

inline WaveTrace1D polarization_source(const Westervelt1DConfig& cfg, const WaveTrace1D& u1,
                                       const WaveTrace1D& u2) {
    const int nx = cfg.n_x, nt = cfg.n_t;
    const double ht = cfg.dt();
    const std::vector<double> beta = cfg.beta_samples();
    WaveTrace1D s(nx, nt, cfg.dx(), ht);
    for (int n = 1; n < nt; ++n)
        for (int i = 1; i < nx; ++i) {
            const double dtt1 = (u1.at(n + 1, i) - 2.0 * u1.at(n, i) + u1.at(n - 1, i)) / (ht * ht);
            const double dtt2 = (u2.at(n + 1, i) - 2.0 * u2.at(n, i) + u2.at(n - 1, i)) / (ht * ht);
            const double dtm1 = (u1.at(n, i) - u1.at(n - 1, i)) / ht;
            const double dtm2 = (u2.at(n, i) - u2.at(n - 1, i)) / ht;
            s.at(n, i) = 2.0 * beta[i] *
                         (u1.at(n, i) * dtt2 + u2.at(n, i) * dtt1 + 2.0 * dtm1 * dtm2);
        }
    return s;
}

inline SecondLinearization second_linearization(const Westervelt1DConfig& cfg) {
    cfg.validate();
    const std::function<double(double)> f1 = cfg.f1;
    const double e1 = cfg.eps1, e2 = cfg.eps2;
    if (!(e1 > 0.0) || !(e2 > 0.0))
        throw InvalidArgument("westervelt: polarization amplitudes must be positive");

    // f2 = f1, so the three nonzero corners of the stencil are plain
    // amplitude runs; they are independent and run concurrently.
    WaveTrace1D p12, p1, p2;
    std::exception_ptr errs[3] = {};
    const auto guard = [&cfg, &f1](WaveTrace1D& slot, double amp, std::exception_ptr& err) {
        return [&slot, &cfg, &f1, amp, &err] {
            try {
                slot = solve_nonlinear(cfg, f1, amp);
            } catch (...) {
                err = std::current_exception();
            }
        };
    };
    std::thread a(guard(p12, e1 + e2, errs[0]));
    std::thread b(guard(p1, e1, errs[1]));
    std::thread c(guard(p2, e2, errs[2]));
    a.join();
    b.join();
    c.join();
    for (auto& err : errs)
        if (err) std::rethrow_exception(err);

    SecondLinearization out;
    out.u_fd = WaveTrace1D(cfg.n_x, cfg.n_t, cfg.dx(), cfg.dt());
    // p1 + p2 first: addition commutes, so swapping eps1/eps2 is bitwise
    // neutral (the mixed derivative is symmetric).
    for (std::size_t j = 0; j < out.u_fd.p.size(); ++j)
        out.u_fd.p[j] = (p12.p[j] - (p1.p[j] + p2.p[j])) / (e1 * e2);

    out.u1 = solve_linear(cfg, f1, TimeDirection::forward);
    out.u2 = out.u1;
    const WaveTrace1D src = polarization_source(cfg, out.u1, out.u2);
    out.u_direct = solve_linear(cfg, [](double) { return 0.0; }, TimeDirection::forward, &src);
    return out;
}

struct IdentityReport {
    double lhs;
    double rhs;
    double relative_gap;
};

// Certifies the integration-by-parts identity: with U the second
// linearization (direct form) and u0 the backward solve driven by f0,
//   int_0^T dnu U * u0_data summed over both endpoints
//     = 2 int int beta d_t(u1 u2) d_t u0.
// f0 acts on the far (x = X) endpoint and the x = 0 data is zero: the
// forward-going second harmonic is the phase-matched one, so the receiver
// sits across from the emitter. The outward normal derivative is +d/dx at
// x = X and -d/dx at x = 0.
inline IdentityReport verify_integral_identity(const Westervelt1DConfig& cfg) {
    cfg.validate();
    SecondLinearization lin = second_linearization(cfg);
    const WaveTrace1D u0 =
        solve_linear(cfg, cfg.f0, TimeDirection::backward, nullptr, BoundarySide::right);

    const int nx = cfg.n_x, nt = cfg.n_t;
    const double hx = cfg.dx(), ht = cfg.dt();

    double lhs = 0.0;
    for (int n = 0; n <= nt; ++n) {
        const double wt = (n == 0 || n == nt) ? 0.5 : 1.0;
        const double left = -lin.u_direct.dpdx_left(n) * 0.0;
        const double right = lin.u_direct.dpdx_right(n) * cfg.f0(n * ht);
        lhs += wt * (left + right);
    }
    lhs *= ht;

    const std::vector<double> beta = cfg.beta_samples();
    double rhs = 0.0;
    for (int n = 1; n < nt; ++n)
        for (int i = 0; i <= nx; ++i) {
            if (beta[i] == 0.0) continue;
            const double w = lin.u1.at(n, i) * lin.u2.at(n, i);
            const double wp = lin.u1.at(n + 1, i) * lin.u2.at(n + 1, i);
            const double wm = lin.u1.at(n - 1, i) * lin.u2.at(n - 1, i);
            const double dtw = (wp - wm) / (2.0 * ht);
            const double dtu0 = (u0.at(n + 1, i) - u0.at(n - 1, i)) / (2.0 * ht);
            const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
            rhs += wx * beta[i] * dtw * dtu0;
        }
    rhs *= 2.0 * hx * ht;

    const double denom = std::max(std::fabs(lhs), std::fabs(rhs));
    if (denom < 1e-14) {
        bool beta_zero = true;
        for (double b : beta)
            if (b != 0.0) beta_zero = false;
        if (!beta_zero)
            throw DegenerateIdentity(
                "integral identity: both sides vanish with beta != 0; pulses do not interact");
        return {lhs, rhs, 0.0};
    }
    return {lhs, rhs, std::fabs(lhs - rhs) / denom};
}

}  // namespace ptomo
