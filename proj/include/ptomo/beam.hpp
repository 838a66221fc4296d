#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptomo/errors.hpp"
#include "ptomo/grid.hpp"

namespace ptomo {

// Curvature data along a geodesic: tau -> symmetric 3x3 matrix D(tau) on
// [tau_minus, tau_plus]. D is an input here; building it from a metric is
// out of scope.
class CurvatureProfile {
public:
    CurvatureProfile(std::function<Eigen::Matrix3d(double)> d, double tau_minus, double tau_plus)
        : d_(std::move(d)), tau_minus_(tau_minus), tau_plus_(tau_plus) {
        if (!(tau_plus_ > tau_minus_))
            throw InvalidArgument("curvature profile: empty parameter interval");
    }

    static CurvatureProfile flat(double tau_minus, double tau_plus) {
        return CurvatureProfile([](double) { return Eigen::Matrix3d::Zero().eval(); }, tau_minus,
                                tau_plus);
    }

    static CurvatureProfile constant(double kappa, double tau_minus, double tau_plus) {
        Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
        d(1, 1) = kappa;
        d(2, 2) = kappa;
        return CurvatureProfile([d](double) { return d; }, tau_minus, tau_plus);
    }

    // Piecewise-linear profile from uniform samples over [0, span]; each row
    // holds the six independent entries (D11, D12, D13, D22, D23, D33).
    static CurvatureProfile table(const std::vector<std::array<double, 6>>& rows, double span) {
        if (rows.size() < 2) throw TooFewSamples("curvature table needs >= 2 samples");
        if (!(span > 0.0)) throw InvalidArgument("curvature table span must be positive");
        auto eval = [rows, span](double tau) {
            const double s = std::clamp(tau / span, 0.0, 1.0) * (rows.size() - 1);
            const std::size_t i0 = std::min(static_cast<std::size_t>(s), rows.size() - 2);
            const double f = s - i0;
            std::array<double, 6> e;
            for (int j = 0; j < 6; ++j) e[j] = (1 - f) * rows[i0][j] + f * rows[i0 + 1][j];
            Eigen::Matrix3d d;
            d << e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5];
            return d;
        };
        return CurvatureProfile(eval, 0.0, span);
    }

    Eigen::Matrix3d at(double tau) const {
        Eigen::Matrix3d d = d_(tau);
        if ((d - d.transpose()).norm() > 1e-12 * (1.0 + d.norm()))
            throw InvalidArgument("curvature profile: D(tau) not symmetric");
        return d;
    }

    double tau_minus() const { return tau_minus_; }
    double tau_plus() const { return tau_plus_; }

private:
    std::function<Eigen::Matrix3d(double)> d_;
    double tau_minus_;
    double tau_plus_;
};

struct RiccatiState {
    double tau;
    Eigen::Matrix3cd H;
    Eigen::Matrix3cd Y;
    Eigen::Matrix3cd Z;
};

namespace detail {

inline const Eigen::Matrix3d& c_matrix() {
    static const Eigen::Matrix3d c = [] {
        Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
        m(1, 1) = 2.0;
        m(2, 2) = 2.0;
        return m;
    }();
    return c;
}

}  // namespace detail

// Integrates the linear system Y' = C Z, Z' = -D(tau) Y with the classical
// 4th-order one-step method and attaches H = Z Y^{-1} at every sample.
// The Riccati equation H' + HCH + D = 0 is solved through this linear route,
// which cannot blow up; det Y hitting zero signals a conjugate point.
//
// Im(H0) must be positive semidefinite; positivity along the trajectory is
// asserted only when Im(H0) is strictly positive definite (the transverse
// Jacobi setup Y1|_perp = 0 legitimately starts with Im H0 = 0).
inline std::vector<RiccatiState> solve_yz(const CurvatureProfile& profile,
                                          const Eigen::Matrix3cd& y0, const Eigen::Matrix3cd& y1,
                                          double step) {
    const double t0 = profile.tau_minus(), t1 = profile.tau_plus();
    if (!(step > 0.0) || step > (t1 - t0) / 10.0 + 1e-15)
        throw InvalidArgument("riccati step must be positive and <= interval/10");

    Eigen::PartialPivLU<Eigen::Matrix3cd> y0lu(y0);
    if (std::abs(y0lu.determinant()) < 1e-12)
        throw InvalidArgument("riccati: Y0 is singular");
    const Eigen::Matrix3cd h0 = y1 * y0lu.inverse();
    const Eigen::Matrix3d im0 = h0.imag();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es0(0.5 * (im0 + im0.transpose()));
    const double min_eig0 = es0.eigenvalues().minCoeff();
    if (min_eig0 < -1e-10)
        throw InvalidArgument("riccati: Im(Y1 Y0^{-1}) must be positive semidefinite");
    const bool strict = min_eig0 > 1e-10;

    const Eigen::Matrix3d& c = detail::c_matrix();
    const auto rhs = [&](double tau, const Eigen::Matrix3cd& y, const Eigen::Matrix3cd& z,
                         Eigen::Matrix3cd& dy, Eigen::Matrix3cd& dz) {
        dy = c * z;
        dz = -profile.at(tau) * y;
    };

    std::vector<RiccatiState> out;
    const int n_steps = static_cast<int>(std::ceil((t1 - t0) / step - 1e-12));
    out.reserve(n_steps + 1);

    Eigen::Matrix3cd y = y0, z = y1;
    double tau = t0;
    const auto attach = [&](double t, const Eigen::Matrix3cd& yy, const Eigen::Matrix3cd& zz) {
        Eigen::PartialPivLU<Eigen::Matrix3cd> lu(yy);
        if (std::abs(lu.determinant()) < 1e-12)
            throw ConjugatePointOrBlowup("riccati: |det Y| below 1e-12 at tau = " +
                                         std::to_string(t));
        RiccatiState st{t, zz * lu.inverse(), yy, zz};
        const double hn = st.H.norm();
        if (hn > 0.0 && (st.H - st.H.transpose()).norm() > 1e-10 * hn)
            throw Error("riccati: H lost symmetry at tau = " + std::to_string(t));
        if (strict) {
            Eigen::Matrix3d im = st.H.imag();
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (im + im.transpose()));
            if (!(es.eigenvalues().minCoeff() > 0.0))
                throw Error("riccati: Im H lost positivity at tau = " + std::to_string(t));
        }
        if ((st.Z - st.H * st.Y).norm() > 1e-8 * (1.0 + st.Z.norm()))
            throw Error("riccati: H != Z Y^{-1} at tau = " + std::to_string(t));
        out.push_back(std::move(st));
    };
    attach(tau, y, z);

    for (int i = 0; i < n_steps; ++i) {
        const double h = std::min(step, t1 - tau);
        Eigen::Matrix3cd k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z;
        rhs(tau, y, z, k1y, k1z);
        rhs(tau + 0.5 * h, y + 0.5 * h * k1y, z + 0.5 * h * k1z, k2y, k2z);
        rhs(tau + 0.5 * h, y + 0.5 * h * k2y, z + 0.5 * h * k2z, k3y, k3z);
        rhs(tau + h, y + h * k3y, z + h * k3z, k4y, k4z);
        y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        z += (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        tau += h;
        attach(tau, y, z);
    }
    return out;
}

// det(Im H) |det Y|^2 per sample; constant along exact trajectories.
inline std::vector<double> conserved_c0(const std::vector<RiccatiState>& states) {
    if (states.empty()) throw InvalidArgument("conserved_c0: empty trajectory");
    std::vector<double> c0;
    c0.reserve(states.size());
    for (const RiccatiState& st : states) {
        const double det_im = st.H.imag().determinant();
        const double det_y = std::norm(st.Y.determinant());
        c0.push_back(det_im * det_y);
    }
    return c0;
}

// Largest relative deviation from the mean, used to certify conservation.
inline double max_relative_drift(const std::vector<double>& values) {
    if (values.empty()) throw InvalidArgument("max_relative_drift: empty sequence");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    if (std::fabs(mean) < 1e-300) throw InvalidArgument("max_relative_drift: zero mean");
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, std::fabs(v - mean));
    return worst / std::fabs(mean);
}

// Closed-form flat-space solution for Y0 = I, Y1 = iI:
// Y = I + i tau C, H = diag(i, i/(1+2i tau), i/(1+2i tau)).
inline RiccatiState flat_closed_form(double tau) {
    const cplx i{0.0, 1.0};
    RiccatiState st;
    st.tau = tau;
    st.Y = Eigen::Matrix3cd::Identity() + i * tau * detail::c_matrix();
    st.Z = i * Eigen::Matrix3cd::Identity();
    st.H = Eigen::Matrix3cd::Zero();
    st.H(0, 0) = i;
    st.H(1, 1) = i / (1.0 + 2.0 * i * tau);
    st.H(2, 2) = st.H(1, 1);
    return st;
}

// Transverse 2x2 Jacobi block along a geodesic, as a dense-output function.
class TransversalJacobi {
public:
    TransversalJacobi(std::function<Eigen::Matrix2d(double)> f, double t0, double t1)
        : f_(std::move(f)), t0_(t0), t1_(t1) {
        if (!(t1_ > t0_)) throw InvalidArgument("transversal jacobi: empty interval");
    }

    static TransversalJacobi identity(double t0, double t1) {
        return TransversalJacobi([](double) { return Eigen::Matrix2d::Identity().eval(); }, t0,
                                 t1);
    }

    Eigen::Matrix2d at(double t) const { return f_(t); }
    double t0() const { return t0_; }
    double t1() const { return t1_; }

private:
    std::function<Eigen::Matrix2d(double)> f_;
    double t0_;
    double t1_;
};

// Extracts the transverse block of Re Y from a solve_yz trajectory as a
// cubic Hermite interpolant (derivatives from Y' = C Z, so the dense output
// keeps the integrator's order between samples). The imaginary transverse
// block must vanish, which is the Y1|_perp = 0 setup.
inline TransversalJacobi transverse_jacobi_from_states(const std::vector<RiccatiState>& states) {
    if (states.size() < 2) throw TooFewSamples("need >= 2 riccati samples");
    struct Node {
        double tau;
        Eigen::Matrix2d y;
        Eigen::Matrix2d dy;
    };
    auto nodes = std::make_shared<std::vector<Node>>();
    nodes->reserve(states.size());
    for (const RiccatiState& st : states) {
        if (st.Y.bottomRightCorner<2, 2>().imag().norm() > 1e-10)
            throw InvalidArgument("transverse block of Y is not real");
        Node n;
        n.tau = st.tau;
        n.y = st.Y.bottomRightCorner<2, 2>().real();
        // Y' = C Z; the transverse block of C is 2 I.
        n.dy = 2.0 * st.Z.bottomRightCorner<2, 2>().real();
        nodes->push_back(n);
    }
    const double t0 = nodes->front().tau, t1 = nodes->back().tau;
    auto eval = [nodes](double t) {
        const auto& v = *nodes;
        std::size_t lo = 0, hi = v.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (v[mid].tau <= t ? lo : hi) = mid;
        }
        const double h = v[hi].tau - v[lo].tau;
        const double s = h > 0.0 ? std::clamp((t - v[lo].tau) / h, 0.0, 1.0) : 0.0;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * v[lo].y + (s3 - 2 * s2 + s) * h * v[lo].dy +
               (-2 * s3 + 3 * s2) * v[hi].y + (s3 - s2) * h * v[hi].dy;
    };
    return TransversalJacobi(eval, t0, t1);
}

// Weighted line integral int f(t) (det Ytilde(t))^{-1/2} dt by composite
// Simpson. The square-root branch is continued along the path; a sign change
// of det Ytilde means a conjugate point and aborts.
inline cplx jacobi_ray_transform(const std::function<double(double)>& f,
                                 const TransversalJacobi& ytilde, double t0, double t1,
                                 int panels = 512) {
    if (!(t1 > t0)) throw InvalidArgument("jacobi transform: empty interval");
    if (panels < 2) throw InvalidArgument("jacobi transform: need >= 2 panels");
    const int n = panels % 2 == 0 ? panels : panels + 1;  // Simpson needs even count
    const double h = (t1 - t0) / n;
    cplx prev_root{};
    bool have_prev = false;
    double prev_det = 0.0;
    cplx acc{};
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + i * h;
        const double det = ytilde.at(t).determinant();
        if (std::fabs(det) < 1e-14)
            throw ConjugatePoint("det Ytilde vanishes at t = " + std::to_string(t));
        if (have_prev && det * prev_det < 0.0)
            throw ConjugatePoint("det Ytilde changes sign near t = " + std::to_string(t));
        cplx root = std::sqrt(cplx(det));
        if (have_prev && std::abs(root - prev_root) > std::abs(root + prev_root)) root = -root;
        const double weight = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += weight * f(t) / root;
        prev_root = root;
        prev_det = det;
        have_prev = true;
    }
    return acc * (h / 3.0);
}

// Straight line in the plane: point(t) = s * (-sin phi, cos phi) + t * (cos phi, sin phi).
struct Line2D {
    double offset;
    double phi;

    double px(double t) const { return -offset * std::sin(phi) + t * std::cos(phi); }
    double py(double t) const { return offset * std::cos(phi) + t * std::sin(phi); }
};

struct XrayResult {
    double value;
    bool intersects;
};

namespace detail {

// Clip the line parameter to the square [-half, half]^2 (Liang-Barsky).
inline bool clip_to_square(const Line2D& line, double half, double& t_lo, double& t_hi) {
    const double ox = -line.offset * std::sin(line.phi);
    const double oy = line.offset * std::cos(line.phi);
    const double dx = std::cos(line.phi), dy = std::sin(line.phi);
    t_lo = -std::numeric_limits<double>::infinity();
    t_hi = std::numeric_limits<double>::infinity();
    const auto axis = [&](double o, double d) {
        if (std::fabs(d) < 1e-300) return std::fabs(o) <= half;
        double a = (-half - o) / d, b = (half - o) / d;
        if (a > b) std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
        return true;
    };
    if (!axis(ox, dx) || !axis(oy, dy)) return false;
    return t_hi > t_lo;
}

}  // namespace detail

// Line integral of a pointwise function over its intersection with the
// square of side `length`, composite trapezoid at the given spacing.
inline XrayResult xray_transform(const std::function<double(double, double)>& f, double length,
                                 const Line2D& line, double spacing) {
    if (!(spacing > 0.0)) throw InvalidArgument("xray: spacing must be positive");
    double t_lo, t_hi;
    if (!detail::clip_to_square(line, 0.5 * length, t_lo, t_hi)) return {0.0, false};
    const int n = std::max(2, static_cast<int>(std::ceil((t_hi - t_lo) / spacing)));
    const double h = (t_hi - t_lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = t_lo + i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * f(line.px(t), line.py(t));
    }
    return {acc * h, true};
}

// Raster version: bilinear samples at spacing min(dx, dy)/4.
inline XrayResult xray_transform(const RealField& f, const Line2D& line) {
    const double spacing = std::min(f.grid().dx(), f.grid().dy()) / 4.0;
    return xray_transform([&f](double x, double y) { return f.sample(x, y); },
                          f.grid().length(), line, spacing);
}

}  // namespace ptomo
