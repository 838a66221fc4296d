#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "ptomo/grid.hpp"
#include "ptomo/inversion.hpp"
#include "ptomo/paraxial.hpp"
#include "ptomo/phantom.hpp"
#include "ptomo/sinogram.hpp"

using ptomo::cplx;
using std::numbers::pi;

namespace {

ptomo::Sinogram random_sinogram(int n_angles, int ny, const ptomo::WaveParams& wp,
                                std::uint64_t seed) {
    ptomo::Sinogram s(ptomo::uniform_angles(n_angles, 360.0 / n_angles), ny, wp);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (cplx& v : s.values()) v = {uni(rng), uni(rng)};
    return s;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("ramp profile matches hand values") {
    ptomo::RampFilterSpec spec;  // ramlak, cutoff 1

    SECTION("full band") {
        const std::vector<double> w = ptomo::ramp_profile(8, 0.25, spec);
        const std::vector<double> want = {0.0, pi, 2 * pi, 3 * pi, 4 * pi, 3 * pi, 2 * pi, pi};
        for (int m = 0; m < 8; ++m) REQUIRE(w[m] == Catch::Approx(want[m]).margin(1e-13));
    }
    SECTION("half-band cutoff zeroes bins above it") {
        spec.cutoff_fraction = 0.5;
        const std::vector<double> w = ptomo::ramp_profile(8, 0.25, spec);
        const std::vector<double> want = {0.0, pi, 2 * pi, 0.0, 0.0, 0.0, 2 * pi, pi};
        for (int m = 0; m < 8; ++m) REQUIRE(w[m] == Catch::Approx(want[m]).margin(1e-13));
    }
    SECTION("hann taper") {
        spec.kind = ptomo::FilterKind::ramlak_hann;
        const std::vector<double> w = ptomo::ramp_profile(8, 0.25, spec);
        REQUIRE(w[1] == Catch::Approx(pi * 0.5 * (1.0 + std::cos(pi / 4.0))).margin(1e-13));
        REQUIRE(w[4] == Catch::Approx(0.0).margin(1e-13));
        REQUIRE(w[7] == w[1]);
    }
    SECTION("too few samples") {
        CHECK_THROWS_AS(ptomo::ramp_profile(3, 0.1, spec), ptomo::TooFewSamples);
    }
    SECTION("spec parsing") {
        CHECK(ptomo::RampFilterSpec::parse("ramlak_hann", 0.8).kind ==
              ptomo::FilterKind::ramlak_hann);
        CHECK_THROWS_AS(ptomo::RampFilterSpec::parse("boxcar", 1.0), ptomo::ValueOutOfRange);
        CHECK_THROWS_AS(ptomo::RampFilterSpec::parse("ramlak", 0.0), ptomo::ValueOutOfRange);
        CHECK_THROWS_AS(ptomo::RampFilterSpec::parse("ramlak", 1.5), ptomo::ValueOutOfRange);
    }
}

TEST_CASE("ramp filter fixes DFT basis vectors") {
    const int n = 16, m = 5;
    ptomo::WaveParams wp(1.0, 20.0);
    ptomo::Sinogram s(ptomo::uniform_angles(1, 1.0), n, wp);
    for (int j = 0; j < n; ++j)
        s.at(0, j) = std::exp(cplx{0.0, 2.0 * pi * m * j / n});
    ptomo::RampFilterSpec spec;
    const std::vector<double> w = ptomo::ramp_profile(n, s.dy(), spec);
    ptomo::Sinogram f = ptomo::ramp_filter(s, spec);
    for (int j = 0; j < n; ++j)
        REQUIRE(std::abs(f.at(0, j) - w[m] * s.at(0, j)) <= 1e-12 * w[m]);
}

TEST_CASE("filtered impulse matches a direct DFT evaluation") {
    const int n = 64, j0 = 19;
    ptomo::WaveParams wp(1.0, 20.0);
    ptomo::Sinogram s(ptomo::uniform_angles(1, 1.0), n, wp);
    s.at(0, j0) = 1.0;
    ptomo::RampFilterSpec spec;
    ptomo::Sinogram f = ptomo::ramp_filter(s, spec);

    const std::vector<double> w = ptomo::ramp_profile(n, s.dy(), spec);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        cplx want{};
        for (int m = 0; m < n; ++m)
            want += w[m] * std::exp(cplx{0.0, 2.0 * pi * m * (j - j0) / n});
        want /= static_cast<double>(n);
        worst = std::max(worst, std::abs(f.at(0, j) - want));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("ramp filter is linear and self-adjoint") {
    ptomo::WaveParams wp(1.0, 20.0);
    ptomo::RampFilterSpec spec;
    ptomo::Sinogram a = random_sinogram(4, 32, wp, 5);
    ptomo::Sinogram b = random_sinogram(4, 32, wp, 6);

    ptomo::Sinogram fa = ptomo::ramp_filter(a, spec);
    ptomo::Sinogram fb = ptomo::ramp_filter(b, spec);

    SECTION("self-adjoint under the sinogram pairing") {
        const cplx lhs = fa.inner(b);
        const cplx rhs = a.inner(fb);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
    SECTION("linear") {
        ptomo::Sinogram mix = a;
        for (std::size_t i = 0; i < mix.values().size(); ++i)
            mix.values()[i] = 2.5 * a.values()[i] - b.values()[i];
        ptomo::Sinogram fm = ptomo::ramp_filter(mix, spec);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fm.values().size(); ++i) {
            const cplx want = 2.5 * fa.values()[i] - fb.values()[i];
            num += std::norm(fm.values()[i] - want);
            den += std::norm(want);
        }
        CHECK(std::sqrt(num / den) <= 1e-12);
    }
    SECTION("zero stays zero") {
        ptomo::Sinogram z(a.angles(), a.ny(), wp);
        ptomo::Sinogram fz = ptomo::ramp_filter(z, spec);
        for (const cplx& v : fz.values()) REQUIRE(std::abs(v) == 0.0);
    }
}

TEST_CASE("adjoint of zero sinogram is a zero field") {
    ptomo::WaveParams wp(1.0, 20.0);
    ptomo::Sinogram z(ptomo::uniform_angles(6, 30.0), 33, wp);
    ptomo::RealField f = ptomo::adjoint_map(z);
    for (double v : f.values()) REQUIRE(v == 0.0);
}

TEST_CASE("forward and adjoint pass the dot test") {
    SECTION("64x64, 8 angles") {
        const auto r = ptomo::adjoint_dot_test(64, 8, 42);
        INFO("lhs " << r.lhs << " rhs " << r.rhs);
        CHECK(r.relative_gap <= 1e-10);
    }
    SECTION("32x32, 5 angles") {
        CHECK(ptomo::adjoint_dot_test(32, 5, 7).relative_gap <= 1e-10);
    }
    SECTION("48x48, 3 angles, long wavelength") {
        CHECK(ptomo::adjoint_dot_test(48, 3, 99, 12.0).relative_gap <= 1e-10);
    }
}

TEST_CASE("single-angle adjoint equals the dense transpose matrix") {
    const int n = 32;
    ptomo::Grid2D g(n, n, 1.0);
    ptomo::WaveParams wp(1.0, 30.0);
    ptomo::EnvelopeMarcher marcher(g, wp);

    // Columns of the forward map beta -> exit profile, from basis fields.
    Eigen::MatrixXcd F(n, n * n);
    for (int col = 0; col < n * n; ++col) {
        ptomo::ComplexField basis(g);
        basis.values()[col] = 1.0;
        const std::vector<cplx> out = marcher.final_slice(basis);
        for (int i = 0; i < n; ++i) F(i, col) = out[i];
    }

    ptomo::Sinogram eta(ptomo::uniform_angles(1, 1.0), n, wp);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    auto check_against_dense = [&](const char* label) {
        Eigen::VectorXcd ev(n);
        for (int i = 0; i < n; ++i) ev(i) = eta.at(0, i);
        const Eigen::VectorXcd dense = F.adjoint() * ev;
        const double scale = eta.angle_step() / g.dx();
        const ptomo::ComplexField got = ptomo::adjoint_map_complex(eta);
        double num = 0.0, den = 0.0;
        for (int col = 0; col < n * n; ++col) {
            num += std::norm(got.values()[col] - scale * dense(col));
            den += std::norm(scale * dense(col));
        }
        INFO(label);
        CHECK(std::sqrt(num / std::max(den, 1e-300)) <= 1e-12);
    };

    SECTION("terminal impulse stays inside the widening cone") {
        const int y0 = 20;
        eta.at(0, y0) = 1.0;
        check_against_dense("impulse data");

        const ptomo::ComplexField field = ptomo::adjoint_map_complex(eta);
        double peak = 0.0;
        for (const cplx& v : field.values()) peak = std::max(peak, std::abs(v));
        REQUIRE(peak > 0.0);
        // One transverse node per reverse step plus the solver's
        // exponentially decaying skirt.
        const int pad = 8;
        for (int ix = 0; ix < n; ++ix)
            for (int iy = 0; iy < n; ++iy) {
                const int reach = (n - 1 - ix) + pad;
                if (std::abs(iy - y0) > reach)
                    REQUIRE(std::abs(field.at(ix, iy)) <= 1e-10 * peak);
            }
    }
    SECTION("random data") {
        for (int i = 1; i + 1 < n; ++i) eta.at(0, i) = {uni(rng), uni(rng)};
        check_against_dense("random data");
    }
}

TEST_CASE("metrics report the standard image comparisons") {
    ptomo::Grid2D g(32, 32, 1.0);
    ptomo::Phantom truth = ptomo::disk(g, 0.0, 0.0, 0.2);

    SECTION("identical images") {
        const ptomo::Metrics m = ptomo::metrics(truth.field, truth.field);
        CHECK(m.relative_l2_error == 0.0);
        CHECK(m.normalized_cross_correlation == Catch::Approx(1.0).margin(1e-14));
        CHECK(m.psnr_db == 300.0);
    }
    SECTION("zero reconstruction") {
        const ptomo::Metrics m = ptomo::metrics(ptomo::RealField(g), truth.field);
        CHECK(m.relative_l2_error == Catch::Approx(1.0).margin(1e-14));
        CHECK(m.normalized_cross_correlation == 0.0);
    }
    SECTION("doubled amplitude") {
        ptomo::RealField twice = truth.field;
        for (double& v : twice.values()) v *= 2.0;
        const ptomo::Metrics m = ptomo::metrics(twice, truth.field);
        CHECK(m.relative_l2_error == Catch::Approx(1.0).margin(1e-14));
        CHECK(m.normalized_cross_correlation == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("zero truth rejected") {
        CHECK_THROWS_AS(ptomo::metrics(truth.field, ptomo::RealField(g)), ptomo::ZeroTruth);
    }
    SECTION("grid mismatch rejected") {
        ptomo::Grid2D other(33, 33, 1.0);
        CHECK_THROWS_AS(ptomo::metrics(ptomo::RealField(other), truth.field),
                        ptomo::GridMismatch);
    }
}

TEST_CASE("reconstructing a zero sinogram gives a zero image at unit scale") {
    ptomo::WaveParams wp(1.0, 20.0);
    ptomo::Sinogram z(ptomo::uniform_angles(8, 20.0), 33, wp);
    const ptomo::ReconReport r = ptomo::reconstruct(z, ptomo::RampFilterSpec{});
    CHECK(r.calibration_scale == 1.0);
    CHECK_FALSE(r.vs_truth.has_value());
    for (double v : r.reconstruction.values()) REQUIRE(v == 0.0);
}

TEST_CASE("reconstruction is linear in the sinogram at fixed scale") {
    ptomo::Grid2D g(64, 64, 1.0);
    ptomo::WaveParams wp(1.0, 40.0);
    ptomo::Phantom ph = ptomo::gaussian_bump(g, 0.1, -0.05, 0.09);
    ptomo::Sinogram s = ptomo::forward_map(ph.field, ptomo::uniform_angles(24, 7.5), wp, 4);
    ptomo::Sinogram s2 = s;
    for (cplx& v : s2.values()) v *= 2.0;

    const ptomo::ReconReport r1 = ptomo::reconstruct(s, ptomo::RampFilterSpec{}, nullptr, 4);
    const ptomo::ReconReport r2 = ptomo::reconstruct(s2, ptomo::RampFilterSpec{}, nullptr, 4);
    CHECK(r1.calibration_scale == r2.calibration_scale);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r1.reconstruction.values().size(); ++i) {
        const double want = 2.0 * r1.reconstruction.values()[i];
        num += (r2.reconstruction.values()[i] - want) * (r2.reconstruction.values()[i] - want);
        den += want * want;
    }
    CHECK(std::sqrt(num / den) <= 1e-12);
}

TEST_CASE("disk phantom reconstructs with high correlation") {
    const int n = 128;
    ptomo::Grid2D g(n, n, 1.0);
    ptomo::WaveParams wp(1.0, 100.0);
    ptomo::Phantom truth = ptomo::disk(g, 0.06, -0.04, 0.18);
    ptomo::Sinogram s = ptomo::forward_map(truth.field, ptomo::uniform_angles(360, 1.0), wp, 8);
    const ptomo::ReconReport r =
        ptomo::reconstruct(s, ptomo::RampFilterSpec{}, &truth.field, 8);
    REQUIRE(r.vs_truth.has_value());
    INFO("ncc " << r.vs_truth->normalized_cross_correlation << " scale "
                << r.calibration_scale);
    CHECK(r.calibration_scale > 0.0);
    CHECK(r.vs_truth->normalized_cross_correlation >= 0.9);
    CHECK(r.vs_truth->psnr_db > 0.0);
}

TEST_CASE("reconstruction commutes with phantom rotation") {
    const int n = 256;
    ptomo::Grid2D g(n, n, 1.0);
    ptomo::WaveParams wp(1.0, 60.0);
    const double theta0 = 2.0 * pi / 180.0 * 9.0;  // nine 2-degree steps

    ptomo::RealField beta(g);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = g.x(i) - 0.12, y = g.y(j) + 0.05;
            beta.at(i, j) = std::exp(-(x * x + 4.0 * y * y) / (2.0 * 0.07 * 0.07));
        }
    const ptomo::RotationOperator rot(theta0, g);
    const ptomo::RealField beta_rot = ptomo::rotate(rot, beta);

    auto angles = ptomo::uniform_angles(180, 2.0);
    ptomo::RampFilterSpec spec;
    const ptomo::ReconReport base =
        ptomo::reconstruct(ptomo::forward_map(beta, angles, wp, 8), spec, nullptr, 8);
    const ptomo::ReconReport moved =
        ptomo::reconstruct(ptomo::forward_map(beta_rot, angles, wp, 8), spec, nullptr, 8);

    // Corners of the square domain leave the field of view under rotation,
    // so compare over the inscribed circle only.
    const ptomo::RealField base_rot = ptomo::rotate(rot, base.reconstruction);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (std::hypot(g.x(i), g.y(j)) > 0.5 * g.length()) continue;
            const double d = moved.reconstruction.at(i, j) - base_rot.at(i, j);
            num += d * d;
            den += base_rot.at(i, j) * base_rot.at(i, j);
        }
    const double err = std::sqrt(num / den);
    INFO("equivariance rel l2 " << err);
    CHECK(err <= 5e-2);
}

TEST_CASE("right-angle rotation shifts the pipeline exactly") {
    // At 90 degrees the discrete rotation is an index permutation and the
    // angle set maps onto itself, so equivariance holds to roundoff.
    const int n = 128;
    ptomo::Grid2D g(n, n, 1.0);
    ptomo::WaveParams wp(1.0, 40.0);
    ptomo::Phantom ph = ptomo::gaussian_bump(g, 0.1, -0.07, 0.06);

    const ptomo::RotationOperator rot(std::numbers::pi / 2.0, g);
    const ptomo::RealField beta_rot = ptomo::rotate(rot, ph.field);

    auto angles = ptomo::uniform_angles(180, 2.0);
    ptomo::RampFilterSpec spec;
    const ptomo::ReconReport base =
        ptomo::reconstruct(ptomo::forward_map(ph.field, angles, wp, 8), spec, nullptr, 8);
    const ptomo::ReconReport moved =
        ptomo::reconstruct(ptomo::forward_map(beta_rot, angles, wp, 8), spec, nullptr, 8);

    const ptomo::RealField base_rot = ptomo::rotate(rot, base.reconstruction);
    const double err = rel_l2(moved.reconstruction.values(), base_rot.values());
    INFO("right-angle equivariance rel l2 " << err);
    CHECK(err <= 1e-10);
}
