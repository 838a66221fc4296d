#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "ptomo/grid.hpp"
#include "ptomo/io.hpp"
#include "ptomo/phantom.hpp"

namespace fs = std::filesystem;

namespace {
std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("ptomo_ph_" + name)).string();
}
}  // namespace

TEST_CASE("ellipse table center value") {
    // Every ellipse containing the origin contributes its intensity. For the
    // canonical table that is the two nested skull ellipses and the two small
    // high spots near the center line: 2.0 - 0.98 = 1.02 raw, 0.51 after
    // normalizing by the table maximum 2.0.
    CHECK(ptomo::shepp_logan_point(0.0, 0.0, 2.0) == Catch::Approx(1.02).epsilon(1e-12));

    ptomo::Grid2D g(65, 65, 2.0);
    ptomo::Phantom ph = ptomo::shepp_logan(g);
    CHECK(ph.field.at(32, 32) == Catch::Approx(0.51).epsilon(1e-12));
    CHECK(ph.name == "shepp-logan");
}

TEST_CASE("shepp-logan support, range, and mass") {
    ptomo::Grid2D g(129, 129, 2.0);
    ptomo::Phantom ph = ptomo::shepp_logan(g);

    double mx = 0.0, mass = 0.0;
    for (double v : ph.field.values()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        mx = std::max(mx, v);
        mass += v;
    }
    CHECK(mx == 1.0);
    CHECK(mass > 0.0);

    // Outside the outer ellipse (corner region) the map vanishes.
    CHECK(ph.field.sample(0.9, 0.9) == 0.0);
    CHECK(ptomo::shepp_logan_point(0.8, 0.0, 2.0) == 0.0);

    // Compact support: a 2-cell boundary margin is identically zero.
    for (int i = 0; i < 129; ++i)
        for (int c = 0; c < 2; ++c) {
            REQUIRE(ph.field.at(i, c) == 0.0);
            REQUIRE(ph.field.at(i, 128 - c) == 0.0);
            REQUIRE(ph.field.at(c, i) == 0.0);
            REQUIRE(ph.field.at(128 - c, i) == 0.0);
        }
}

TEST_CASE("shepp-logan is stable under cell-doubling refinement") {
    // Node-centered grids double their resolution at 2n-1 nodes; the coarse
    // nodes are then a subset of the fine ones, so bilinear downsampling is
    // exact sampling and any difference is pure normalization drift.
    ptomo::Grid2D coarse(129, 129, 2.0), fine(257, 257, 2.0);
    ptomo::Phantom pc = ptomo::shepp_logan(coarse);
    ptomo::Phantom pf = ptomo::shepp_logan(fine);

    double num = 0.0, den = 0.0;
    for (int i = 0; i < 129; ++i)
        for (int j = 0; j < 129; ++j) {
            const double down = pf.field.sample(coarse.x(i), coarse.y(j));
            const double d = down - pc.field.at(i, j);
            num += d * d;
            den += pc.field.at(i, j) * pc.field.at(i, j);
        }
    CHECK(std::sqrt(num / den) <= 0.02);
}

TEST_CASE("disk and gaussian generators") {
    ptomo::Grid2D g(101, 101, 1.0);
    ptomo::Phantom d = ptomo::disk(g, 0.1, -0.05, 0.2, 0.8);
    CHECK(d.field.sample(0.1, -0.05) == Catch::Approx(0.8));
    CHECK(d.field.sample(0.45, 0.4) == 0.0);
    CHECK(d.field.sample(0.1 + 0.1, -0.05) == Catch::Approx(0.8));

    ptomo::Phantom b = ptomo::gaussian_bump(g, 0.0, 0.0, 0.1, 1.0);
    CHECK(b.field.at(50, 50) == Catch::Approx(1.0));
    CHECK(b.field.at(50, 70) ==
          Catch::Approx(std::exp(-0.5 * (0.2 / 0.1) * (0.2 / 0.1))).epsilon(1e-12));
    CHECK_THROWS_AS(ptomo::disk(g, 0.0, 0.0, -1.0), ptomo::InvalidArgument);
}

TEST_CASE("vessels are deterministic per seed and compactly supported") {
    ptomo::Grid2D g(129, 129, 1.0);
    ptomo::Phantom a = ptomo::vessels(g, 7);
    ptomo::Phantom b = ptomo::vessels(g, 7);
    CHECK(a.field.values() == b.field.values());

    ptomo::Phantom c = ptomo::vessels(g, 8);
    CHECK(a.field.values() != c.field.values());

    double mass = 0.0, mx = 0.0;
    for (double v : a.field.values()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        mass += v;
        mx = std::max(mx, v);
    }
    CHECK(mass > 0.0);
    CHECK(mx == Catch::Approx(1.0));
    CHECK(ptomo::boundary_mass_fraction(a.field, 2) == 0.0);
}

TEST_CASE("raster ingestion: black, white, and round-trip") {
    ptomo::Grid2D g(33, 33, 1.0);

    const std::string black = tmp_path("black.pgm");
    ptomo::write_pgm(black, ptomo::RealField(g, std::vector<double>(g.count(), 0.0)), 8, 0.0, 1.0);
    ptomo::Phantom pb = ptomo::load_raster(black, g);
    for (double v : pb.field.values()) REQUIRE(v == 0.0);

    const std::string white = tmp_path("white.pgm");
    ptomo::write_pgm(white, ptomo::RealField(g, std::vector<double>(g.count(), 1.0)), 8, 0.0, 1.0);
    ptomo::Phantom pw = ptomo::load_raster(white, g);
    CHECK(pw.field.at(16, 16) == 1.0);
    CHECK(pw.field.at(16, 0) == 0.0);  // margin zeroed
    CHECK(pw.field.at(0, 16) == 0.0);

    // 16-bit PGM round-trip at matched grids: quantization error only.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    ptomo::RealField f(g);
    for (auto& v : f.values()) v = uni(rng);
    ptomo::enforce_margin(f, 2);
    // Rescaling maps [min,max] to [0,1]; pin both ends so it is the identity.
    f.at(10, 10) = 0.0;
    f.at(12, 12) = 1.0;
    const std::string p16 = tmp_path("rand.pgm");
    ptomo::write_pgm(p16, f, 16, 0.0, 1.0);
    ptomo::Phantom pr = ptomo::load_raster(p16, g);
    double max_err = 0.0;
    for (int i = 2; i < 31; ++i)
        for (int j = 2; j < 31; ++j)
            max_err = std::max(max_err, std::fabs(pr.field.at(i, j) - f.at(i, j)));
    CHECK(max_err <= 1.0 / 65535.0 + 1e-12);

    // RF64 ingestion takes the same path with no quantization.
    const std::string prf = tmp_path("rand.rf64");
    ptomo::write_rf64(prf, f);
    ptomo::Phantom pr2 = ptomo::load_raster(prf, g);
    max_err = 0.0;
    for (int i = 2; i < 31; ++i)
        for (int j = 2; j < 31; ++j)
            max_err = std::max(max_err, std::fabs(pr2.field.at(i, j) - f.at(i, j)));
    CHECK(max_err <= 1e-12);
}

TEST_CASE("rotation identity, symmetry, and right angles") {
    ptomo::Grid2D g(41, 41, 1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ptomo::RealField f(g);
    for (auto& v : f.values()) v = uni(rng);

    SECTION("theta = 0 is the identity") {
        ptomo::RotationOperator op(0.0, g);
        ptomo::RealField r = ptomo::rotate(op, f);
        CHECK(r.values() == f.values());
    }

    SECTION("theta = pi on a central-symmetric field") {
        ptomo::RealField s(g);
        for (int i = 0; i < 41; ++i)
            for (int j = 0; j < 41; ++j) {
                const double x = g.x(i), y = g.y(j);
                s.at(i, j) = std::exp(-8.0 * (x * x + y * y)) + x * y;
            }
        ptomo::RotationOperator op(std::numbers::pi, g);
        ptomo::RealField r = ptomo::rotate(op, s);
        double max_err = 0.0;
        for (std::size_t k = 0; k < r.values().size(); ++k)
            max_err = std::max(max_err, std::fabs(r.values()[k] - s.values()[k]));
        CHECK(max_err <= 1e-12);
    }

    SECTION("theta = pi/2 impulse follows the index permutation") {
        const int m = 20;  // center index
        const int a = 26, b = 13;
        ptomo::RealField imp(g);
        imp.at(a, b) = 1.0;
        ptomo::RotationOperator op(std::numbers::pi / 2.0, g);
        ptomo::RealField r = ptomo::rotate(op, imp);
        // (rotate f)(x_i, y_j) = f(-y_j, x_i): the unit lands at i = b,
        // j = 2m - a.
        for (int i = 0; i < 41; ++i)
            for (int j = 0; j < 41; ++j) {
                const double want = (i == b && j == 2 * m - a) ? 1.0 : 0.0;
                REQUIRE(r.at(i, j) == Catch::Approx(want).margin(1e-13));
            }
    }
}

TEST_CASE("rotation transpose is the exact matrix transpose") {
    ptomo::Grid2D g(37, 37, 2.0);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ptomo::RealField f(g), h(g);
    for (auto& v : f.values()) v = uni(rng);
    for (auto& v : h.values()) v = uni(rng);

    for (double theta : {0.31, 1.2, 2.9, 4.4}) {
        ptomo::RotationOperator op(theta, g);
        const double lhs = ptomo::l2_inner(ptomo::rotate(op, f), h);
        const double rhs = ptomo::l2_inner(f, ptomo::rotate_transpose(op, h));
        CHECK(std::fabs(lhs - rhs) <=
              1e-13 * std::max(1.0, std::max(std::fabs(lhs), std::fabs(rhs))));
    }
}

TEST_CASE("rotation is a sup-norm contraction with convex row weights") {
    ptomo::Grid2D g(33, 33, 1.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    ptomo::RealField f(g);
    for (auto& v : f.values()) v = uni(rng);
    double fmax = 0.0;
    for (double v : f.values()) fmax = std::max(fmax, std::fabs(v));

    ptomo::RotationOperator op(0.77, g);
    ptomo::RealField r = ptomo::rotate(op, f);
    for (double v : r.values()) REQUIRE(std::fabs(v) <= fmax + 1e-14);

    // Ones map to ones wherever the preimage is strictly inside the grid.
    ptomo::RealField ones(g, std::vector<double>(g.count(), 1.0));
    ptomo::RealField r1 = ptomo::rotate(op, ones);
    CHECK(r1.at(16, 16) == Catch::Approx(1.0).epsilon(1e-14));
    for (double v : r1.values()) {
        REQUIRE(v >= -1e-14);
        REQUIRE(v <= 1.0 + 1e-14);
    }
}

TEST_CASE("transpose scatter of an impulse has at most four outputs") {
    ptomo::Grid2D g(21, 21, 1.0);
    ptomo::RealField imp(g);
    imp.at(9, 12) = 1.0;
    ptomo::RotationOperator op(0.53, g);
    ptomo::RealField out = ptomo::rotate_transpose(op, imp);
    int nonzero = 0;
    double total = 0.0;
    for (double v : out.values())
        if (v != 0.0) {
            ++nonzero;
            total += v;
        }
    CHECK(nonzero <= 4);
    CHECK(nonzero >= 1);
    // The scattered weights are the bilinear row weights of the gather row,
    // which sum to one for an interior preimage.
    CHECK(total == Catch::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("rotation rejects mismatched grids") {
    ptomo::Grid2D g(17, 17, 1.0), h(18, 17, 1.0);
    ptomo::RotationOperator op(0.4, g);
    ptomo::RealField f(h);
    CHECK_THROWS_AS(op.apply(f), ptomo::GridMismatch);
    CHECK_THROWS_AS(op.apply_transpose(f), ptomo::GridMismatch);
}

TEST_CASE("margin helpers") {
    ptomo::Grid2D g(11, 11, 1.0);
    ptomo::RealField f(g, std::vector<double>(g.count(), 1.0));
    CHECK(ptomo::boundary_mass_fraction(f, 2) ==
          Catch::Approx(1.0 - 49.0 / 121.0).epsilon(1e-12));
    ptomo::enforce_margin(f, 3);
    double mass = 0.0;
    for (double v : f.values()) mass += v;
    CHECK(mass == Catch::Approx(25.0));
    CHECK(ptomo::boundary_mass_fraction(f, 3) == 0.0);
}
