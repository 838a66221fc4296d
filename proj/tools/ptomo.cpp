// Batch front end: phantoms -> forward sinograms -> filtered back-projection,
// plus the numerical certification subcommands. Exit codes: 0 success,
// 2 validation problem (bad flags, bad files), 1 internal error or FAIL.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptomo/ptomo.hpp"

namespace {

using namespace ptomo;

ToolConfig load_config(const std::string& path) {
    return path.empty() ? ToolConfig{} : parse_config(path);
}

std::string require_path(const std::string& value, const char* what) {
    if (value.empty())
        throw InvalidArgument(std::string("missing required path: ") + what);
    return value;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << body;
    if (!os) throw Error("write failed for " + path);
}

bool report_check(const char* name, double measured, double bound, bool less_equal = true) {
    const bool ok = less_equal ? measured <= bound : measured >= bound;
    std::printf("%s %s: measured %.6e %s %.6e\n", ok ? "PASS" : "FAIL", name, measured,
                less_equal ? "<=" : ">=", bound);
    return ok;
}

// Least-squares slope of log2(err) against log2(h); err ~ C h^p gives p.
double fit_order(const std::vector<double>& h, const std::vector<double>& err) {
    const std::size_t n = h.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log2(h[i]);
        const double y = std::log2(std::max(err[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct PhantomArgs {
    std::string config, kind = "shepp-logan", input, out;
    int n = 256;
    double length = 1.0;
    std::uint64_t seed = 1;
};

int run_phantom(const PhantomArgs& a) {
    const Grid2D grid(a.n, a.n, a.length);
    Phantom p = [&]() -> Phantom {
        if (a.kind == "shepp-logan") return shepp_logan(grid);
        if (a.kind == "disk") return disk(grid, 0.0, 0.0, 0.22 * grid.length());
        if (a.kind == "gaussian")
            return gaussian_bump(grid, 0.0, 0.0, 0.12 * grid.length());
        if (a.kind == "vessels") return vessels(grid, a.seed);
        if (a.kind == "raster") return load_raster(require_path(a.input, "--input"), grid);
        throw InvalidArgument("unknown phantom kind: " + a.kind);
    }();
    write_rf64(require_path(a.out, "--out"), p.field);
    std::printf("phantom %s %dx%d -> %s\n", p.name.c_str(), a.n, a.n, a.out.c_str());
    return 0;
}

struct ForwardArgs {
    std::string config, phantom, out;
    double l_over_lambda = 100.0;
    int angles = 360;
    double step_deg = 1.0;
    int threads = 0;
};

int run_forward(const ForwardArgs& a) {
    const RealField beta = read_rf64_real(require_path(a.phantom, "--phantom"));
    const WaveParams params(beta.grid().length(), a.l_over_lambda);
    if (auto warn = margin_warning(beta)) std::cerr << *warn << "\n";
    const Sinogram sino = forward_map(beta, uniform_angles(a.angles, a.step_deg), params,
                                      resolve_thread_count(a.threads));
    write_wvsg(require_path(a.out, "--out"), sino);
    std::printf("sinogram %dx%d (L/lambda = %g) -> %s\n", sino.n_angles(), sino.ny(),
                a.l_over_lambda, a.out.c_str());
    return 0;
}

struct ReconstructArgs {
    std::string config, sino, truth, out, report, pgm;
    std::string filter = "ramlak";
    double cutoff = 1.0;
    bool modulus = false;
    int threads = 0;
};

int run_reconstruct(const ReconstructArgs& a) {
    const Sinogram sino = read_wvsg(require_path(a.sino, "--sino"));
    const RampFilterSpec spec = RampFilterSpec::parse(a.filter, a.cutoff);
    std::optional<RealField> truth;
    if (!a.truth.empty()) truth = read_rf64_real(a.truth);
    const ReconReport rep = reconstruct(sino, spec, truth ? &*truth : nullptr,
                                        resolve_thread_count(a.threads), a.modulus);
    write_rf64(require_path(a.out, "--out"), rep.reconstruction);

    std::ostringstream txt;
    txt << "sinogram = " << a.sino << "\n"
        << "angles = " << sino.n_angles() << "\n"
        << "n_y = " << sino.ny() << "\n"
        << "l_over_lambda = " << sino.params().l_over_lambda << "\n"
        << "filter = " << a.filter << " cutoff " << a.cutoff << "\n"
        << "calibration_scale = " << rep.calibration_scale << "\n";
    if (rep.vs_truth) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "relative_l2_error = %.6f\nncc = %.6f\npsnr_db = %.2f\n",
                      rep.vs_truth->relative_l2_error,
                      rep.vs_truth->normalized_cross_correlation, rep.vs_truth->psnr_db);
        txt << buf;
    }
    std::fputs(txt.str().c_str(), stdout);
    if (!a.report.empty()) write_text(a.report, txt.str());

    if (!a.pgm.empty()) {
        double lo = rep.reconstruction.values()[0], hi = lo;
        for (double v : rep.reconstruction.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        write_pgm(a.pgm, rep.reconstruction, 16, lo, hi);
        std::ostringstream side;
        side << "window_min = " << lo << "\nwindow_max = " << hi << "\n";
        write_text(a.pgm + ".txt", side.str());
    }
    return 0;
}

struct AdjointTestArgs {
    std::string config;
    int n = 64, angles = 8, threads = 0;
    std::uint64_t seed = 42;
    double l_over_lambda = 30.0, tol = 1e-10;
};

int run_adjoint_test(const AdjointTestArgs& a) {
    const DotTestResult r =
        adjoint_dot_test(a.n, a.angles, a.seed, a.l_over_lambda, resolve_thread_count(a.threads));
    const bool ok = r.relative_gap <= a.tol;
    std::printf("%s adjoint dot test (n=%d, angles=%d, seed=%llu): relative gap %.3e %s %.1e\n",
                ok ? "PASS" : "FAIL", a.n, a.angles,
                static_cast<unsigned long long>(a.seed), r.relative_gap, ok ? "<=" : ">",
                a.tol);
    std::printf("  <W b, e> = %.15e %+.15ei\n", r.lhs.real(), r.lhs.imag());
    std::printf("  <b, W*e> = %.15e %+.15ei\n", r.rhs.real(), r.rhs.imag());
    return ok ? 0 : 1;
}

struct RiccatiArgs {
    std::string config;
    double kappa = 0.1, step = 1e-3, t0 = 0.0, t1 = 1.0;
    double drift_tol = 1e-6, flat_tol = 1e-8;
};

int run_riccati(const RiccatiArgs& a) {
    const Eigen::Matrix3cd y0 = Eigen::Matrix3cd::Identity();
    const Eigen::Matrix3cd y1 = cplx(0.0, 1.0) * Eigen::Matrix3cd::Identity();

    const auto flat_states = solve_yz(CurvatureProfile::flat(a.t0, a.t1), y0, y1, a.step);
    double closed_err = 0.0;
    for (const RiccatiState& st : flat_states) {
        const RiccatiState ref = flat_closed_form(st.tau);
        closed_err = std::max(closed_err, (st.Y - ref.Y).norm() / ref.Y.norm());
        closed_err = std::max(closed_err, (st.H - ref.H).norm() / ref.H.norm());
    }
    const double flat_drift = max_relative_drift(conserved_c0(flat_states));

    const auto curved_states =
        solve_yz(CurvatureProfile::constant(a.kappa, a.t0, a.t1), y0, y1, a.step);
    const double curved_drift = max_relative_drift(conserved_c0(curved_states));

    bool ok = true;
    ok &= report_check("flat conservation drift", flat_drift, a.drift_tol);
    ok &= report_check("flat closed-form error", closed_err, a.flat_tol);
    ok &= report_check("constant-curvature conservation drift", curved_drift, a.drift_tol);
    return ok ? 0 : 1;
}

struct XrayArgs {
    std::string config, phantom;
    double offset = 0.0, phi_deg = 0.0;
    bool check = false;
    int n = 1023;
};

int run_xray(const XrayArgs& a) {
    if (a.check) {
        const Grid2D grid(a.n, a.n, 2.2);
        const Phantom d = disk(grid, 0.0, 0.0, 1.0);
        bool ok = true;
        for (double off : {0.0, 0.3, 0.6, 0.9}) {
            const XrayResult r = xray_transform(d.field, Line2D{off, 0.0});
            const double expect = 2.0 * std::sqrt(1.0 - off * off);
            char name[64];
            std::snprintf(name, sizeof(name), "chord error at offset %.1f", off);
            ok &= report_check(name, std::fabs(r.value - expect), 1e-3);
        }
        return ok ? 0 : 1;
    }
    const RealField f = read_rf64_real(require_path(a.phantom, "--phantom"));
    const Line2D line{a.offset, a.phi_deg * std::numbers::pi / 180.0};
    const XrayResult r = xray_transform(f, line);
    if (!r.intersects) {
        std::printf("xray = 0 (line misses the domain)\n");
        return 0;
    }
    std::printf("xray = %.12g\n", r.value);
    return 0;
}

struct WesterveltArgs {
    std::string config;
    int nx = 800;
    double gap_tol = 0.05, order_tol = 1.0, polar_tol = 0.9;
    std::string report;
};

int run_westervelt(const WesterveltArgs& a) {
    if (a.nx % 4 != 0) throw InvalidArgument("--nx must be divisible by 4");
    std::ostringstream txt;
    bool ok = true;

    std::vector<double> hs, gaps;
    IdentityReport finest{};
    for (int nx : {a.nx / 4, a.nx / 2, a.nx}) {
        const Westervelt1DConfig cfg = Westervelt1DConfig::standard(nx);
        const IdentityReport rep = verify_integral_identity(cfg);
        hs.push_back(cfg.dx());
        gaps.push_back(rep.relative_gap);
        if (nx == a.nx) finest = rep;
        char line[160];
        std::snprintf(line, sizeof(line), "n_x = %4d  lhs = %+.8e  rhs = %+.8e  gap = %.4e\n",
                      nx, rep.lhs, rep.rhs, rep.relative_gap);
        txt << line;
    }
    const double order = fit_order(hs, gaps);
    ok &= report_check("integral identity gap", finest.relative_gap, a.gap_tol);
    ok &= report_check("integral identity order", order, a.order_tol, false);

    std::vector<double> eps_list = {1e-3, 5e-4, 2.5e-4}, diffs;
    for (double eps : eps_list) {
        Westervelt1DConfig cfg = Westervelt1DConfig::standard(a.nx);
        cfg.eps1 = cfg.eps2 = eps;
        const SecondLinearization lin = second_linearization(cfg);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < lin.u_fd.p.size(); ++j) {
            const double d = lin.u_fd.p[j] - lin.u_direct.p[j];
            num += d * d;
            den += lin.u_direct.p[j] * lin.u_direct.p[j];
        }
        if (den == 0.0) throw DegenerateIdentity("polarization: U_direct is identically zero");
        diffs.push_back(std::sqrt(num / den));
        char line[120];
        std::snprintf(line, sizeof(line), "eps = %.2e  |U_fd - U_direct| / |U_direct| = %.4e\n",
                      eps, diffs.back());
        txt << line;
    }
    const double polar_order = fit_order(eps_list, diffs);
    ok &= report_check("polarization decay order", polar_order, a.polar_tol, false);

    std::fputs(txt.str().c_str(), stdout);
    if (!a.report.empty()) write_text(a.report, txt.str());
    return ok ? 0 : 1;
}

struct MetricsArgs {
    std::string config, recon, truth, report;
};

int run_metrics(const MetricsArgs& a) {
    const RealField r = read_rf64_real(require_path(a.recon, "--recon"));
    const RealField t = read_rf64_real(require_path(a.truth, "--truth"));
    const Metrics m = metrics(r, t);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "relative_l2_error = %.6f\nncc = %.6f\npsnr_db = %.2f\n",
                  m.relative_l2_error, m.normalized_cross_correlation, m.psnr_db);
    std::fputs(buf, stdout);
    if (!a.report.empty()) write_text(a.report, buf);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transmission nonlinear-ultrasound tomography toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    PhantomArgs pa;
    auto* cmd_phantom = app.add_subcommand("phantom", "generate or ingest a nonlinearity map");
    auto* pa_cfg = cmd_phantom->add_option("--config", pa.config, "config file");
    auto* pa_kind = cmd_phantom->add_option("--kind", pa.kind,
                                            "shepp-logan|disk|gaussian|vessels|raster");
    auto* pa_n = cmd_phantom->add_option("--n", pa.n, "grid nodes per side");
    cmd_phantom->add_option("--length", pa.length, "domain side length");
    auto* pa_seed = cmd_phantom->add_option("--seed", pa.seed, "seed for procedural kinds");
    auto* pa_input = cmd_phantom->add_option("--input", pa.input, "raster file for --kind raster");
    auto* pa_out = cmd_phantom->add_option("--out", pa.out, "output RF64 path");
    cmd_phantom->callback([&] {
        const ToolConfig cfg = load_config(pa.config);
        (void)pa_cfg;
        if (!pa_kind->count()) pa.kind = cfg.get_string("phantom.kind", pa.kind);
        if (!pa_n->count()) pa.n = static_cast<int>(cfg.get_int("grid.n", pa.n));
        if (!pa_seed->count())
            pa.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(pa.seed)));
        if (!pa_input->count()) pa.input = cfg.get_string("paths.input", pa.input);
        if (!pa_out->count()) pa.out = cfg.get_string("paths.phantom", pa.out);
        rc = run_phantom(pa);
    });

    ForwardArgs fa;
    auto* cmd_forward = app.add_subcommand("forward", "march the envelope model over all angles");
    cmd_forward->add_option("--config", fa.config, "config file");
    auto* fa_ph = cmd_forward->add_option("--phantom", fa.phantom, "input RF64 phantom");
    auto* fa_ll = cmd_forward->add_option("--l-over-lambda", fa.l_over_lambda, "ratio L/lambda");
    auto* fa_na = cmd_forward->add_option("--angles", fa.angles, "number of view angles");
    auto* fa_sd = cmd_forward->add_option("--step-deg", fa.step_deg, "angular step in degrees");
    auto* fa_out = cmd_forward->add_option("--out", fa.out, "output WVSG path");
    cmd_forward->add_option("--threads", fa.threads, "worker count (0 = hardware)");
    cmd_forward->callback([&] {
        const ToolConfig cfg = load_config(fa.config);
        if (!fa_ph->count()) fa.phantom = cfg.get_string("paths.phantom", fa.phantom);
        if (!fa_ll->count())
            fa.l_over_lambda = cfg.get_double("wave.l_over_lambda", fa.l_over_lambda);
        if (!fa_na->count()) fa.angles = static_cast<int>(cfg.get_int("angles.count", fa.angles));
        if (!fa_sd->count()) fa.step_deg = cfg.get_double("angles.step_deg", fa.step_deg);
        if (!fa_out->count()) fa.out = cfg.get_string("paths.sinogram", fa.out);
        rc = run_forward(fa);
    });

    ReconstructArgs ra;
    auto* cmd_recon = app.add_subcommand("reconstruct", "filter + adjoint back-projection");
    cmd_recon->add_option("--config", ra.config, "config file");
    auto* ra_sino = cmd_recon->add_option("--sino", ra.sino, "input WVSG sinogram");
    auto* ra_truth = cmd_recon->add_option("--truth", ra.truth, "ground-truth RF64 for metrics");
    auto* ra_out = cmd_recon->add_option("--out", ra.out, "output RF64 reconstruction");
    auto* ra_rep = cmd_recon->add_option("--report", ra.report, "metrics report path");
    auto* ra_pgm = cmd_recon->add_option("--pgm", ra.pgm, "16-bit PGM rendering path");
    auto* ra_fk = cmd_recon->add_option("--filter", ra.filter, "ramlak|ramlak_hann");
    auto* ra_co = cmd_recon->add_option("--cutoff", ra.cutoff, "cutoff fraction of Nyquist");
    cmd_recon->add_flag("--modulus", ra.modulus, "render |W* h W beta| instead of its real part");
    cmd_recon->add_option("--threads", ra.threads, "worker count (0 = hardware)");
    cmd_recon->callback([&] {
        const ToolConfig cfg = load_config(ra.config);
        if (!ra_sino->count()) ra.sino = cfg.get_string("paths.sinogram", ra.sino);
        if (!ra_truth->count()) ra.truth = cfg.get_string("paths.phantom", ra.truth);
        if (!ra_out->count()) ra.out = cfg.get_string("paths.recon", ra.out);
        if (!ra_rep->count()) ra.report = cfg.get_string("paths.report", ra.report);
        if (!ra_pgm->count()) ra.pgm = cfg.get_string("paths.pgm", ra.pgm);
        if (!ra_fk->count()) ra.filter = cfg.get_string("filter.kind", ra.filter);
        if (!ra_co->count()) ra.cutoff = cfg.get_double("filter.cutoff", ra.cutoff);
        rc = run_reconstruct(ra);
    });

    AdjointTestArgs aa;
    auto* cmd_adj = app.add_subcommand("adjoint-test", "dot test certifying W* against W");
    cmd_adj->add_option("--config", aa.config, "config file");
    auto* aa_n = cmd_adj->add_option("--n", aa.n, "grid nodes per side");
    auto* aa_na = cmd_adj->add_option("--angles", aa.angles, "number of view angles");
    auto* aa_seed = cmd_adj->add_option("--seed", aa.seed, "random seed");
    auto* aa_ll = cmd_adj->add_option("--l-over-lambda", aa.l_over_lambda, "ratio L/lambda");
    cmd_adj->add_option("--tol", aa.tol, "relative gap tolerance");
    cmd_adj->add_option("--threads", aa.threads, "worker count (0 = hardware)");
    cmd_adj->callback([&] {
        const ToolConfig cfg = load_config(aa.config);
        if (!aa_n->count()) aa.n = static_cast<int>(cfg.get_int("grid.n", aa.n));
        if (!aa_na->count()) aa.angles = static_cast<int>(cfg.get_int("angles.count", aa.angles));
        if (!aa_seed->count())
            aa.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(aa.seed)));
        if (!aa_ll->count())
            aa.l_over_lambda = cfg.get_double("wave.l_over_lambda", aa.l_over_lambda);
        rc = run_adjoint_test(aa);
    });

    RiccatiArgs ri;
    auto* cmd_ric = app.add_subcommand("riccati-check", "conservation + closed-form checks");
    cmd_ric->add_option("--kappa", ri.kappa, "constant curvature value");
    cmd_ric->add_option("--step", ri.step, "integrator step");
    cmd_ric->add_option("--t0", ri.t0, "interval start");
    cmd_ric->add_option("--t1", ri.t1, "interval end");
    cmd_ric->add_option("--drift-tol", ri.drift_tol, "conservation drift tolerance");
    cmd_ric->add_option("--flat-tol", ri.flat_tol, "closed-form tolerance");
    cmd_ric->add_option("--config", ri.config, "config file (validated; no keys consumed)");
    cmd_ric->callback([&] {
        (void)load_config(ri.config);
        rc = run_riccati(ri);
    });

    XrayArgs xa;
    auto* cmd_xray = app.add_subcommand("xray", "straight-line transform of a raster field");
    cmd_xray->add_option("--config", xa.config, "config file");
    auto* xa_ph = cmd_xray->add_option("--phantom", xa.phantom, "input RF64 field");
    cmd_xray->add_option("--offset", xa.offset, "signed offset from the origin");
    cmd_xray->add_option("--phi-deg", xa.phi_deg, "line direction in degrees");
    cmd_xray->add_flag("--check", xa.check, "run the unit-disk chord certification");
    cmd_xray->add_option("--n", xa.n, "grid nodes per side for --check");
    cmd_xray->callback([&] {
        const ToolConfig cfg = load_config(xa.config);
        if (!xa_ph->count()) xa.phantom = cfg.get_string("paths.phantom", xa.phantom);
        rc = run_xray(xa);
    });

    WesterveltArgs wa;
    auto* cmd_wv = app.add_subcommand("westervelt-check",
                                      "second-linearization and integral-identity checks");
    cmd_wv->add_option("--config", wa.config, "config file");
    cmd_wv->add_option("--nx", wa.nx, "finest spatial cell count (divisible by 4)");
    cmd_wv->add_option("--gap-tol", wa.gap_tol, "identity gap tolerance");
    cmd_wv->add_option("--order-tol", wa.order_tol, "identity convergence order bound");
    cmd_wv->add_option("--polar-tol", wa.polar_tol, "polarization decay order bound");
    auto* wa_rep = cmd_wv->add_option("--report", wa.report, "plain-text report path");
    cmd_wv->callback([&] {
        const ToolConfig cfg = load_config(wa.config);
        if (!wa_rep->count()) wa.report = cfg.get_string("paths.report", wa.report);
        rc = run_westervelt(wa);
    });

    MetricsArgs ma;
    auto* cmd_met = app.add_subcommand("metrics", "compare a reconstruction against truth");
    cmd_met->add_option("--config", ma.config, "config file");
    auto* ma_rec = cmd_met->add_option("--recon", ma.recon, "reconstruction RF64");
    auto* ma_tru = cmd_met->add_option("--truth", ma.truth, "ground-truth RF64");
    auto* ma_rep = cmd_met->add_option("--report", ma.report, "report path");
    cmd_met->callback([&] {
        const ToolConfig cfg = load_config(ma.config);
        if (!ma_rec->count()) ma.recon = cfg.get_string("paths.recon", ma.recon);
        if (!ma_tru->count()) ma.truth = cfg.get_string("paths.phantom", ma.truth);
        if (!ma_rep->count()) ma.report = cfg.get_string("paths.report", ma.report);
        rc = run_metrics(ma);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const ptomo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
