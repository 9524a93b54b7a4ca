#include "torusflow/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "torusflow/diagnostics.hpp"
#include "torusflow/experiment.hpp"

namespace torusflow {

namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

ReferenceSurface lamella_ref(int n) {
    return make_reference({ReferenceKind::Lamella2D, 0.25, 0.5, {1, {n, 1}, {1, 1}}});
}
ReferenceSurface disc_ref(int n) {
    return make_reference({ReferenceKind::Disc2D, 0.25, 0.5, {1, {n, 1}, {1, 1}}});
}

HeightField sine_mode(const ReferenceSurface& ref, int k, double amp) {
    std::vector<double> v(ref.total_nodes());
    for (int i = 0; i < ref.grid.n(0); ++i)
        v[i] = amp * std::sin(kTwoPi * k * ref.grid.coord(0, i));
    return make_height_field(ref, v);
}

struct RateRun {
    ReferenceSurface ref;
    RunResult run;
    TrajectoryDiagnostics diag;
};

/// Shared artifacts reused across criteria.
struct Ctx {
    fs::path scratch;

    std::optional<RateRun> rate_vpmcf_256, rate_vpmcf_512, rate_sdf_256;
    std::optional<RateRun> disc_run;
    std::optional<std::pair<ReferenceSurface, RunResult>> vol_vpmcf, vol_sdf;
    HeightField vol_u0;

    const RateRun& rate_vpmcf(int n) {
        auto& slot = n == 512 ? rate_vpmcf_512 : rate_vpmcf_256;
        if (!slot) {
            auto ref = lamella_ref(n);
            auto u0 = sine_mode(ref, 1, 1e-3);
            FlowConfig cfg;
            cfg.kind = FlowKind::VPMCF;
            cfg.dt = 1e-5;
            cfg.t_end = 0.15;
            cfg.snapshot_every = 100;
            auto run = run_flow(ref, u0, cfg);
            DiagnosticsOptions dopts;
            dopts.asymmetry = true;
            dopts.asymmetry_stride = 10;
            auto diag = diagnose_trajectory(ref, run.trajectory, dopts);
            slot = RateRun{std::move(ref), std::move(run), std::move(diag)};
        }
        return *slot;
    }

    const RateRun& rate_sdf() {
        if (!rate_sdf_256) {
            auto ref = lamella_ref(256);
            auto u0 = sine_mode(ref, 1, 1e-3);
            FlowConfig cfg;
            cfg.kind = FlowKind::SDF;
            cfg.dt = 2e-6;
            cfg.t_end = 0.004;
            cfg.snapshot_every = 20;
            auto run = run_flow(ref, u0, cfg);
            DiagnosticsOptions dopts;
            dopts.asymmetry = true;
            dopts.asymmetry_stride = 10;
            auto diag = diagnose_trajectory(ref, run.trajectory, dopts);
            rate_sdf_256 = RateRun{std::move(ref), std::move(run), std::move(diag)};
        }
        return *rate_sdf_256;
    }

    const RateRun& disc() {
        if (!disc_run) {
            auto ref = disc_ref(256);
            std::vector<double> v(ref.total_nodes());
            for (int i = 0; i < ref.grid.n(0); ++i) {
                double th = kTwoPi * ref.grid.coord(0, i);
                v[i] = 0.01 * (std::cos(th) + 0.5 * std::cos(2.0 * th));
            }
            auto u0 = make_height_field(ref, v);
            FlowConfig cfg;
            cfg.kind = FlowKind::VPMCF;
            cfg.dt = 1e-4;
            cfg.t_end = 0.25;
            cfg.snapshot_every = 25;
            auto run = run_flow(ref, u0, cfg);
            DiagnosticsOptions dopts;
            dopts.asymmetry = true;
            dopts.asymmetry_stride = 10;
            auto diag = diagnose_trajectory(ref, run.trajectory, dopts);
            disc_run = RateRun{std::move(ref), std::move(run), std::move(diag)};
        }
        return *disc_run;
    }

    const std::pair<ReferenceSurface, RunResult>& volume_run(FlowKind kind) {
        auto& slot = kind == FlowKind::VPMCF ? vol_vpmcf : vol_sdf;
        if (!slot) {
            auto ref = lamella_ref(256);
            InitialSpec ispec;
            ispec.kind = InitialKind::RandomBandLimited;
            ispec.seed = 1001;
            ispec.kmax = 4;
            ispec.c11_target = 1e-2;
            auto u0 = generate_initial(ref, ispec);
            if (vol_u0.values.empty()) vol_u0 = u0;
            FlowConfig cfg;
            cfg.kind = kind;
            cfg.dt = 1e-5;
            cfg.t_end = kind == FlowKind::VPMCF ? 0.05 : 0.002;
            cfg.snapshot_every = 500;
            auto run = run_flow(ref, u0, cfg);
            slot = std::make_pair(std::move(ref), std::move(run));
        }
        return *slot;
    }
};

using CriterionFn = std::function<void(Ctx&, CriterionResult&)>;

void check(bool cond, const std::string& what) {
    if (!cond) throw FlowError(what);
}

// 1. stationarity of every catalogue reference under both flows
void criterion_stationarity(Ctx&, CriterionResult& res) {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (auto kind : {ReferenceKind::Lamella2D, ReferenceKind::Lamella3D, ReferenceKind::Disc2D,
                      ReferenceKind::Cylinder3D}) {
        int dims = (kind == ReferenceKind::Lamella2D || kind == ReferenceKind::Disc2D) ? 1 : 2;
        int n = dims == 1 ? 256 : 64;
        auto ref = make_reference({kind, 0.2, 0.5, {dims, {n, dims == 2 ? n : 1}, {1, 1}}});
        auto zero = zero_height_field(ref);
        worst = std::max(worst, max_abs(rhs_vpmcf(ref, zero).data));
        worst = std::max(worst, max_abs(rhs_sdf(ref, zero).data));
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.detail = "max |RHS(0)| = " + fmt(worst) + " in " + fmt(sec) + " s";
    check(worst <= 1e-12, "stationarity residual above 1e-12: " + fmt(worst));
    check(sec < 1.0, "stationarity exceeded the 1 s budget");
}

// 2. volume conservation along lamella runs of both flows
void criterion_volume(Ctx& ctx, CriterionResult& res) {
    double worst = 0.0;
    for (auto kind : {FlowKind::VPMCF, FlowKind::SDF}) {
        const auto& [ref, run] = ctx.volume_run(kind);
        for (const auto& s : run.steps) worst = std::max(worst, std::abs(s.volume_rel_drift_after));
    }
    res.detail = "max relative volume drift = " + fmt(worst);
    check(worst <= 1e-10, "volume drift above 1e-10: " + fmt(worst));
}

// 3. perimeter monotonicity per step plus first-order dissipation identity
void criterion_dissipation(Ctx& ctx, CriterionResult& res) {
    double worst_increase = -1e300;
    for (auto kind : {FlowKind::VPMCF, FlowKind::SDF}) {
        const auto& [ref, run] = ctx.volume_run(kind);
        for (const auto& s : run.steps)
            worst_increase = std::max(worst_increase,
                                      (s.perimeter_after - s.perimeter_before) / ref.perimeter);
    }
    check(worst_increase <= 1e-12, "perimeter increased beyond 1e-12 P(E) in a step");

    const auto& [lam, run_unused] = ctx.volume_run(FlowKind::VPMCF);
    (void)run_unused;
    auto state = make_flow_state(lam, ctx.vol_u0);
    auto residual = [&](FlowKind kind, double dt) {
        FlowConfig cfg;
        cfg.kind = kind;
        cfg.dt = dt;
        auto [next, rep] = step_imex(lam, state, cfg);
        return std::abs(rep.residual);
    };
    double rv = residual(FlowKind::VPMCF, 2e-4) / residual(FlowKind::VPMCF, 1e-4);
    double rs = residual(FlowKind::SDF, 2e-7) / residual(FlowKind::SDF, 1e-7);
    res.detail = "max step increase " + fmt(worst_increase) + " P(E); residual ratios vpmcf " +
                 fmt(rv) + ", sdf " + fmt(rs);
    check(rv >= 1.8 && rv <= 2.2, "vpmcf dissipation residual ratio outside [1.8,2.2]: " + fmt(rv));
    check(rs >= 1.8 && rs <= 2.2, "sdf dissipation residual ratio outside [1.8,2.2]: " + fmt(rs));
}

// 4. exponential perimeter-gap rates on the lamella
void criterion_rates(Ctx& ctx, CriterionResult& res) {
    auto fit_of = [](const RateRun& rr, double t0, double t1) {
        std::vector<double> t, gap;
        for (const auto& rec : rr.diag.records) {
            t.push_back(rec.t);
            gap.push_back(rec.perimeter_gap);
        }
        return fit_rate(t, gap, t0, t1);
    };
    auto t_start = std::chrono::steady_clock::now();
    auto fv = fit_of(ctx.rate_vpmcf(256), 0.05, 0.14);
    double sec_v = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    t_start = std::chrono::steady_clock::now();
    auto fs_ = fit_of(ctx.rate_sdf(), 0.001, 0.0035);
    double sec_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    const double want_v = 2.0 * kTwoPi * kTwoPi;
    const double want_s = 2.0 * std::pow(kTwoPi, 4.0);
    res.detail = "vpmcf rate " + fmt(fv.rate) + " (target " + fmt(want_v) + "), sdf rate " +
                 fmt(fs_.rate) + " (target " + fmt(want_s) + ")";
    check(std::abs(fv.rate - want_v) <= 0.05 * want_v, "vpmcf rate off by >5%: " + fmt(fv.rate));
    check(std::abs(fs_.rate - want_s) <= 0.05 * want_s, "sdf rate off by >5%: " + fmt(fs_.rate));
    check(sec_v < 30.0 && sec_s < 30.0, "rate criterion exceeded the 30 s budget");
}

// 5. disc converges to a translate: asymmetry to zero, translations Cauchy
void criterion_disc_stability(Ctx& ctx, CriterionResult& res) {
    const auto& rr = ctx.disc();

    AsymmetryOptions aopts;
    auto track_sigma = rr.diag.track.sigmas.back();
    aopts.center = track_sigma;
    aopts.box_half_width = 0.02;
    aopts.coarse_per_axis = 16;
    auto final_alpha = fraenkel_asymmetry(rr.ref, rr.run.trajectory.fields.back(), aopts);

    // Lyapunov rate: twice the k=2 Jacobi eigenvalue (2^2-1)/r^2
    std::vector<double> t, gap;
    for (const auto& rec : rr.diag.records) {
        t.push_back(rec.t);
        gap.push_back(rec.perimeter_gap);
    }
    auto efit = fit_rate(t, gap, 0.02, 0.10);
    const double jacobi = 3.0 / (0.25 * 0.25);
    const double want = 2.0 * jacobi;

    auto mfit = fit_rate(rr.diag.track.times, rr.diag.track.cauchy_modulus, 0.01, 0.12);

    double max_poincare = 0.0;
    for (const auto& rec : rr.diag.records)
        if (rec.poincare_quotient) max_poincare = std::max(max_poincare, *rec.poincare_quotient);

    res.detail = "final alpha " + fmt(final_alpha.alpha) + ", gap rate " + fmt(efit.rate) +
                 " (target " + fmt(want) + "), sigma modulus rate " + fmt(mfit.rate);
    check(final_alpha.alpha <= 1e-6, "final asymmetry above 1e-6: " + fmt(final_alpha.alpha));
    check(std::abs(efit.rate - want) <= 0.10 * want, "disc gap rate off by >10%: " + fmt(efit.rate));
    check(mfit.rate >= 0.9 * jacobi, "translation Cauchy modulus decays too slowly");
    // linearized Poincare constant of the surviving k=2 curvature mode is r/2
    check(max_poincare <= 1.1 * (0.25 / 2.0), "disc Poincare quotient above 1.1x linearized");
}

// 6. Alexandrov quotient bounded by 1.1x its linearized value, grid-stable
void criterion_alexandrov(Ctx& ctx, CriterionResult& res) {
    auto max_quotient = [](const RateRun& rr) {
        double m = 0.0;
        bool any = false;
        for (const auto& rec : rr.diag.records) {
            check(rec.projection_defect <= 0.1, "projection defect above delta* = 0.1");
            if (rec.alexandrov_quotient) {
                m = std::max(m, *rec.alexandrov_quotient);
                any = true;
            }
        }
        check(any, "no snapshots qualified for the Alexandrov quotient");
        return m;
    };
    const double lam_lin = std::sqrt(1.0 + kTwoPi * kTwoPi) / (kTwoPi * kTwoPi);
    const double disc_lin = std::sqrt(1.0 + 64.0) / 48.0; // k=2 mode at r = 1/4

    double q256 = max_quotient(ctx.rate_vpmcf(256));
    double qsdf = max_quotient(ctx.rate_sdf());
    double qdisc = max_quotient(ctx.disc());
    double q512 = max_quotient(ctx.rate_vpmcf(512));

    res.detail = "lamella " + fmt(q256) + "/" + fmt(lam_lin) + ", sdf " + fmt(qsdf) + ", disc " +
                 fmt(qdisc) + "/" + fmt(disc_lin) + ", refine drift " +
                 fmt(std::abs(q512 - q256) / q256);
    check(q256 <= 1.1 * lam_lin, "lamella vpmcf quotient above 1.1x linearized");
    check(qsdf <= 1.1 * lam_lin, "lamella sdf quotient above 1.1x linearized");
    check(qdisc <= 1.1 * disc_lin, "disc quotient above 1.1x linearized");
    check(std::abs(q512 - q256) <= 0.05 * q256, "quotient moved by more than 5% under refinement");
}

// 7. quantitative isoperimetric constant finite and grid-stable
void criterion_isoperimetric(Ctx& ctx, CriterionResult& res) {
    double c256 = isoperimetric_check(ctx.rate_vpmcf(256).diag.records);
    double c512 = isoperimetric_check(ctx.rate_vpmcf(512).diag.records);
    res.detail = "max alpha^2/gap = " + fmt(c256) + " (n=256), " + fmt(c512) + " (n=512)";
    check(std::isfinite(c256) && c256 > 0.0, "isoperimetric constant not finite");
    check(std::abs(c512 - c256) <= 0.10 * c256, "isoperimetric constant moved by more than 10%");
}

// 8. Schauder constants of the biharmonic semigroup
void criterion_schauder(Ctx&, CriterionResult& res) {
    auto ref = lamella_ref(256);
    auto rows = semigroup_estimate_check(ref, 100, 2, 1, 1.0);
    double worst_ratio = 0.0;
    for (const auto& row : rows) worst_ratio = std::max(worst_ratio, row.ratio_max_min);

    auto u0 = sine_mode(ref, 1, 1.0);
    double worst_mode_err = 0.0;
    for (int l = 0; l <= 1; ++l)
        for (int k = 0; k <= 2; ++k) {
            double a = l + k / 4.0;
            double want = kTwoPi * kTwoPi * (a == 0.0 ? 1.0 : std::pow(a / std::numbers::e, a));
            double got = schauder_constant(ref, u0, l, k, 1.0);
            worst_mode_err = std::max(worst_mode_err, std::abs(got - want) / want);
        }
    res.detail = "max over-sample ratio " + fmt(worst_ratio) + ", pure-mode error " +
                 fmt(worst_mode_err);
    check(worst_ratio <= 10.0, "Schauder constant ratio above 10: " + fmt(worst_ratio));
    check(worst_mode_err <= 1e-8, "pure-mode Schauder constant off by > 1e-8");
}

// 9. mild solution fixed point vs the IMEX integrator
void criterion_mild(Ctx&, CriterionResult& res) {
    auto ref = lamella_ref(256);
    auto u0 = sine_mode(ref, 1, 1e-3);
    const double T = 1e-3;
    const int samples = 256;
    auto mild = mild_solve(ref, u0, T, 8, 0.5, samples);
    for (double r : mild.contraction_ratios)
        check(r < 1.0, "fixed-point ratio not contracting: " + fmt(r));

    auto mild_a = mild_solve(ref, u0, 2e-5, 6, 0.5, samples);
    auto mild_b = mild_solve(ref, u0, 1e-5, 6, 0.5, samples);
    check(mild_b.contraction_ratios.front() < mild_a.contraction_ratios.front(),
          "contraction ratio did not decrease with T");

    FlowConfig cfg;
    cfg.kind = FlowKind::SDF;
    cfg.dt = T / 8192;
    cfg.t_end = T;
    cfg.imex_theta = 0.5;
    cfg.volume_projection = false;
    cfg.snapshot_every = 8192 / samples;
    auto imex = run_flow(ref, u0, cfg);
    check(imex.trajectory.size() == mild.trajectory.size(), "trajectory grids misaligned");

    double scale = 0.0, diff = 0.0;
    for (int i = 0; i < mild.trajectory.size(); ++i) {
        scale = std::max(scale, max_abs(mild.trajectory.fields[i].values));
        for (int j = 0; j < ref.total_nodes(); ++j)
            diff = std::max(diff, std::abs(mild.trajectory.fields[i].values[j] -
                                           imex.trajectory.fields[i].values[j]));
    }
    res.detail = "first ratio " + fmt(mild.contraction_ratios.front()) + ", sup mismatch " +
                 fmt(diff / scale);
    check(diff <= 1e-5 * scale, "mild vs IMEX mismatch above 1e-5 relative: " + fmt(diff / scale));
}

// 10. nonlinear residual is superlinear: |f[eps phi]|/eps^2 does not grow
void criterion_residual_scaling(Ctx&, CriterionResult& res) {
    auto ref = lamella_ref(256);
    auto f0 = nonlinear_residual(ref, zero_height_field(ref), FlowKind::SDF);
    check(max_abs(f0.data) == 0.0, "f[0] is not exactly zero");

    double worst_growth = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        auto phi = random_band_limited_field(ref, 3000 + seed, 1.0, 5);
        auto ratio = [&](double eps) {
            std::vector<double> v(phi.values);
            for (double& x : v) x *= eps;
            auto f = nonlinear_residual(ref, make_height_field(ref, v), FlowKind::SDF);
            return max_abs(f.data) / (eps * eps);
        };
        double r2 = ratio(1e-2), r3 = ratio(1e-3), r4 = ratio(1e-4);
        worst_growth = std::max({worst_growth, r3 / r2, r4 / r3});
    }
    res.detail = "f[0] = 0 exactly; worst ratio growth per decade " + fmt(worst_growth);
    check(worst_growth <= 2.0,
          "|f[eps phi]|/eps^2 grew by more than 2x while eps decreased: " + fmt(worst_growth));
}

// 11. stability spectrum of the catalogue
void criterion_spectrum(Ctx&, CriterionResult& res) {
    auto narrow = stability_spectrum(
        make_reference({ReferenceKind::Cylinder3D, 1.0 / (4.0 * kPi), 0.5, {2, {32, 32}, {1, 1}}}),
        4);
    check(narrow.min_eigenvalue < 0.0, "thin cylinder missing its unstable mode");

    auto wide = stability_spectrum(
        make_reference({ReferenceKind::Cylinder3D, 0.25, 0.5, {2, {32, 32}, {1, 1}}}), 4);
    check(wide.strictly_stable, "wide cylinder not strictly stable");
    for (const auto& e : wide.entries) check(e.eigenvalue > 0.0, "nonpositive T-perp eigenvalue");

    auto d = stability_spectrum(disc_ref(128), 8);
    check(d.translations.size() == 2, "disc must report exactly 2 translation modes");
    double worst = 0.0;
    for (const auto& tmode : d.translations) worst = std::max(worst, std::abs(tmode.eigenvalue));
    res.detail = "thin cylinder min ev " + fmt(narrow.min_eigenvalue) + ", disc translation |ev| " +
                 fmt(worst);
    check(worst <= 1e-10, "disc translation eigenvalue above 1e-10");
}

// 12. bitwise determinism of the persisted streams
void criterion_determinism(Ctx& ctx, CriterionResult& res) {
    ExperimentConfig cfg;
    cfg.reference = {ReferenceKind::Lamella2D, 0.25, 0.5, {1, {128, 1}, {1, 1}}};
    cfg.flow.kind = FlowKind::VPMCF;
    cfg.flow.dt = 1e-4;
    cfg.flow.t_end = 0.02;
    cfg.flow.snapshot_every = 50;
    cfg.initial.kind = InitialKind::RandomBandLimited;
    cfg.initial.seed = 7;
    cfg.initial.kmax = 4;
    cfg.initial.c11_target = 5e-3;
    cfg.diagnostics.asymmetry = true;
    cfg.diagnostics.asymmetry_stride = 2;

    auto read_bytes = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        return os.str();
    };

    std::array<fs::path, 2> dirs = {ctx.scratch / "det_a", ctx.scratch / "det_b"};
    for (const auto& d : dirs) {
        ExperimentConfig c = cfg;
        c.output_dir = d.string();
        run_experiment(c);
    }
    std::vector<std::string> names = {"steps.ndjson", "diagnostics.ndjson", "recentering.ndjson",
                                      "snapshots.json"};
    for (const auto& entry : fs::directory_iterator(dirs[0]))
        if (entry.path().extension() == ".hf") names.push_back(entry.path().filename().string());
    for (const auto& name : names)
        check(read_bytes(dirs[0] / name) == read_bytes(dirs[1] / name),
              "stream '" + name + "' differs between identical runs");
    res.detail = std::to_string(names.size()) + " streams byte-identical";
}

} // namespace

bool AcceptanceReport::all_passed() const {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

AcceptanceReport run_acceptance(const std::string& scratch_dir, std::ostream& log) {
    Ctx ctx;
    ctx.scratch = scratch_dir;
    fs::create_directories(ctx.scratch);

    const std::vector<std::pair<std::string, CriterionFn>> criteria = {
        {"stationarity of catalogue references", criterion_stationarity},
        {"volume conservation", criterion_volume},
        {"perimeter monotonicity and dissipation identity", criterion_dissipation},
        {"exponential convergence rates", criterion_rates},
        {"disc converges to a translate", criterion_disc_stability},
        {"Alexandrov quotient bound", criterion_alexandrov},
        {"quantitative isoperimetric constant", criterion_isoperimetric},
        {"semigroup Schauder constants", criterion_schauder},
        {"mild solution cross-validation", criterion_mild},
        {"nonlinear residual scaling", criterion_residual_scaling},
        {"stability spectrum", criterion_spectrum},
        {"determinism of persisted streams", criterion_determinism},
    };

    AcceptanceReport report;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        CriterionResult res;
        res.id = static_cast<int>(i) + 1;
        res.name = criteria[i].first;
        auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(ctx, res);
            res.passed = true;
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = e.what();
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << "criterion " << res.id << " [" << (res.passed ? "PASS" : "FAIL") << "] " << res.name
            << ": " << res.detail << " (" << fmt(res.seconds) << " s)\n"
            << std::flush;
        report.results.push_back(std::move(res));
    }
    return report;
}

} // namespace torusflow
