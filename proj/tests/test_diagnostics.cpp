#include <doctest.h>

#include <cmath>
#include <numbers>

#include "torusflow/diagnostics.hpp"
#include "torusflow/rng.hpp"

using namespace torusflow;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

ReferenceSurface lamella(int n = 128) {
    return make_reference({ReferenceKind::Lamella2D, 0.25, 0.5, {1, {n, 1}, {1, 1}}});
}
ReferenceSurface disc(double r = 0.25, int n = 128) {
    return make_reference({ReferenceKind::Disc2D, r, 0.5, {1, {n, 1}, {1, 1}}});
}

HeightField trig_field(const ReferenceSurface& ref, int k, double amp, bool use_cos,
                       double offset = 0.0) {
    std::vector<double> v(ref.total_nodes());
    for (int i = 0; i < ref.grid.n(0); ++i) {
        double arg = kTwoPi * k * ref.grid.coord(0, i);
        v[i] = offset + amp * (use_cos ? std::cos(arg) : std::sin(arg));
    }
    return make_height_field(ref, v);
}
} // namespace

TEST_CASE("snapshot diagnostics: equilibrium and linearized quotients") {
    auto lam = lamella();
    auto zero = zero_height_field(lam);
    auto rc0 = find_translation(lam, zero, 0.1);
    auto rec0 = snapshot_diagnostics(lam, analyze(lam, zero), rc0, 0.0, 0.1);
    CHECK(std::abs(rec0.perimeter_gap) <= 1e-14);
    CHECK(std::abs(rec0.l2_curvature_gap) <= 1e-12);
    CHECK_FALSE(rec0.alexandrov_quotient.has_value());
    CHECK_FALSE(rec0.poincare_quotient.has_value());

    const double eps = 1e-4;
    auto u = trig_field(lam, 1, eps, false);
    auto rc = find_translation(lam, u, 0.1);
    auto rec = snapshot_diagnostics(lam, analyze(lam, u), rc, 0.0, 0.1);
    // mode-wise |u|_H1 / |u''|_L2 = sqrt(1 + (2 pi)^2) / (2 pi)^2
    const double want = std::sqrt(1.0 + kTwoPi * kTwoPi) / (kTwoPi * kTwoPi);
    REQUIRE(rec.alexandrov_quotient.has_value());
    CHECK(*rec.alexandrov_quotient == doctest::Approx(want).epsilon(1e-4));
    REQUIRE(rec.poincare_quotient.has_value());
    CHECK(*rec.poincare_quotient == doctest::Approx(1.0 / kTwoPi).epsilon(1e-4));

    auto d = disc();
    auto ud = trig_field(d, 2, 1e-4, true);
    auto rcd = find_translation(d, ud, 0.1);
    auto recd = snapshot_diagnostics(d, analyze(d, ud), rcd, 0.0, 0.1);
    REQUIRE(recd.poincare_quotient.has_value());
    CHECK(*recd.poincare_quotient == doctest::Approx(0.25 / 2.0).epsilon(1e-3));
}

TEST_CASE("fraenkel asymmetry: exact translates have alpha = 0") {
    auto lam = lamella();
    auto r0 = fraenkel_asymmetry(lam, zero_height_field(lam));
    CHECK(r0.alpha <= 1e-12);

    // u = c is the translate E + (0, c); alpha(E, F) = min_x |E sd (F + x)|
    // vanishes at x = (0, -c)
    HeightField c{lam.hash, std::vector<double>(lam.total_nodes(), 0.07)};
    auto rc = fraenkel_asymmetry(lam, c);
    CHECK(rc.alpha <= 1e-7);
    CHECK(rc.shift[1] == doctest::Approx(-0.07).epsilon(1e-4));
    CHECK(rc.excluded_shifts > 0); // normal shifts beyond the guard were dropped

    // grid translation of the disc
    auto d = disc();
    auto moved = reparametrize(d, zero_height_field(d), {0.03, -0.05, 0.0});
    auto rd = fraenkel_asymmetry(d, moved);
    CHECK(rd.alpha <= 1e-7);
    CHECK(rd.shift[0] == doctest::Approx(-0.03).epsilon(1e-3));
    CHECK(rd.shift[1] == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("fraenkel asymmetry of a sine profile matches the 4096^2 rasterization oracle") {
    auto lam = lamella(256);
    const double eps = 0.01;
    auto u = trig_field(lam, 1, eps, false);
    auto res = fraenkel_asymmetry(lam, u);
    CHECK(res.alpha == doctest::Approx(2.0 * eps / kPi).epsilon(1e-4));

    // 4096-column rasterization with exact per-column coverage of the strip
    // between the wall of E and the wall of E_u
    const int npx = 4096;
    const double h = 1.0 / npx;
    double covered = 0.0;
    for (int ix = 0; ix < npx; ++ix) {
        double x = (ix + 0.5) * h;
        double top = 0.5 + eps * std::sin(kTwoPi * x);
        covered += std::abs(top - 0.5);
    }
    double raster = covered * h;
    CHECK(std::abs(res.alpha - raster) <= 1e-6);
}

TEST_CASE("dissipation functional closed forms and exact-match zero") {
    auto lam = lamella();
    HeightField c{lam.hash, std::vector<double>(lam.total_nodes(), 0.04)};
    // tau = 0: D = Int_0^c s ds per unit wall length = c^2/2 on the free wall
    CHECK(dissipation_functional(lam, c, {0.0, 0.0, 0.0}) ==
          doctest::Approx(0.04 * 0.04 / 2.0).epsilon(1e-12));

    // E_u identical to E - tau gives zero
    auto w = reparametrize(lam, zero_height_field(lam), {0.0, 0.03, 0.0});
    CHECK(dissipation_functional(lam, w, {0.0, -0.03, 0.0}) <= 1e-15);
}

TEST_CASE("disc dissipation functional agrees with a Monte-Carlo oracle") {
    auto d = disc();
    auto u = trig_field(d, 2, 0.02, true, 0.01);
    std::array<double, 3> tau = {0.004, -0.003, 0.0};
    double exact = dissipation_functional(d, u, tau);

    // MC oracle: sample the annulus 0.15 <= |p - c| <= 0.35 uniformly,
    // integrate dist_{dG} over E_u symmdiff G with G = E - tau
    const long N = 10000000;
    const double r_lo = 0.15, r_hi = 0.35;
    auto u_coeff = d.grid.to_spectral(u.values);
    double acc = 0.0;
    for (long s = 0; s < N; ++s) {
        double a1 = rng::draw_unit(999, 2 * s);
        double a2 = rng::draw_unit(999, 2 * s + 1);
        double rr = std::sqrt(r_lo * r_lo + a1 * (r_hi * r_hi - r_lo * r_lo));
        double th = kTwoPi * a2;
        double px = rr * std::cos(th), py = rr * std::sin(th);
        // membership in E_u: rr <= r + u(theta)
        bool in_eu = rr <= 0.25 + d.grid.eval(u_coeff, th / kTwoPi);
        double gx = px + tau[0], gy = py + tau[1];
        bool in_g = std::hypot(gx, gy) <= 0.25;
        if (in_eu != in_g) acc += std::abs(std::hypot(gx, gy) - 0.25);
    }
    double area = kPi * (r_hi * r_hi - r_lo * r_lo);
    double mc = acc / N * area;
    CHECK(exact == doctest::Approx(mc).epsilon(1e-3));
}

TEST_CASE("fit_rate recovers synthetic exponentials exactly") {
    std::vector<double> t, y;
    for (int i = 0; i <= 50; ++i) {
        t.push_back(0.01 * i);
        y.push_back(3.7 * std::exp(-42.0 * t.back()));
    }
    auto fit = fit_rate(t, y, 0.05, 0.4);
    CHECK(fit.rate == doctest::Approx(42.0).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(3.7).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(fit_rate(t, std::vector<double>(t.size(), -1.0), 0.0, 0.4), FlowError);
}

TEST_CASE("lamella VPMCF perimeter gap decays at twice the spectral gap") {
    auto lam = lamella();
    auto u0 = trig_field(lam, 1, 2e-4, false);
    FlowConfig cfg;
    cfg.kind = FlowKind::VPMCF;
    cfg.dt = 1e-5;
    cfg.t_end = 0.1;
    cfg.snapshot_every = 200;
    auto res = run_flow(lam, u0, cfg);

    std::vector<double> t, gap;
    for (int i = 0; i < res.trajectory.size(); ++i) {
        t.push_back(res.trajectory.times[i]);
        gap.push_back(perimeter(lam, res.trajectory.fields[i]) - lam.perimeter);
    }
    auto fit = fit_rate(t, gap, 0.02, 0.09);
    CHECK(fit.rate == doctest::Approx(2.0 * kTwoPi * kTwoPi).epsilon(0.05));
    CHECK(fit.r_squared > 0.999);
}

TEST_CASE("trajectory diagnostics: monotone gap, bounded quotients, isoperimetric constant") {
    auto lam = lamella();
    auto u0 = trig_field(lam, 1, 1e-3, false);
    FlowConfig cfg;
    cfg.kind = FlowKind::VPMCF;
    cfg.dt = 1e-5;
    cfg.t_end = 0.04;
    cfg.snapshot_every = 100;
    auto res = run_flow(lam, u0, cfg);

    DiagnosticsOptions opts;
    opts.asymmetry = true;
    auto diag = diagnose_trajectory(lam, res.trajectory, opts);

    const double lin_quotient = std::sqrt(1.0 + kTwoPi * kTwoPi) / (kTwoPi * kTwoPi);
    for (std::size_t i = 1; i < diag.records.size(); ++i)
        CHECK(diag.records[i].perimeter_gap <=
              diag.records[i - 1].perimeter_gap + 1e-12 * lam.perimeter);
    for (const auto& r : diag.records) {
        if (r.alexandrov_quotient) CHECK(*r.alexandrov_quotient <= 1.1 * lin_quotient);
        if (r.poincare_quotient) CHECK(*r.poincare_quotient <= 1.1 / kTwoPi);
        CHECK(r.projection_defect <= 0.1);
        CHECK(std::abs(r.volume_drift) <= 1e-10);
    }

    // single-mode prediction alpha^2/gap = (2 eps/pi)^2 / (eps^2 (2 pi)^2 / 4) = 4/pi^4
    double iso = isoperimetric_check(diag.records);
    CHECK(iso == doctest::Approx(4.0 / std::pow(kPi, 4.0)).epsilon(0.05));

    // dissipation functional decreases to zero along the run
    REQUIRE(diag.records.front().dissipation_functional.has_value());
    REQUIRE(diag.records.back().dissipation_functional.has_value());
    // amplitude decays by e^{-(2 pi)^2 t_end} ~ 0.2, so D ~ u^2 drops ~25x
    CHECK(*diag.records.back().dissipation_functional <
          0.05 * *diag.records.front().dissipation_functional);
}

TEST_CASE("ndjson and csv writers produce one line per record") {
    auto lam = lamella();
    auto u = trig_field(lam, 1, 1e-3, false);
    auto rc = find_translation(lam, u, 0.1);
    auto rec = snapshot_diagnostics(lam, analyze(lam, u), rc, 0.5, 0.1);
    auto line = diagnostics_record_json(rec);
    CHECK(line.find("\"perimeter_gap\"") != std::string::npos);
    CHECK(line.find("\"alexandrov_quotient\"") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}
