#include <doctest.h>

#include <cmath>
#include <numbers>

#include "torusflow/graph_geometry.hpp"
#include "torusflow/semigroup.hpp"

using namespace torusflow;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

ReferenceSurface lamella(int n = 64) {
    return make_reference({ReferenceKind::Lamella2D, 0.25, 0.5, {1, {n, 1}, {1, 1}}});
}

HeightField sine_field(const ReferenceSurface& ref, int k, double amp) {
    std::vector<double> v(ref.total_nodes());
    for (int i = 0; i < ref.grid.n(0); ++i)
        v[i] = amp * std::sin(kTwoPi * k * ref.grid.coord(0, i));
    return make_height_field(ref, v);
}
} // namespace

TEST_CASE("semigroups: identity at t=0, single-mode decay, constants invariant") {
    auto ref = lamella();
    auto u0 = sine_field(ref, 1, 1.0);
    auto same = biharmonic_semigroup(ref, u0, 0.0);
    for (int i = 0; i < ref.total_nodes(); ++i) CHECK(same.values[i] == u0.values[i]);

    const double t = 3e-4;
    const double mu = std::pow(kTwoPi, 4.0);
    auto ub = biharmonic_semigroup(ref, u0, t);
    auto uh = heat_semigroup(ref, u0, t);
    for (int i = 0; i < ref.total_nodes(); ++i) {
        CHECK(std::abs(ub.values[i] - std::exp(-t * mu) * u0.values[i]) < 1e-13);
        CHECK(std::abs(uh.values[i] - std::exp(-t * kTwoPi * kTwoPi) * u0.values[i]) < 1e-13);
    }

    HeightField c{ref.hash, std::vector<double>(ref.total_nodes(), 0.37)};
    auto cb = biharmonic_semigroup(ref, c, 1.0);
    for (double v : cb.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));

    CHECK_THROWS_AS(biharmonic_semigroup(ref, u0, -1.0), FlowError);
}

TEST_CASE("semigroup property and mass conservation to machine precision") {
    auto ref = lamella();
    auto u0 = random_band_limited_field(ref, 5, 1.0, 8);
    auto two_step = biharmonic_semigroup(ref, biharmonic_semigroup(ref, u0, 2e-4), 3e-4);
    auto one_step = biharmonic_semigroup(ref, u0, 5e-4);
    for (int i = 0; i < ref.total_nodes(); ++i)
        CHECK(std::abs(two_step.values[i] - one_step.values[i]) < 1e-14);

    double m0 = ref.grid.mean(u0.values);
    double m1 = ref.grid.mean(biharmonic_semigroup(ref, u0, 0.01).values);
    CHECK(m1 == doctest::Approx(m0).epsilon(1e-13));
}

TEST_CASE("duhamel: zero source, constant-in-time mode, spatially constant source") {
    auto ref = lamella();
    const double t = 5e-4;
    const int m = 33;

    std::vector<HeightField> zeros(m, zero_height_field(ref));
    auto v0 = duhamel(ref, zeros, t);
    for (double v : v0.values) CHECK(v == 0.0);

    std::vector<HeightField> consts(m, sine_field(ref, 1, 1.0));
    auto v1 = duhamel(ref, consts, t);
    const double mu = std::pow(kTwoPi, 4.0);
    const double want = (1.0 - std::exp(-t * mu)) / mu;
    for (int i = 0; i < ref.total_nodes(); ++i)
        CHECK(std::abs(v1.values[i] - want * std::sin(kTwoPi * ref.grid.coord(0, i))) < 1e-12);

    std::vector<HeightField> flat(m, HeightField{ref.hash, std::vector<double>(ref.total_nodes(), 2.5)});
    auto v2 = duhamel(ref, flat, t);
    for (double v : v2.values) CHECK(v == doctest::Approx(2.5 * t).epsilon(1e-13));
}

TEST_CASE("duhamel time-interpolation error is O(dt^2)") {
    auto ref = lamella();
    const double t = 4e-4;
    const double mu = std::pow(kTwoPi, 4.0);
    const double omega = 3.0 / t;
    auto exact = (mu * std::cos(omega * t) + omega * std::sin(omega * t) - mu * std::exp(-mu * t)) /
                 (mu * mu + omega * omega);

    auto solve = [&](int m) {
        std::vector<HeightField> src;
        for (int i = 0; i < m; ++i) {
            double s = t * i / (m - 1);
            src.push_back(sine_field(ref, 1, std::cos(omega * s)));
        }
        auto v = duhamel(ref, src, t);
        // amplitude of the sin(2 pi x) mode at the quarter node
        return v.values[ref.grid.n(0) / 4];
    };
    double e1 = std::abs(solve(17) - exact);
    double e2 = std::abs(solve(33) - exact);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
}

TEST_CASE("norm reports: zero and constant-in-time trajectories") {
    auto ref = lamella();
    Trajectory traj{ref.hash, FlowKind::LinearBiharmonic, {}, {}};
    for (int i = 0; i <= 10; ++i) traj.append(i * 1e-4, zero_height_field(ref));
    auto yt = norm_YT(ref, traj, 0.5);
    auto xt = norm_XT(ref, traj, 0.5);
    CHECK(yt.y_norm == 0.0);
    CHECK(xt.x_norm == 0.0);

    Trajectory cst{ref.hash, FlowKind::LinearBiharmonic, {}, {}};
    for (int i = 0; i <= 10; ++i) cst.append(i * 1e-4, sine_field(ref, 1, 1.0));
    auto ytc = norm_YT(ref, cst, 0.5);
    CHECK(ytc.per_term.at("t12b4_holder_time") == 0.0);
    auto xtc = norm_XT(ref, cst, 0.5);
    CHECK(xtc.per_term.at("holder_time_grad4") == 0.0);
}

TEST_CASE("norm_XT weighted grad4 term matches the single-mode closed form") {
    auto ref = lamella();
    auto u0 = sine_field(ref, 1, 1.0);
    const double mu = std::pow(kTwoPi, 4.0);
    const double T = 2e-3;
    Trajectory traj{ref.hash, FlowKind::LinearBiharmonic, {}, {}};
    const int m = 400;
    for (int i = 0; i <= m; ++i) {
        double t = T * i / m;
        traj.append(t, biharmonic_semigroup(ref, u0, t));
    }
    auto rep = norm_XT(ref, traj, 0.5);
    const double want = mu / std::sqrt(2.0 * mu * std::numbers::e); // sup_t sqrt(t) mu e^{-t mu}
    CHECK(rep.per_term.at("weighted_c0_grad4") == doctest::Approx(want).epsilon(1e-3));
    CHECK(rep.x_norm >= rep.per_term.at("weighted_c0_grad4"));
}

TEST_CASE("schauder constants match pure-mode closed forms to 1e-8") {
    auto ref = lamella();
    auto u0 = sine_field(ref, 1, 1.0);
    // C_{l,k} = (2 pi)^2 (a/e)^a with a = l + k/4 for u0 = sin(2 pi x)
    for (int l = 0; l <= 1; ++l)
        for (int k = 0; k <= 2; ++k) {
            double a = l + k / 4.0;
            double want = kTwoPi * kTwoPi * (a == 0.0 ? 1.0 : std::pow(a / std::numbers::e, a));
            double got = schauder_constant(ref, u0, l, k, 1.0);
            CHECK(got == doctest::Approx(want).epsilon(1e-8));
        }
}

TEST_CASE("schauder constant of a constant field vanishes") {
    auto ref = lamella();
    HeightField c{ref.hash, std::vector<double>(ref.total_nodes(), 0.4)};
    CHECK(schauder_constant(ref, c, 0, 0, 1.0) <= 1e-14);
    CHECK(schauder_constant(ref, c, 1, 0, 1.0) <= 1e-14);
}

TEST_CASE("empirical schauder constants are uniform across random data") {
    auto ref = lamella();
    auto rows = semigroup_estimate_check(ref, 10, 2, 1, 1.0);
    CHECK(rows.size() == 6);
    for (const auto& row : rows) {
        CHECK(row.ratio_max_min >= 1.0);
        CHECK(row.ratio_max_min <= 10.0);
    }
}

TEST_CASE("discrete |Vf|_XT <= C |f|_YT with refinement-stable C") {
    auto ref = lamella();
    const double T = 1e-3;
    auto measure = [&](int m) {
        std::vector<HeightField> src;
        Trajectory ftraj{ref.hash, FlowKind::LinearBiharmonic, {}, {}};
        for (int i = 0; i <= m; ++i) {
            double s = T * i / m;
            auto f = random_band_limited_field(ref, 77, 1.0, 4);
            for (double& x : f.values) x *= std::cos(200.0 * s) + 1.5;
            src.push_back(f);
            ftraj.append(s, src.back());
        }
        auto path = duhamel_path(ref, src, T);
        Trajectory vtraj{ref.hash, FlowKind::LinearBiharmonic, {}, {}};
        for (int i = 0; i <= m; ++i) vtraj.append(T * i / m, path[i]);
        return norm_XT(ref, vtraj, 0.5).x_norm / norm_YT(ref, ftraj, 0.5).y_norm;
    };
    double c1 = measure(60), c2 = measure(120);
    CHECK(c1 == doctest::Approx(c2).epsilon(0.2));
}
