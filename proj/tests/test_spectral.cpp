#include <doctest.h>

#include <cmath>
#include <numbers>

#include "torusflow/rng.hpp"
#include "torusflow/spectral_grid.hpp"

using namespace torusflow;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> random_field(const SpectralGrid& g, std::uint64_t seed) {
    std::vector<double> f(g.total());
    for (int i = 0; i < g.total(); ++i) f[i] = rng::draw_symmetric(seed, i);
    return f;
}
} // namespace

TEST_CASE("round trip to_spectral/from_spectral is identity") {
    SpectralGrid g({1, {64, 1}, {1.0, 1.0}});
    auto f = random_field(g, 7);
    auto back = g.from_spectral(g.to_spectral(f));
    for (int i = 0; i < g.total(); ++i) CHECK(back[i] == doctest::Approx(f[i]).epsilon(1e-13));
}

TEST_CASE("first and second derivative of a single mode, unit scale") {
    SpectralGrid g({1, {64, 1}, {1.0, 1.0}});
    std::vector<double> f(g.total());
    for (int i = 0; i < g.total(); ++i) f[i] = std::sin(kTwoPi * g.coord(0, i));
    auto d1 = g.derivative(f, 1);
    auto d2 = g.derivative(f, 2);
    for (int i = 0; i < g.total(); ++i) {
        double s = g.coord(0, i);
        CHECK(std::abs(d1[i] - kTwoPi * std::cos(kTwoPi * s)) < 1e-10);
        CHECK(std::abs(d2[i] - (-kTwoPi * kTwoPi * std::sin(kTwoPi * s))) < 1e-10);
    }
}

TEST_CASE("angular axis scaling: d/d(arclength) on a circle of radius r") {
    const double r = 0.25;
    SpectralGrid g({1, {128, 1}, {kTwoPi * r, 1.0}});
    std::vector<double> f(g.total());
    for (int i = 0; i < g.total(); ++i) f[i] = std::cos(3.0 * kTwoPi * g.coord(0, i)); // cos(3 theta)
    auto d2 = g.derivative(f, 2);
    // Laplace-Beltrami eigenvalue -(k/r)^2
    for (int i = 0; i < g.total(); ++i)
        CHECK(std::abs(d2[i] - (-(9.0 / (r * r)) * f[i])) < 1e-9);
}

TEST_CASE("2-D mixed derivatives and integration") {
    SpectralGrid g({2, {32, 32}, {1.0, 1.0}});
    std::vector<double> f(g.total());
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            f[g.param().index(i, j)] = std::sin(kTwoPi * g.coord(0, i)) * std::cos(kTwoPi * g.coord(1, j));
    auto dxy = g.derivative(f, 1, 1);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            double want = kTwoPi * kTwoPi * std::cos(kTwoPi * g.coord(0, i)) *
                          (-std::sin(kTwoPi * g.coord(1, j)));
            CHECK(std::abs(dxy[g.param().index(i, j)] - want) < 1e-10);
        }
    CHECK(g.integrate(f) == doctest::Approx(0.0).epsilon(1e-14));
    std::vector<double> sq(g.total());
    for (int k = 0; k < g.total(); ++k) sq[k] = f[k] * f[k];
    CHECK(g.integrate(sq) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("spectral shift matches analytic translation") {
    SpectralGrid g({1, {64, 1}, {1.0, 1.0}});
    std::vector<double> f(g.total());
    for (int i = 0; i < g.total(); ++i) {
        double s = g.coord(0, i);
        f[i] = 0.3 + std::sin(kTwoPi * s) + 0.2 * std::cos(2 * kTwoPi * s);
    }
    const double ds = 0.1375;
    auto sh = g.shift(f, ds);
    for (int i = 0; i < g.total(); ++i) {
        double s = g.coord(0, i) - ds;
        double want = 0.3 + std::sin(kTwoPi * s) + 0.2 * std::cos(2 * kTwoPi * s);
        CHECK(std::abs(sh[i] - want) < 1e-11);
    }
}

TEST_CASE("trig evaluation at arbitrary points reproduces band-limited fields") {
    SpectralGrid g({1, {64, 1}, {1.0, 1.0}});
    std::vector<double> f(g.total());
    for (int i = 0; i < g.total(); ++i) {
        double s = g.coord(0, i);
        f[i] = 1.5 - std::sin(kTwoPi * s) + 0.25 * std::cos(5 * kTwoPi * s);
    }
    auto c = g.to_spectral(f);
    for (double s : {0.0, 0.013, 0.37, 0.5, 0.99}) {
        double want = 1.5 - std::sin(kTwoPi * s) + 0.25 * std::cos(5 * kTwoPi * s);
        CHECK(std::abs(g.eval(c, s) - want) < 1e-11);
    }

    SpectralGrid g2({2, {32, 32}, {1.0, 1.0}});
    std::vector<double> f2(g2.total());
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            f2[g2.param().index(i, j)] =
                std::cos(kTwoPi * (2 * g2.coord(0, i) - 3 * g2.coord(1, j))) + 0.5;
    auto c2 = g2.to_spectral(f2);
    CHECK(g2.eval(c2, 0.21, 0.77) ==
          doctest::Approx(std::cos(kTwoPi * (2 * 0.21 - 3 * 0.77)) + 0.5).epsilon(1e-11));
}

TEST_CASE("node_distance is the geodesic torus distance") {
    SpectralGrid g({1, {16, 1}, {2.0, 1.0}});
    CHECK(g.node_distance(0, 1) == doctest::Approx(2.0 / 16));
    CHECK(g.node_distance(0, 15) == doctest::Approx(2.0 / 16));
    CHECK(g.node_distance(0, 8) == doctest::Approx(1.0));
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(SpectralGrid({1, {15, 1}, {1.0, 1.0}}), FlowError);
    CHECK_THROWS_AS(SpectralGrid({1, {24, 1}, {1.0, 1.0}}), FlowError);
    CHECK_THROWS_AS(SpectralGrid({3, {16, 16}, {1.0, 1.0}}), FlowError);
}
