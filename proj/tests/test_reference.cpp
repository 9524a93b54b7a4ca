#include <doctest.h>

#include <cmath>
#include <numbers>

#include "torusflow/graph_geometry.hpp"
#include "torusflow/height_field.hpp"
#include "torusflow/reference.hpp"
#include "torusflow/rng.hpp"

using namespace torusflow;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

ReferenceSurface lamella(int n = 256, double w = 0.5) {
    return make_reference({ReferenceKind::Lamella2D, 0.25, w, {1, {n, 1}, {1, 1}}});
}
ReferenceSurface disc(double r = 0.25, int n = 256) {
    return make_reference({ReferenceKind::Disc2D, r, 0.5, {1, {n, 1}, {1, 1}}});
}
ReferenceSurface cylinder(double r = 0.2, int n0 = 64, int n1 = 64) {
    return make_reference({ReferenceKind::Cylinder3D, r, 0.5, {2, {n0, n1}, {1, 1}}});
}

HeightField mode_field(const ReferenceSurface& ref, int k, double amp, bool use_cos = false) {
    std::vector<double> v(ref.total_nodes());
    for (int i = 0; i < ref.grid.n(0); ++i)
        for (int j = 0; j < (ref.grid.dims() == 2 ? ref.grid.n(1) : 1); ++j) {
            double s = ref.grid.coord(0, i);
            v[ref.grid.param().index(i, j)] =
                amp * (use_cos ? std::cos(kTwoPi * k * s) : std::sin(kTwoPi * k * s));
        }
    return make_height_field(ref, v);
}

HeightField random_band_limited(const ReferenceSurface& ref, std::uint64_t seed, double amp, int kmax) {
    std::vector<double> v(ref.total_nodes(), 0.0);
    std::uint64_t ctr = 0;
    for (int k0 = 0; k0 <= kmax; ++k0)
        for (int k1 = (ref.grid.dims() == 2 ? -kmax : 0); k1 <= (ref.grid.dims() == 2 ? kmax : 0); ++k1) {
            if (k0 == 0 && k1 <= 0) continue;
            double a = rng::draw_symmetric(seed, ctr++) / (1.0 + k0 * k0 + k1 * k1);
            double ph = kTwoPi * rng::draw_unit(seed, ctr++);
            for (int i = 0; i < ref.grid.n(0); ++i)
                for (int j = 0; j < (ref.grid.dims() == 2 ? ref.grid.n(1) : 1); ++j) {
                    double arg = kTwoPi * (k0 * ref.grid.coord(0, i) + k1 * (ref.grid.dims() == 2 ? ref.grid.coord(1, j) : 0.0));
                    v[ref.grid.param().index(i, j)] += a * std::cos(arg + ph);
                }
        }
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    for (double& x : v) x *= amp / m;
    return make_height_field(ref, v);
}
} // namespace

TEST_CASE("catalogue closed forms") {
    auto lam = lamella();
    CHECK(lam.perimeter == doctest::Approx(2.0));
    CHECK(lam.mean_curvature == 0.0);
    CHECK(lam.volume == doctest::Approx(0.5));
    CHECK(lam.tubular_radius == doctest::Approx(0.25));

    auto d = disc();
    CHECK(d.perimeter == doctest::Approx(kTwoPi * 0.25));
    CHECK(d.mean_curvature == doctest::Approx(4.0));
    CHECK(d.sff_norm_sq == doctest::Approx(16.0));
    CHECK(d.volume == doctest::Approx(kPi * 0.0625));

    auto cyl = cylinder();
    CHECK(cyl.perimeter == doctest::Approx(kTwoPi * 0.2));
    CHECK(cyl.mean_curvature == doctest::Approx(5.0));
    CHECK(cyl.kappa[1] == doctest::Approx(5.0));
    CHECK(cyl.kappa[0] == 0.0);
    CHECK(cyl.volume == doctest::Approx(kPi * 0.04));

    // criticality: H_E is a single stored constant, deviation is exactly zero
    CHECK(lam.mean_curvature == lam.kappa[0] + lam.kappa[1]);

    // unit normals
    for (const auto& nu : d.normal)
        CHECK(nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("spec validation rejects bad input") {
    CHECK_THROWS_AS(make_reference({ReferenceKind::Disc2D, 0.6, 0.5, {1, {256, 1}, {1, 1}}}), FlowError);
    CHECK_THROWS_AS(make_reference({ReferenceKind::Disc2D, 0.0, 0.5, {1, {256, 1}, {1, 1}}}), FlowError);
    CHECK_THROWS_AS(make_reference({ReferenceKind::Lamella2D, 0.25, 1.5, {1, {256, 1}, {1, 1}}}), FlowError);
    CHECK_THROWS_AS(make_reference({ReferenceKind::Lamella2D, 0.25, 0.5, {1, {100, 1}, {1, 1}}}), FlowError);
    CHECK_THROWS_AS(make_reference({ReferenceKind::Cylinder3D, 0.2, 0.5, {1, {256, 1}, {1, 1}}}), FlowError);
}

TEST_CASE("second variation closed forms") {
    auto lam = lamella();
    auto phi = mode_field(lam, 1, 1.0, true); // cos(2 pi x)
    CHECK(second_variation(lam, phi) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));

    auto d = disc();
    auto phi2 = mode_field(d, 2, 1.0, true); // cos(2 theta)
    CHECK(second_variation(d, phi2) == doctest::Approx(3.0 * kPi / 0.25).epsilon(1e-12));

    CHECK(second_variation(d, zero_height_field(d)) == 0.0);
}

TEST_CASE("second variation matches finite differences of the constrained perimeter") {
    // oracle: D^2_eps [P(E_{eps phi}) - H_E |E_{eps phi}|], the Lagrangian whose
    // critical point is E, evaluated by central second differences
    auto check_ref = [](const ReferenceSurface& ref, const HeightField& phi) {
        const double eps = 1e-3;
        auto scaled = [&](double s) {
            std::vector<double> v(phi.values);
            for (double& x : v) x *= s;
            return make_height_field(ref, v);
        };
        double lp = perimeter(ref, scaled(eps)) - ref.mean_curvature * enclosed_volume(ref, scaled(eps));
        double l0 = perimeter(ref, scaled(0.0)) - ref.mean_curvature * enclosed_volume(ref, scaled(0.0));
        double lm = perimeter(ref, scaled(-eps)) - ref.mean_curvature * enclosed_volume(ref, scaled(-eps));
        double fd = (lp - 2.0 * l0 + lm) / (eps * eps);
        CHECK(fd == doctest::Approx(second_variation(ref, phi)).epsilon(1e-3));
    };
    check_ref(lamella(), random_band_limited(lamella(), 11, 1.0, 5));
    check_ref(disc(), random_band_limited(disc(), 12, 1.0, 5));
    check_ref(cylinder(), random_band_limited(cylinder(), 13, 1.0, 3));
}

TEST_CASE("first-variation consistency at rate O(eps)") {
    auto d = disc();
    auto phi = random_band_limited(d, 21, 1.0, 5);
    std::vector<double> hphi(d.total_nodes());
    for (int i = 0; i < d.total_nodes(); ++i) hphi[i] = d.mean_curvature * phi.values[i];
    const double exact = d.grid.integrate(hphi);

    auto fd_err = [&](double eps) {
        std::vector<double> v(phi.values);
        for (double& x : v) x *= eps;
        double fd = (perimeter(d, make_height_field(d, v)) - d.perimeter) / eps;
        return std::abs(fd - exact);
    };
    double e2 = fd_err(1e-2), e3 = fd_err(1e-3), e4 = fd_err(1e-4);
    CHECK(e3 / e2 == doctest::Approx(0.1).epsilon(0.25));
    CHECK(e4 / e3 == doctest::Approx(0.1).epsilon(0.25));
}

TEST_CASE("stability spectrum: lamella") {
    auto spec = stability_spectrum(lamella(), 8);
    CHECK(spec.translations.size() == 1); // one normal translation; in-slab shifts act trivially
    CHECK(spec.translations[0].eigenvalue == 0.0);
    CHECK(spec.strictly_stable);
    CHECK(spec.min_eigenvalue == doctest::Approx(kTwoPi * kTwoPi).epsilon(1e-12));
    for (const auto& e : spec.entries) CHECK(e.eigenvalue > 0.0);
}

TEST_CASE("stability spectrum: disc translations are the k=1 zero modes") {
    auto spec = stability_spectrum(disc(), 8);
    CHECK(spec.translations.size() == 2);
    for (const auto& t : spec.translations) {
        CHECK(t.mode[0] == 1);
        CHECK(std::abs(t.eigenvalue) <= 1e-10);
    }
    CHECK(spec.strictly_stable);
    // k=2 eigenvalue (k^2-1)/r^2
    CHECK(spec.min_eigenvalue == doctest::Approx(3.0 / 0.0625).epsilon(1e-12));
}

TEST_CASE("stability spectrum: cylinder Plateau-Rayleigh threshold") {
    // 2 pi r < 1: axial k=1 mode is unstable
    auto narrow = stability_spectrum(make_reference({ReferenceKind::Cylinder3D, 1.0 / (4.0 * kPi), 0.5,
                                                     {2, {32, 32}, {1, 1}}}),
                                     4);
    CHECK(narrow.min_eigenvalue < 0.0);
    CHECK_FALSE(narrow.strictly_stable);
    // eigenvalue formula (2 pi k)^2 - 1/r^2 for the axial mode
    double r = 1.0 / (4.0 * kPi);
    CHECK(narrow.min_eigenvalue == doctest::Approx(kTwoPi * kTwoPi - 1.0 / (r * r)).epsilon(1e-12));

    auto wide = stability_spectrum(make_reference({ReferenceKind::Cylinder3D, 0.25, 0.5,
                                                   {2, {32, 32}, {1, 1}}}),
                                   4);
    CHECK(wide.strictly_stable);
    CHECK(wide.translations.size() == 2);
    for (const auto& t : wide.translations) CHECK(std::abs(t.eigenvalue) <= 1e-10);
}
