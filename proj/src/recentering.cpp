#include "torusflow/recentering.hpp"

#include <cmath>
#include <numbers>

namespace torusflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm2(const std::array<double, 3>& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= kTwoPi;
    while (a <= -std::numbers::pi) a += kTwoPi;
    return a;
}

/// Normal component of sigma seen by the graph representation; in-plane
/// translations of a lamella and axial translations of a cylinder do not
/// stress the tubular guard.
double normal_shift_magnitude(const ReferenceSurface& ref, const std::array<double, 3>& sigma) {
    switch (ref.spec.kind) {
        case ReferenceKind::Lamella2D: return std::abs(sigma[1]);
        case ReferenceKind::Lamella3D: return std::abs(sigma[2]);
        case ReferenceKind::Disc2D: return std::hypot(sigma[0], sigma[1]);
        case ReferenceKind::Cylinder3D: return std::hypot(sigma[1], sigma[2]);
    }
    return norm2(sigma);
}

/// Radial re-expression of the planar curve q(s) = (r+u(s)) e(2 pi s) + shift
/// as a graph over the circle of radius r: v(alpha_i) = |q(s_i*)| - r with
/// s_i* solving angle(q(s)) = 2 pi s_i by Newton.
std::vector<double> radial_regraph(const SpectralGrid& g1d, const std::vector<double>& u, double r,
                                   double shift_x, double shift_y) {
    const int n = static_cast<int>(u.size());
    auto c = g1d.to_spectral(u);
    const int nc = static_cast<int>(c.size());

    // u(s) and du/ds in one rotation-recurrence sweep over the modes
    auto eval_pair = [&](double s, double& uu, double& us) {
        const std::complex<double> z = std::polar(1.0, kTwoPi * s);
        std::complex<double> zk = z;
        uu = c[0].real();
        us = 0.0;
        for (int k = 1; k < nc; ++k) {
            const double re = c[k].real() * zk.real() - c[k].imag() * zk.imag();
            const double im = c[k].real() * zk.imag() + c[k].imag() * zk.real();
            if (k == n / 2) {
                uu += re; // self-conjugate Nyquist: weight 1, derivative dropped
            } else {
                uu += 2.0 * re;
                us += -2.0 * kTwoPi * k * im;
            }
            zk *= z;
        }
    };

    auto q = [&](double s, double& qx, double& qy, double& qsx, double& qsy) {
        double uu, us;
        eval_pair(s, uu, us);
        double ct = std::cos(kTwoPi * s), st = std::sin(kTwoPi * s);
        double rho = r + uu;
        qx = rho * ct + shift_x;
        qy = rho * st + shift_y;
        qsx = us * ct - rho * kTwoPi * st;
        qsy = us * st + rho * kTwoPi * ct;
    };

    // injectivity of the angular projection on the grid
    for (int i = 0; i < n; ++i) {
        double qx, qy, qsx, qsy;
        q(g1d.coord(0, i), qx, qy, qsx, qsy);
        double r2 = qx * qx + qy * qy;
        if (r2 <= 0.0) throw FoldOver("translated curve passes through the centre");
        if ((qx * qsy - qy * qsx) / r2 <= 0.0)
            throw FoldOver("translated curve is not a radial graph");
    }

    std::vector<double> v(n);
    double s = 0.0; // warm start: the inverse map is monotone in the node angle
    for (int i = 0; i < n; ++i) {
        const double alpha = kTwoPi * g1d.coord(0, i);
        if (i == 0) s = g1d.coord(0, 0);
        double qx = 0, qy = 0, qsx = 0, qsy = 0;
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            q(s, qx, qy, qsx, qsy);
            double diff = wrap_angle(std::atan2(qy, qx) - alpha);
            double dalpha = (qx * qsy - qy * qsx) / (qx * qx + qy * qy);
            if (std::abs(diff) < 1e-14) {
                ok = true;
                break;
            }
            s -= diff / dalpha;
        }
        if (!ok) throw NoConvergence("radial reparametrization Newton stalled");
        v[i] = std::hypot(qx, qy) - r;
        s += 1.0 / n;
    }
    return v;
}

std::array<double, 2> solve2(const std::array<std::array<double, 2>, 2>& a,
                             const std::array<double, 2>& b) {
    double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det == 0.0) throw NoConvergence("singular Newton system in find_translation");
    return {(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det};
}

} // namespace

std::array<double, 3> barycenter_projection(const ReferenceSurface& ref, const HeightField& u) {
    check_field(ref, u);
    std::array<double, 3> out = {0.0, 0.0, 0.0};
    std::vector<double> integrand(ref.total_nodes());
    for (int c = 0; c < ref.ambient_dim; ++c) {
        for (int i = 0; i < ref.total_nodes(); ++i) integrand[i] = u.values[i] * ref.normal[i][c];
        out[c] = ref.grid.integrate(integrand);
    }
    return out;
}

HeightField reparametrize(const ReferenceSurface& ref, const HeightField& u,
                          const std::array<double, 3>& sigma) {
    check_field(ref, u);
    // for lamellae the in-plane shift composes and the normal shift adds, so
    // the exact final check_tubular below is the only guard needed; for
    // disc/cylinder the cross-section shift must keep the centre inside the
    // translated curve for the radial inversion to exist
    const bool curved =
        ref.spec.kind == ReferenceKind::Disc2D || ref.spec.kind == ReferenceKind::Cylinder3D;
    if (curved && normal_shift_magnitude(ref, sigma) + u.max_abs() >= ref.tubular_radius)
        throw TubularViolation("reparametrize: |sigma| + |u|_C0 exceeds the tubular radius");

    std::vector<double> v;
    switch (ref.spec.kind) {
        case ReferenceKind::Lamella2D: {
            v = ref.grid.shift(u.values, sigma[0]);
            for (double& x : v) x += sigma[1];
            break;
        }
        case ReferenceKind::Lamella3D: {
            v = ref.grid.shift(u.values, sigma[0], sigma[1]);
            for (double& x : v) x += sigma[2];
            break;
        }
        case ReferenceKind::Disc2D: {
            v = radial_regraph(ref.grid, u.values, ref.spec.radius, sigma[0], sigma[1]);
            break;
        }
        case ReferenceKind::Cylinder3D: {
            // axial shift is exact in Fourier space; cross-sections are discs
            auto shifted = ref.grid.shift(u.values, sigma[0], 0.0);
            const int n0 = ref.grid.n(0), n1 = ref.grid.n(1);
            SpectralGrid row({1, {n1, 1}, {kTwoPi * ref.spec.radius, 1.0}});
            v.resize(static_cast<std::size_t>(n0) * n1);
            for (int i = 0; i < n0; ++i) {
                std::vector<double> slice(n1);
                for (int j = 0; j < n1; ++j) slice[j] = shifted[ref.grid.param().index(i, j)];
                auto vr = radial_regraph(row, slice, ref.spec.radius, sigma[1], sigma[2]);
                for (int j = 0; j < n1; ++j) v[ref.grid.param().index(i, j)] = vr[j];
            }
            break;
        }
    }
    auto out = make_height_field(ref, std::move(v));
    check_tubular(ref, out);
    return out;
}

RecenteredState find_translation(const ReferenceSurface& ref, const HeightField& u,
                                 double delta_star) {
    check_field(ref, u);
    if (!(delta_star > 0.0)) throw FlowError("delta_star must be positive");

    auto defect_of = [&](const HeightField& v) {
        auto b = barycenter_projection(ref, v);
        double l2 = field_norm(ref, v.values, NormKind::l2());
        return l2 > 0.0 ? norm2(b) / l2 : 0.0;
    };

    const bool is_lamella =
        ref.spec.kind == ReferenceKind::Lamella2D || ref.spec.kind == ReferenceKind::Lamella3D;

    if (is_lamella) {
        // closed form: sigma is minus the mean along the normal axis
        const double m = ref.grid.mean(u.values);
        std::array<double, 3> sigma = {0.0, 0.0, 0.0};
        sigma[ref.ambient_dim - 1] = -m;

        // the Newton route must reproduce the closed form: the normalized
        // objective g(s) = mean(u) + s is linear with unit slope
        double s_newton = 0.0;
        for (int it = 0; it < 4 && std::abs(m + s_newton) >= 1e-15; ++it) s_newton -= m + s_newton;
        if (std::abs(s_newton - (-m)) > 1e-12)
            throw NoConvergence("lamella recentering self-test failed");

        auto v = reparametrize(ref, u, sigma);
        double defect = defect_of(v);
        return RecenteredState{sigma, std::move(v), defect};
    }

    // disc / cylinder: Newton on the 2 cross-section components of
    // g(sigma) = Int v nu dH, initialized with the translation Gram matrix
    // (Int nu_i nu_j = pi r per direction, per unit axial length)
    const int c0 = ref.spec.kind == ReferenceKind::Disc2D ? 0 : 1;
    const int c1 = c0 + 1;
    const double gram = std::numbers::pi * ref.spec.radius;

    auto b_full = barycenter_projection(ref, u);
    std::array<double, 2> s = {-b_full[c0] / gram, -b_full[c1] / gram};

    auto eval_g = [&](const std::array<double, 2>& sv, HeightField* v_out) {
        std::array<double, 3> sigma = {0.0, 0.0, 0.0};
        sigma[c0] = sv[0];
        sigma[c1] = sv[1];
        auto v = reparametrize(ref, u, sigma);
        auto b = barycenter_projection(ref, v);
        if (v_out) *v_out = std::move(v);
        return std::array<double, 2>{b[c0], b[c1]};
    };

    HeightField v_best;
    std::array<double, 2> g{};
    bool have = false;
    for (int it = 0; it < 50; ++it) {
        g = eval_g(s, &v_best);
        have = true;
        double l2 = field_norm(ref, v_best.values, NormKind::l2());
        double tol = std::max(1e-13 * std::max(l2, 1.0), 1e-16);
        if (std::hypot(g[0], g[1]) <= tol) break;
        const double h = 1e-7 * std::max(1.0, std::abs(s[0]) + std::abs(s[1]));
        std::array<std::array<double, 2>, 2> jac{};
        for (int c = 0; c < 2; ++c) {
            auto sp = s, sm = s;
            sp[c] += h;
            sm[c] -= h;
            auto gp = eval_g(sp, nullptr);
            auto gm = eval_g(sm, nullptr);
            jac[0][c] = (gp[0] - gm[0]) / (2.0 * h);
            jac[1][c] = (gp[1] - gm[1]) / (2.0 * h);
        }
        auto step = solve2(jac, g);
        // damp steps that would leave the graph regime
        double damp = 1.0;
        for (int tries = 0; tries < 8; ++tries) {
            std::array<double, 2> cand = {s[0] - damp * step[0], s[1] - damp * step[1]};
            std::array<double, 3> sigma = {0.0, 0.0, 0.0};
            sigma[c0] = cand[0];
            sigma[c1] = cand[1];
            try {
                (void)reparametrize(ref, u, sigma);
                s = cand;
                break;
            } catch (const FlowError&) {
                damp *= 0.5;
                if (tries == 7) throw NoConvergence("find_translation step left the graph regime");
            }
        }
        if (it == 49) throw NoConvergence("find_translation Newton did not converge in 50 steps");
    }
    if (!have) throw NoConvergence("find_translation failed to evaluate");

    std::array<double, 3> sigma = {0.0, 0.0, 0.0};
    sigma[c0] = s[0];
    sigma[c1] = s[1];
    double defect = defect_of(v_best);
    if (defect > delta_star)
        throw NoConvergence("projection defect above delta_star after recentering");
    return RecenteredState{sigma, std::move(v_best), defect};
}

TranslationTrack track_translations(const ReferenceSurface& ref, const Trajectory& traj,
                                    double delta_star) {
    traj.validate(ref);
    TranslationTrack out;
    for (int i = 0; i < traj.size(); ++i) {
        auto rc = find_translation(ref, traj.fields[i], delta_star);
        out.times.push_back(traj.times[i]);
        out.sigmas.push_back(rc.sigma);
        out.defects.push_back(rc.projection_defect);
    }
    const int m = static_cast<int>(out.sigmas.size());
    out.cauchy_modulus.assign(m, 0.0);
    out.dist_to_final.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double sup = 0.0;
        for (int j = i + 1; j < m; ++j) {
            std::array<double, 3> d = {out.sigmas[j][0] - out.sigmas[i][0],
                                       out.sigmas[j][1] - out.sigmas[i][1],
                                       out.sigmas[j][2] - out.sigmas[i][2]};
            sup = std::max(sup, norm2(d));
        }
        out.cauchy_modulus[i] = sup;
        std::array<double, 3> df = {out.sigmas[m - 1][0] - out.sigmas[i][0],
                                    out.sigmas[m - 1][1] - out.sigmas[i][1],
                                    out.sigmas[m - 1][2] - out.sigmas[i][2]};
        out.dist_to_final[i] = norm2(df);
    }
    if (m >= 12) {
        try {
            out.modulus_decay =
                fit_rate(out.times, out.cauchy_modulus, out.times.front(), out.times[m - 2], 10);
        } catch (const FlowError&) {
            out.modulus_decay = RateFit{}; // series touched zero or too short
        }
    }
    return out;
}

} // namespace torusflow
