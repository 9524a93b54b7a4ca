#include "torusflow/graph_geometry.hpp"

#include <cmath>
#include <numbers>

namespace torusflow {

namespace {

double wrap_unit(double x) {
    double y = x - std::floor(x);
    return y == 1.0 ? 0.0 : y;
}

void check_factors(const ReferenceSurface& ref, const HeightField& u) {
    check_tubular(ref, u);
    for (int a = 0; a < ref.grid.dims(); ++a) {
        if (ref.kappa[a] == 0.0) continue;
        for (double v : u.values)
            if (1.0 + ref.kappa[a] * v <= 0.0)
                throw DegenerateFactor("curvature factor 1 + kappa*u is nonpositive");
    }
}

long binomial(int n, int k) {
    long b = 1;
    for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
    return b;
}

} // namespace

std::vector<double> derivative_tensor_sq(const SpectralGrid& grid, const std::vector<double>& f, int k) {
    std::vector<double> out(grid.total(), 0.0);
    if (k == 0) {
        for (int i = 0; i < grid.total(); ++i) out[i] = f[i] * f[i];
        return out;
    }
    if (grid.dims() == 1) {
        auto d = grid.derivative(f, k, 0);
        for (int i = 0; i < grid.total(); ++i) out[i] = d[i] * d[i];
        return out;
    }
    for (int a = 0; a <= k; ++a) {
        auto d = grid.derivative(f, k - a, a);
        double mult = static_cast<double>(binomial(k, a));
        for (int i = 0; i < grid.total(); ++i) out[i] += mult * d[i] * d[i];
    }
    return out;
}

SurfaceField immersion(const ReferenceSurface& ref, const HeightField& u) {
    check_tubular(ref, u);
    SurfaceField out{ref.hash, ref.ambient_dim, std::vector<double>(ref.total_nodes() * ref.ambient_dim)};
    for (int i = 0; i < ref.total_nodes(); ++i)
        for (int c = 0; c < ref.ambient_dim; ++c)
            out.at(i, c) = wrap_unit(ref.points[i][c] + u.values[i] * ref.normal[i][c]);
    return out;
}

GeometryCache analyze(const ReferenceSurface& ref, const HeightField& u) {
    check_factors(ref, u);
    const auto& g = ref.grid;
    const int n = g.total();
    const double r = ref.spec.radius;

    GeometryCache cache;
    cache.u = u;
    cache.normal_tilt.resize(n);
    cache.area_factor.resize(n);
    cache.mean_curvature.resize(n);
    cache.normal_graph = SurfaceField{ref.hash, ref.ambient_dim,
                                      std::vector<double>(static_cast<std::size_t>(n) * ref.ambient_dim)};

    // arclength derivatives on the reference
    auto d0 = g.derivative(u.values, 1, 0);
    auto d00 = g.derivative(u.values, 2, 0);
    std::vector<double> d1, d11, d01;
    if (g.dims() == 2) {
        d1 = g.derivative(u.values, 0, 1);
        d11 = g.derivative(u.values, 0, 2);
        d01 = g.derivative(u.values, 1, 1);
    }

    cache.g00.resize(n);
    cache.det_g.resize(n);
    if (g.dims() == 2) {
        cache.g01.resize(n);
        cache.g11.resize(n);
    }

    for (int i = 0; i < n; ++i) {
        const double ui = u.values[i];
        switch (ref.spec.kind) {
            case ReferenceKind::Lamella2D: {
                const double ux = d0[i], uxx = d00[i];
                const double q2 = 1.0 + ux * ux;
                cache.area_factor[i] = std::sqrt(q2);
                cache.normal_tilt[i] = 1.0 / std::sqrt(q2);
                cache.mean_curvature[i] = -uxx / (q2 * std::sqrt(q2));
                cache.g00[i] = q2;
                cache.det_g[i] = q2;
                break;
            }
            case ReferenceKind::Lamella3D: {
                const double ux = d0[i], uy = d1[i];
                const double uxx = d00[i], uyy = d11[i], uxy = d01[i];
                const double q2 = 1.0 + ux * ux + uy * uy;
                cache.area_factor[i] = std::sqrt(q2);
                cache.normal_tilt[i] = 1.0 / std::sqrt(q2);
                cache.mean_curvature[i] =
                    -((1.0 + uy * uy) * uxx - 2.0 * ux * uy * uxy + (1.0 + ux * ux) * uyy) /
                    (q2 * std::sqrt(q2));
                cache.g00[i] = 1.0 + ux * ux;
                cache.g01[i] = ux * uy;
                cache.g11[i] = 1.0 + uy * uy;
                cache.det_g[i] = cache.g00[i] * cache.g11[i] - cache.g01[i] * cache.g01[i];
                break;
            }
            case ReferenceKind::Disc2D: {
                const double rho = r + ui;
                const double rho_t = r * d0[i];        // d/dtheta = r * d/darclength
                const double rho_tt = r * r * d00[i];
                const double m2 = rho * rho + rho_t * rho_t;
                cache.area_factor[i] = std::sqrt(m2) / r;
                cache.normal_tilt[i] = rho / std::sqrt(m2);
                cache.mean_curvature[i] = (rho * rho + 2.0 * rho_t * rho_t - rho * rho_tt) /
                                          (m2 * std::sqrt(m2));
                // arclength coordinate a = r*theta: g = u_a^2 + (rho/r)^2
                cache.g00[i] = d0[i] * d0[i] + (rho / r) * (rho / r);
                cache.det_g[i] = cache.g00[i];
                break;
            }
            case ReferenceKind::Cylinder3D: {
                const double rho = r + ui;
                const double rho_x = d0[i], rho_xx = d00[i];
                const double rho_t = r * d1[i];
                const double rho_tt = r * r * d11[i];
                const double rho_xt = r * d01[i];
                const double w2 = rho * rho + rho_t * rho_t + rho * rho * rho_x * rho_x;
                const double w = std::sqrt(w2);
                cache.area_factor[i] = w / r;
                cache.normal_tilt[i] = 1.0 / std::sqrt(1.0 + rho_x * rho_x + (rho_t * rho_t) / (rho * rho));
                cache.mean_curvature[i] =
                    -((rho * rho + rho_t * rho_t) * rho * rho_xx -
                      2.0 * rho_x * rho_t * (rho * rho_xt - rho_x * rho_t) +
                      (1.0 + rho_x * rho_x) * (rho * rho_tt - rho * rho - 2.0 * rho_t * rho_t)) /
                    (w2 * w);
                cache.g00[i] = 1.0 + rho_x * rho_x;
                cache.g01[i] = rho_x * d1[i];
                cache.g11[i] = d1[i] * d1[i] + (rho / r) * (rho / r);
                cache.det_g[i] = cache.g00[i] * cache.g11[i] - cache.g01[i] * cache.g01[i];
                break;
            }
        }
        if (cache.det_g[i] <= 0.0) throw MetricDegenerate("induced metric lost positivity");

        // nu_{E_u} = (nu_E - sum_a (grad u . v_a)/(1 + kappa_a u) v_a) * tilt
        double f0 = d0[i] / (1.0 + ref.kappa[0] * ui);
        double f1 = g.dims() == 2 ? d1[i] / (1.0 + ref.kappa[1] * ui) : 0.0;
        for (int c = 0; c < ref.ambient_dim; ++c) {
            double v = ref.normal[i][c] - f0 * ref.tangent0[i][c];
            if (g.dims() == 2) v -= f1 * ref.tangent1[i][c];
            cache.normal_graph.at(i, c) = v * cache.normal_tilt[i];
        }
    }

    cache.perimeter = ref.fixed_boundary_measure + g.integrate(cache.area_factor);

    // fiber integral: u + (k0+k1) u^2/2 + k0 k1 u^3/3
    const double ks = ref.kappa[0] + ref.kappa[1];
    const double kp = ref.kappa[0] * ref.kappa[1];
    std::vector<double> fiber(n);
    for (int i = 0; i < n; ++i) {
        const double ui = u.values[i];
        fiber[i] = ui + 0.5 * ks * ui * ui + kp * ui * ui * ui / 3.0;
    }
    cache.volume = ref.volume + g.integrate(fiber);
    return cache;
}

std::pair<SurfaceField, std::vector<double>> normal_field(const ReferenceSurface& ref,
                                                          const HeightField& u) {
    auto cache = analyze(ref, u);
    return {std::move(cache.normal_graph), std::move(cache.normal_tilt)};
}

std::vector<double> area_factor(const ReferenceSurface& ref, const HeightField& u) {
    return analyze(ref, u).area_factor;
}

double perimeter(const ReferenceSurface& ref, const HeightField& u) {
    return analyze(ref, u).perimeter;
}

double enclosed_volume(const ReferenceSurface& ref, const HeightField& u) {
    check_factors(ref, u);
    const double ks = ref.kappa[0] + ref.kappa[1];
    const double kp = ref.kappa[0] * ref.kappa[1];
    std::vector<double> fiber(ref.total_nodes());
    for (int i = 0; i < ref.total_nodes(); ++i) {
        const double ui = u.values[i];
        fiber[i] = ui + 0.5 * ks * ui * ui + kp * ui * ui * ui / 3.0;
    }
    return ref.volume + ref.grid.integrate(fiber);
}

std::vector<double> mean_curvature(const ReferenceSurface& ref, const HeightField& u) {
    return analyze(ref, u).mean_curvature;
}

std::vector<double> laplace_beltrami(const ReferenceSurface& ref, const GeometryCache& cache,
                                     const std::vector<double>& phi) {
    const auto& g = ref.grid;
    const int n = g.total();
    if (static_cast<int>(phi.size()) != n) throw GridMismatch("field size does not match grid");

    auto p0 = g.derivative(phi, 1, 0);
    if (g.dims() == 1) {
        // (1/sqrt(g)) d/da ( phi_a / sqrt(g) )
        std::vector<double> flux(n);
        for (int i = 0; i < n; ++i) flux[i] = p0[i] / std::sqrt(cache.det_g[i]);
        auto dflux = g.derivative(flux, 1, 0);
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) out[i] = dflux[i] / std::sqrt(cache.det_g[i]);
        return out;
    }
    auto p1 = g.derivative(phi, 0, 1);
    std::vector<double> flux0(n), flux1(n);
    for (int i = 0; i < n; ++i) {
        const double sg = std::sqrt(cache.det_g[i]);
        const double inv = 1.0 / cache.det_g[i];
        const double gi00 = cache.g11[i] * inv, gi01 = -cache.g01[i] * inv, gi11 = cache.g00[i] * inv;
        flux0[i] = sg * (gi00 * p0[i] + gi01 * p1[i]);
        flux1[i] = sg * (gi01 * p0[i] + gi11 * p1[i]);
    }
    auto df0 = g.derivative(flux0, 1, 0);
    auto df1 = g.derivative(flux1, 0, 1);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = (df0[i] + df1[i]) / std::sqrt(cache.det_g[i]);
    return out;
}

std::vector<double> laplace_beltrami(const ReferenceSurface& ref, const HeightField& u,
                                     const std::vector<double>& phi) {
    return laplace_beltrami(ref, analyze(ref, u), phi);
}

std::vector<double> surface_gradient_sq(const ReferenceSurface& ref, const GeometryCache& cache,
                                        const std::vector<double>& phi) {
    const auto& g = ref.grid;
    const int n = g.total();
    auto p0 = g.derivative(phi, 1, 0);
    std::vector<double> out(n);
    if (g.dims() == 1) {
        for (int i = 0; i < n; ++i) out[i] = p0[i] * p0[i] / cache.det_g[i];
        return out;
    }
    auto p1 = g.derivative(phi, 0, 1);
    for (int i = 0; i < n; ++i) {
        const double inv = 1.0 / cache.det_g[i];
        const double gi00 = cache.g11[i] * inv, gi01 = -cache.g01[i] * inv, gi11 = cache.g00[i] * inv;
        out[i] = gi00 * p0[i] * p0[i] + 2.0 * gi01 * p0[i] * p1[i] + gi11 * p1[i] * p1[i];
    }
    return out;
}

double surface_mean(const ReferenceSurface& ref, const GeometryCache& cache,
                    const std::vector<double>& phi) {
    const int n = ref.grid.total();
    std::vector<double> weighted(n);
    for (int i = 0; i < n; ++i) weighted[i] = phi[i] * cache.area_factor[i];
    return ref.grid.integrate(weighted) / ref.grid.integrate(cache.area_factor);
}

double field_norm(const ReferenceSurface& ref, const std::vector<double>& f, NormKind kind) {
    const auto& g = ref.grid;
    if (static_cast<int>(f.size()) != g.total()) throw GridMismatch("field size does not match grid");

    auto sup_tensor = [&](int k) {
        auto sq = derivative_tensor_sq(g, f, k);
        double m = 0.0;
        for (double v : sq) m = std::max(m, v);
        return std::sqrt(m);
    };

    switch (kind.family) {
        case NormKind::Family::C: {
            if (kind.order < 0 || kind.order > 6) throw FlowError("C^k norms supported for k <= 6");
            double s = 0.0;
            for (int k = 0; k <= kind.order; ++k) s += sup_tensor(k);
            return s;
        }
        case NormKind::Family::C11:
            return sup_tensor(0) + sup_tensor(1) + sup_tensor(2);
        case NormKind::Family::Holder: {
            const double beta = kind.param;
            if (!(beta > 0.0 && beta < 1.0)) throw FlowError("Holder exponent must lie in (0,1)");
            double best = 0.0;
            const int n = g.total();
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) {
                    double d = g.node_distance(a, b);
                    if (d <= 0.0) continue;
                    best = std::max(best, std::abs(f[a] - f[b]) / std::pow(d, beta));
                }
            return best;
        }
        case NormKind::Family::L2: {
            auto sq = derivative_tensor_sq(g, f, 0);
            return std::sqrt(g.integrate(sq));
        }
        case NormKind::Family::Hk: {
            if (kind.order < 0 || kind.order > 4) throw FlowError("H^k norms supported for k <= 4");
            double s = 0.0;
            for (int k = 0; k <= kind.order; ++k) s += g.integrate(derivative_tensor_sq(g, f, k));
            return std::sqrt(s);
        }
        case NormKind::Family::W2p: {
            const double p = kind.param;
            if (p != 2.0 && p != 4.0) throw FlowError("W^{2,p} supported for p in {2,4}");
            double s = 0.0;
            for (int k = 0; k <= 2; ++k) {
                auto sq = derivative_tensor_sq(g, f, k);
                std::vector<double> pw(sq.size());
                for (std::size_t i = 0; i < sq.size(); ++i) pw[i] = std::pow(sq[i], p / 2.0);
                s += g.integrate(pw);
            }
            return std::pow(s, 1.0 / p);
        }
    }
    throw FlowError("unsupported norm kind");
}

} // namespace torusflow
