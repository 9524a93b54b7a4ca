#include "torusflow/flow.hpp"

#include <cmath>

namespace torusflow {

void FlowConfig::validate() const {
    if (kind != FlowKind::VPMCF && kind != FlowKind::SDF)
        throw FlowError("flow kind must be vpmcf or sdf");
    if (!(dt > 0.0)) throw FlowError("dt must be positive");
    if (!(t_end > 0.0)) throw FlowError("t_end must be positive");
    if (!(imex_theta >= 0.5 && imex_theta <= 1.0)) throw FlowError("imex_theta must lie in [1/2, 1]");
    if (snapshot_every < 1) throw FlowError("snapshot_every must be >= 1");
    if (!(safety > 0.0 && safety <= 1.0)) throw FlowError("safety must lie in (0, 1]");
}

FlowState make_flow_state(const ReferenceSurface& ref, const HeightField& u, double t) {
    return FlowState{t, u, analyze(ref, u), 0.0};
}

std::vector<double> flow_rhs(const ReferenceSurface& ref, const GeometryCache& cache, FlowKind kind) {
    const int n = ref.grid.total();
    std::vector<double> out(n);
    if (kind == FlowKind::VPMCF) {
        double hbar = surface_mean(ref, cache, cache.mean_curvature);
        for (int i = 0; i < n; ++i)
            out[i] = -(cache.mean_curvature[i] - hbar) / cache.normal_tilt[i];
        return out;
    }
    if (kind == FlowKind::SDF) {
        auto lap = laplace_beltrami(ref, cache, cache.mean_curvature);
        for (int i = 0; i < n; ++i) out[i] = lap[i] / cache.normal_tilt[i];
        return out;
    }
    throw FlowError("flow right-hand side defined for vpmcf and sdf only");
}

SurfaceField rhs_vpmcf(const ReferenceSurface& ref, const HeightField& u) {
    auto v = flow_rhs(ref, analyze(ref, u), FlowKind::VPMCF);
    return SurfaceField{ref.hash, 1, std::move(v)};
}

SurfaceField rhs_sdf(const ReferenceSurface& ref, const HeightField& u) {
    auto v = flow_rhs(ref, analyze(ref, u), FlowKind::SDF);
    return SurfaceField{ref.hash, 1, std::move(v)};
}

double dissipation_rate(const ReferenceSurface& ref, const GeometryCache& cache, FlowKind kind) {
    const int n = ref.grid.total();
    std::vector<double> integrand(n);
    if (kind == FlowKind::VPMCF) {
        double hbar = surface_mean(ref, cache, cache.mean_curvature);
        for (int i = 0; i < n; ++i) {
            double d = cache.mean_curvature[i] - hbar;
            integrand[i] = d * d * cache.area_factor[i];
        }
    } else {
        auto grad_sq = surface_gradient_sq(ref, cache, cache.mean_curvature);
        for (int i = 0; i < n; ++i) integrand[i] = grad_sq[i] * cache.area_factor[i];
    }
    return ref.grid.integrate(integrand);
}

std::pair<HeightField, double> project_volume(const ReferenceSurface& ref, const HeightField& u,
                                              int* iters) {
    check_tubular(ref, u);
    const double target = ref.volume;
    const double ks = ref.kappa[0] + ref.kappa[1];
    const double kp = ref.kappa[0] * ref.kappa[1];

    auto shifted = [&](double lam) {
        std::vector<double> v(u.values);
        for (double& x : v) x += lam;
        return v;
    };
    auto vol = [&](double lam) {
        auto v = shifted(lam);
        std::vector<double> fiber(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            fiber[i] = v[i] + 0.5 * ks * v[i] * v[i] + kp * v[i] * v[i] * v[i] / 3.0;
        return ref.volume + ref.grid.integrate(fiber);
    };
    auto dvol = [&](double lam) {
        // d|E_{u+lam}|/dlam = Int prod(1 + kappa_a (u+lam)) dH > 0 in the valid regime
        auto v = shifted(lam);
        std::vector<double> w(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            w[i] = (1.0 + ref.kappa[0] * v[i]) * (1.0 + ref.kappa[1] * v[i]);
        return ref.grid.integrate(w);
    };

    double lam = 0.0;
    int used = 0;
    for (int it = 0; it < 60; ++it) {
        double f = vol(lam) - target;
        used = it;
        if (std::abs(f) <= 1e-14 * std::max(target, 1e-30)) break;
        double d = dvol(lam);
        if (!(d > 0.0)) throw NoConvergence("volume projection: derivative lost positivity");
        double next = lam - f / d;
        if (std::abs(next) + u.max_abs() >= ref.tubular_radius)
            throw NoConvergence("volume projection left the tubular neighborhood");
        if (next == lam) break;
        lam = next;
        if (it == 59) throw NoConvergence("volume projection Newton did not converge");
    }
    if (iters) *iters = used;
    auto v = shifted(lam);
    return {make_height_field(ref, std::move(v)), lam};
}

namespace {

HeightField imex_update(const ReferenceSurface& ref, const FlowState& state, FlowKind kind,
                        double dt, double theta) {
    auto rhs = flow_rhs(ref, state.cache, kind);
    // stabilized explicit step: smooth the update with (I + theta dt A)^{-1},
    // A the positive flat-base operator (-Delta for VPMCF, Delta^2 for SDF)
    std::vector<double> smoothed;
    if (kind == FlowKind::VPMCF) {
        smoothed = ref.grid.apply_multiplier(rhs, [dt, theta](double lam) {
            return 1.0 / (1.0 + theta * dt * lam);
        });
    } else {
        smoothed = ref.grid.apply_multiplier(rhs, [dt, theta](double lam) {
            return 1.0 / (1.0 + theta * dt * lam * lam);
        });
    }
    std::vector<double> v(state.u.values);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += dt * smoothed[i];
    return make_height_field(ref, std::move(v));
}

} // namespace

std::pair<FlowState, StepReport> step_imex(const ReferenceSurface& ref, const FlowState& state,
                                           const FlowConfig& cfg) {
    cfg.validate();
    const double p_guard = 1e-12 * ref.perimeter;

    double dt = cfg.dt * cfg.safety;
    StepReport rep;
    rep.perimeter_before = state.cache.perimeter;
    const double dissipation = dissipation_rate(ref, state.cache, cfg.kind);

    for (int halving = 0; halving <= 20; ++halving) {
        HeightField candidate = imex_update(ref, state, cfg.kind, dt, cfg.imex_theta);
        double drift = enclosed_volume(ref, candidate) - ref.volume;
        double lambda = 0.0;
        int proj_iters = 0;
        if (cfg.volume_projection) {
            auto [projected, lam] = project_volume(ref, candidate, &proj_iters);
            candidate = std::move(projected);
            lambda = lam;
        }
        GeometryCache cache = analyze(ref, candidate);
        if (cache.perimeter <= rep.perimeter_before + p_guard) {
            rep.t = state.t + dt;
            rep.dt_used = dt;
            rep.halvings = halving;
            rep.projection_iters = proj_iters;
            rep.perimeter_after = cache.perimeter;
            rep.volume_drift_before_projection = drift;
            rep.volume_rel_drift_after = (cache.volume - ref.volume) / ref.volume;
            rep.lambda = lambda;
            rep.residual = (cache.perimeter - rep.perimeter_before) / dt + dissipation;
            FlowState next{state.t + dt, std::move(candidate), std::move(cache), lambda};
            return {std::move(next), rep};
        }
        dt *= 0.5;
    }
    throw StepFailed("perimeter guard still violated after 20 step halvings at t = " +
                     std::to_string(state.t));
}

SurfaceField nonlinear_residual(const ReferenceSurface& ref, const HeightField& u, FlowKind kind) {
    auto cache = analyze(ref, u);
    auto rhs = flow_rhs(ref, cache, kind);
    std::vector<double> linear;
    if (kind == FlowKind::SDF) {
        // f[u] = rhs + Delta_E^2 u
        linear = ref.grid.apply_multiplier(u.values, [](double lam) { return lam * lam; });
        for (std::size_t i = 0; i < linear.size(); ++i) linear[i] = rhs[i] + linear[i];
    } else {
        // f[u] = rhs - Delta_E u
        linear = ref.grid.apply_multiplier(u.values, [](double lam) { return -lam; });
        for (std::size_t i = 0; i < linear.size(); ++i) linear[i] = rhs[i] - linear[i];
    }
    return SurfaceField{ref.hash, 1, std::move(linear)};
}

MildSolveResult mild_solve(const ReferenceSurface& ref, const HeightField& u0, double T,
                           int n_iter, double beta, int time_samples) {
    if (ref.spec.kind != ReferenceKind::Lamella2D && ref.spec.kind != ReferenceKind::Lamella3D)
        throw FlowError("mild_solve requires a flat-base (lamella) reference");
    check_field(ref, u0);
    double c11 = field_norm(ref, u0.values, NormKind::c11());
    if (c11 > 0.2 * ref.tubular_radius)
        throw FlowError("mild_solve requires |u0|_{C^{1,1}} <= 0.2 tubular_radius");
    if (n_iter < 3) throw FlowError("mild_solve needs n_iter >= 3");
    if (time_samples < 8) throw FlowError("mild_solve needs at least 8 time samples");

    const int m = time_samples;
    std::vector<double> times(m + 1);
    for (int i = 0; i <= m; ++i) times[i] = T * i / m;

    // S u0 path
    std::vector<HeightField> su0(m + 1);
    for (int i = 0; i <= m; ++i) su0[i] = biharmonic_semigroup(ref, u0, times[i]);

    auto make_traj = [&](const std::vector<HeightField>& fields) {
        Trajectory t{ref.hash, FlowKind::SDF, {}, {}};
        for (int i = 0; i <= m; ++i) t.append(times[i], fields[i]);
        return t;
    };

    std::vector<HeightField> u_prev = su0; // psi_1 = 0
    std::vector<HeightField> psi_prev(m + 1, zero_height_field(ref));
    std::vector<double> ratios;
    double last_dist = -1.0;
    int diverging = 0;

    for (int iter = 2; iter <= n_iter; ++iter) {
        std::vector<HeightField> fpath(m + 1);
        for (int i = 0; i <= m; ++i) {
            auto f = nonlinear_residual(ref, u_prev[i], FlowKind::SDF);
            fpath[i] = HeightField{ref.hash, std::move(f.data)};
        }
        auto psi = duhamel_path(ref, fpath, T);

        std::vector<HeightField> diff(m + 1);
        for (int i = 0; i <= m; ++i) {
            std::vector<double> d(psi[i].values);
            for (std::size_t j = 0; j < d.size(); ++j) d[j] -= psi_prev[i].values[j];
            diff[i] = HeightField{ref.hash, std::move(d)};
        }
        double dist = norm_XT(ref, make_traj(diff), beta).x_norm;
        bool converged = dist == 0.0;
        if (last_dist > 0.0) {
            double ratio = dist / last_dist;
            ratios.push_back(ratio);
            diverging = ratio >= 1.0 ? diverging + 1 : 0;
            if (diverging >= 2) throw NoConvergence("mild_solve fixed point diverged");
            // once the contraction drove the update this far down, later
            // differences are roundoff; stop before ratios turn into noise
            if (ratio < 1e-3) converged = true;
        }
        last_dist = dist;

        for (int i = 0; i <= m; ++i) {
            std::vector<double> v(su0[i].values);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] += psi[i].values[j];
            u_prev[i] = make_height_field(ref, std::move(v));
        }
        psi_prev = std::move(psi);
        if (converged) break;
    }

    return MildSolveResult{make_traj(u_prev), std::move(ratios)};
}

RunResult run_flow(const ReferenceSurface& ref, const HeightField& u0, const FlowConfig& cfg) {
    cfg.validate();
    HeightField u = u0;
    if (cfg.volume_projection) u = project_volume(ref, u).first;

    RunResult out;
    out.trajectory.ref_hash = ref.hash;
    out.trajectory.flow_kind = cfg.kind;

    FlowState state = make_flow_state(ref, u);
    out.trajectory.append(0.0, state.u);

    FlowConfig step_cfg = cfg;
    double dt_current = cfg.dt;
    long step_count = 0;
    const double t_eps = 1e-12 * cfg.t_end;
    while (state.t < cfg.t_end - t_eps) {
        step_cfg.dt = std::min(dt_current, cfg.t_end - state.t);
        std::pair<FlowState, StepReport> stepped = [&] {
            try {
                return step_imex(ref, state, step_cfg);
            } catch (const TubularViolation& e) {
                throw TubularViolation(std::string(e.what()) + " at t = " + std::to_string(state.t));
            }
        }();
        auto& [next, rep] = stepped;
        state = std::move(next);
        out.steps.push_back(rep);
        ++step_count;
        if (cfg.adapt) {
            if (rep.halvings > 0)
                dt_current = rep.dt_used;
            else
                dt_current = std::min(dt_current * 2.0, cfg.dt);
        }
        bool final_step = state.t >= cfg.t_end - t_eps;
        if (step_count % cfg.snapshot_every == 0 || final_step)
            out.trajectory.append(state.t, state.u);
    }
    return out;
}

} // namespace torusflow
