#include "torusflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace torusflow {

namespace {

constexpr double kDenomCut = 1e-13;

// 8-point Gauss-Legendre on [0,1]
constexpr std::array<double, 8> kGaussX = {0.01985507175123188, 0.10166676129318664,
                                           0.2372337950418355,  0.40828267875217505,
                                           0.5917173212478249,  0.7627662049581645,
                                           0.8983332387068134,  0.9801449282487681};
constexpr std::array<double, 8> kGaussW = {0.05061426814518813, 0.11119051722668723,
                                           0.15685332293894372, 0.18134189168918097,
                                           0.18134189168918097, 0.15685332293894372,
                                           0.11119051722668723, 0.05061426814518813};

/// |E symmdiff E_w| for a graph w: Int |Int_0^w prod(1+kappa s) ds| dH.
double graph_symmetric_difference(const ReferenceSurface& ref, const std::vector<double>& w) {
    const double ks = ref.kappa[0] + ref.kappa[1];
    const double kp = ref.kappa[0] * ref.kappa[1];
    std::vector<double> fib(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double x = w[i];
        fib[i] = std::abs(x + 0.5 * ks * x * x + kp * x * x * x / 3.0);
    }
    return ref.grid.integrate(fib);
}

/// distance to the boundary of G = E - tau at the fiber point x + s nu(x)
double fiber_distance(const ReferenceSurface& ref, int node, double s,
                      const std::array<double, 3>& tau) {
    switch (ref.spec.kind) {
        case ReferenceKind::Lamella2D:
            return std::abs(s + tau[1]);
        case ReferenceKind::Lamella3D:
            return std::abs(s + tau[2]);
        case ReferenceKind::Disc2D: {
            const double r = ref.spec.radius;
            double px = (r + s) * ref.normal[node][0] + tau[0];
            double py = (r + s) * ref.normal[node][1] + tau[1];
            return std::abs(std::hypot(px, py) - r);
        }
        case ReferenceKind::Cylinder3D: {
            const double r = ref.spec.radius;
            double py = (r + s) * ref.normal[node][1] + tau[1];
            double pz = (r + s) * ref.normal[node][2] + tau[2];
            return std::abs(std::hypot(py, pz) - r);
        }
    }
    return 0.0;
}

} // namespace

DiagnosticsRecord snapshot_diagnostics(const ReferenceSurface& ref, const GeometryCache& cache,
                                       const RecenteredState& recentred, double t,
                                       double delta_star) {
    DiagnosticsRecord rec;
    rec.t = t;
    rec.perimeter_gap = cache.perimeter - ref.perimeter;
    rec.volume_drift = (cache.volume - ref.volume) / ref.volume;

    const int n = ref.grid.total();
    rec.hbar_surface = surface_mean(ref, cache, cache.mean_curvature);
    rec.hbar_reference = ref.grid.mean(cache.mean_curvature);

    std::vector<double> integrand(n);
    for (int i = 0; i < n; ++i) {
        double d = cache.mean_curvature[i] - rec.hbar_surface;
        integrand[i] = d * d * cache.area_factor[i];
    }
    rec.l2_curvature_gap = std::sqrt(ref.grid.integrate(integrand));

    auto grad_sq = surface_gradient_sq(ref, cache, cache.mean_curvature);
    for (int i = 0; i < n; ++i) integrand[i] = grad_sq[i] * cache.area_factor[i];
    rec.grad_curvature = std::sqrt(ref.grid.integrate(integrand));

    rec.sigma = recentred.sigma;
    rec.projection_defect = recentred.projection_defect;

    if (rec.grad_curvature > kDenomCut)
        rec.poincare_quotient = rec.l2_curvature_gap / rec.grad_curvature;
    if (rec.l2_curvature_gap > kDenomCut && recentred.projection_defect <= delta_star) {
        double h1 = field_norm(ref, recentred.v.values, NormKind::h(1));
        rec.alexandrov_quotient = h1 / rec.l2_curvature_gap;
    }
    return rec;
}

AsymmetryResult fraenkel_asymmetry(const ReferenceSurface& ref, const HeightField& u,
                                   const AsymmetryOptions& opts) {
    check_tubular(ref, u);
    AsymmetryResult out;
    const int dim = ref.ambient_dim;

    auto value_at = [&](const std::array<double, 3>& shift, bool* ok) -> double {
        try {
            auto w = reparametrize(ref, u, shift);
            if (ok) *ok = true;
            return graph_symmetric_difference(ref, w.values);
        } catch (const FlowError&) {
            if (ok) *ok = false;
            ++out.excluded_shifts;
            return std::numeric_limits<double>::infinity();
        }
    };

    std::array<double, 3> center = opts.center.value_or(std::array<double, 3>{0.0, 0.0, 0.0});
    const double half = opts.box_half_width.value_or(0.5); // full torus by default

    std::array<double, 3> best_shift = center;
    bool ok0 = false;
    double best = value_at(center, &ok0);

    const int m = opts.coarse_per_axis;
    std::vector<double> offsets(m);
    for (int i = 0; i < m; ++i) offsets[i] = -half + (2.0 * half) * i / m;

    auto scan = [&](auto&& self, std::array<double, 3> shift, int axis) -> void {
        if (axis == dim) {
            bool ok = false;
            double v = value_at(shift, &ok);
            if (ok && v < best) {
                best = v;
                best_shift = shift;
            }
            return;
        }
        for (double off : offsets) {
            auto s = shift;
            s[axis] = center[axis] + off;
            self(self, s, axis + 1);
        }
    };
    scan(scan, center, 0);
    if (!std::isfinite(best)) throw FoldOver("fraenkel_asymmetry: every candidate shift failed");

    // cyclic per-axis golden-section refinement
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    const double step0 = 2.0 * half / m;
    for (int cycle = 0; cycle < 4; ++cycle) {
        for (int axis = 0; axis < dim; ++axis) {
            double lo = best_shift[axis] - step0, hi = best_shift[axis] + step0;
            auto feval = [&](double x) {
                auto s = best_shift;
                s[axis] = x;
                bool ok = false;
                double v = value_at(s, &ok);
                return ok ? v : std::numeric_limits<double>::infinity();
            };
            double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
            double fc = feval(c), fd = feval(d);
            while (hi - lo > opts.refine_tol) {
                if (fc < fd) {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = feval(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = feval(d);
                }
            }
            double mid = 0.5 * (lo + hi);
            auto s = best_shift;
            s[axis] = mid;
            bool ok = false;
            double v = value_at(s, &ok);
            if (ok && v < best) {
                best = v;
                best_shift = s;
            }
        }
    }

    out.alpha = best;
    out.shift = best_shift;
    return out;
}

double isoperimetric_check(const std::vector<DiagnosticsRecord>& records) {
    double best = 0.0;
    int used = 0;
    for (const auto& r : records) {
        if (!r.asymmetry || r.perimeter_gap <= kDenomCut) continue;
        ++used;
        best = std::max(best, (*r.asymmetry) * (*r.asymmetry) / r.perimeter_gap);
    }
    if (used < 10) throw FlowError("isoperimetric_check needs at least 10 qualifying records");
    return best;
}

double dissipation_functional(const ReferenceSurface& ref, const HeightField& u,
                              const std::array<double, 3>& tau) {
    check_tubular(ref, u);
    // boundary of G = E - tau written as a graph over dE
    auto w_g = reparametrize(ref, zero_height_field(ref), {-tau[0], -tau[1], -tau[2]});

    std::vector<double> fib(ref.total_nodes());
    for (int i = 0; i < ref.total_nodes(); ++i) {
        const double a = w_g.values[i], b = u.values[i];
        const double lo = std::min(a, b), hi = std::max(a, b);
        double acc = 0.0;
        for (int q = 0; q < 8; ++q) {
            double s = lo + (hi - lo) * kGaussX[q];
            double jac = (1.0 + ref.kappa[0] * s) * (1.0 + ref.kappa[1] * s);
            acc += kGaussW[q] * fiber_distance(ref, i, s, tau) * jac;
        }
        fib[i] = acc * (hi - lo);
    }
    return ref.grid.integrate(fib);
}

TrajectoryDiagnostics diagnose_trajectory(const ReferenceSurface& ref, const Trajectory& traj,
                                          const DiagnosticsOptions& opts) {
    traj.validate(ref);
    TrajectoryDiagnostics out;
    out.track = track_translations(ref, traj, opts.delta_star);

    std::vector<GeometryCache> caches;
    caches.reserve(traj.size());
    for (int i = 0; i < traj.size(); ++i) caches.push_back(analyze(ref, traj.fields[i]));

    for (int i = 0; i < traj.size(); ++i) {
        RecenteredState rc{out.track.sigmas[i], HeightField{}, out.track.defects[i]};
        rc.v = reparametrize(ref, traj.fields[i], rc.sigma);
        auto rec = snapshot_diagnostics(ref, caches[i], rc, traj.times[i], opts.delta_star);

        if (i + 1 < traj.size() &&
            (traj.flow_kind == FlowKind::VPMCF || traj.flow_kind == FlowKind::SDF)) {
            double dt = traj.times[i + 1] - traj.times[i];
            rec.dissipation_residual = (caches[i + 1].perimeter - caches[i].perimeter) / dt +
                                       dissipation_rate(ref, caches[i], traj.flow_kind);
        }
        if (opts.asymmetry && (i % opts.asymmetry_stride == 0 || i + 1 == traj.size())) {
            AsymmetryOptions aopts;
            // E_u + sigma is close to E, so the optimal shift is near sigma
            aopts.center = rc.sigma;
            aopts.box_half_width =
                std::min(0.5, 4.0 * (traj.fields[i].max_abs() + rc.v.max_abs()) + 1e-4);
            aopts.coarse_per_axis = 16;
            auto asym = fraenkel_asymmetry(ref, traj.fields[i], aopts);
            rec.asymmetry = asym.alpha;
            rec.asymmetry_shift = asym.shift;
            if (rec.perimeter_gap > kDenomCut)
                rec.isoperimetric_quotient = asym.alpha * asym.alpha / rec.perimeter_gap;
        }
        if (opts.dissipation) {
            const auto tau = out.track.sigmas.back();
            rec.dissipation_functional = dissipation_functional(ref, traj.fields[i], tau);
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

std::string diagnostics_record_json(const DiagnosticsRecord& rec) {
    nlohmann::ordered_json j;
    j["t"] = rec.t;
    j["perimeter_gap"] = rec.perimeter_gap;
    j["volume_drift"] = rec.volume_drift;
    j["l2_curvature_gap"] = rec.l2_curvature_gap;
    j["grad_curvature"] = rec.grad_curvature;
    j["hbar_surface"] = rec.hbar_surface;
    j["hbar_reference"] = rec.hbar_reference;
    j["sigma"] = rec.sigma;
    j["projection_defect"] = rec.projection_defect;
    if (rec.alexandrov_quotient) j["alexandrov_quotient"] = *rec.alexandrov_quotient;
    if (rec.poincare_quotient) j["poincare_quotient"] = *rec.poincare_quotient;
    if (rec.asymmetry) j["asymmetry"] = *rec.asymmetry;
    if (rec.asymmetry_shift) j["asymmetry_shift"] = *rec.asymmetry_shift;
    if (rec.isoperimetric_quotient) j["isoperimetric_quotient"] = *rec.isoperimetric_quotient;
    if (rec.dissipation_residual) j["dissipation_residual"] = *rec.dissipation_residual;
    if (rec.dissipation_functional) j["dissipation_functional"] = *rec.dissipation_functional;
    return j.dump();
}

void write_diagnostics_ndjson(const std::string& path, const std::vector<DiagnosticsRecord>& recs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    for (const auto& r : recs) os << diagnostics_record_json(r) << "\n";
}

void write_recentering_ndjson(const std::string& path, const TranslationTrack& track) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < track.times.size(); ++i) {
        nlohmann::ordered_json j;
        j["t"] = track.times[i];
        j["sigma"] = track.sigmas[i];
        j["projection_defect"] = track.defects[i];
        j["cauchy_modulus"] = track.cauchy_modulus[i];
        os << j.dump() << "\n";
    }
}

void export_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& recs,
                            const std::vector<std::string>& keys) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    os << "t";
    for (const auto& k : keys) os << "," << k;
    os << "\n";
    char buf[64];
    auto put = [&](std::optional<double> v) {
        if (v) {
            std::snprintf(buf, sizeof(buf), ",%.17g", *v);
            os << buf;
        } else {
            os << ",";
        }
    };
    for (const auto& r : recs) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.t);
        os << buf;
        for (const auto& k : keys) {
            if (k == "perimeter_gap") put(r.perimeter_gap);
            else if (k == "volume_drift") put(r.volume_drift);
            else if (k == "l2_curvature_gap") put(r.l2_curvature_gap);
            else if (k == "grad_curvature") put(r.grad_curvature);
            else if (k == "alexandrov_quotient") put(r.alexandrov_quotient);
            else if (k == "poincare_quotient") put(r.poincare_quotient);
            else if (k == "asymmetry") put(r.asymmetry);
            else if (k == "isoperimetric_quotient") put(r.isoperimetric_quotient);
            else if (k == "dissipation_residual") put(r.dissipation_residual);
            else if (k == "dissipation_functional") put(r.dissipation_functional);
            else if (k == "projection_defect") put(r.projection_defect);
            else throw FlowError("unknown diagnostics key '" + k + "'");
        }
        os << "\n";
    }
}

} // namespace torusflow
