#include "torusflow/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "torusflow/graph_geometry.hpp"
#include "torusflow/rng.hpp"

namespace torusflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// phi1(z) = (1 - e^-z)/z, phi2(z) = (e^-z - 1 + z)/z^2, stable near z = 0
double phi1(double z) {
    if (z < 1e-5) return 1.0 - z / 2.0 + z * z / 6.0;
    return -std::expm1(-z) / z;
}
double phi2(double z) {
    if (z < 1e-5) return 0.5 - z / 6.0 + z * z / 24.0;
    return (z + std::expm1(-z)) / (z * z);
}

std::vector<double> tensor_abs(const SpectralGrid& g, const std::vector<double>& f, int k) {
    auto sq = derivative_tensor_sq(g, f, k);
    for (double& v : sq) v = std::sqrt(v);
    return sq;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Holder beta-seminorm of a tensor field given its components+multiplicities.
double holder_seminorm(const SpectralGrid& g,
                       const std::vector<std::pair<std::vector<double>, double>>& comps, double beta) {
    const int n = g.total();
    double best = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            double d = g.node_distance(a, b);
            if (d <= 0.0) continue;
            double diff_sq = 0.0;
            for (const auto& [arr, mult] : comps) {
                double dv = arr[a] - arr[b];
                diff_sq += mult * dv * dv;
            }
            best = std::max(best, std::sqrt(diff_sq) / std::pow(d, beta));
        }
    return best;
}

std::vector<std::pair<std::vector<double>, double>> derivative_components(const SpectralGrid& g,
                                                                          const std::vector<double>& f,
                                                                          int k) {
    std::vector<std::pair<std::vector<double>, double>> out;
    if (k == 0) {
        out.emplace_back(f, 1.0);
        return out;
    }
    if (g.dims() == 1) {
        out.emplace_back(g.derivative(f, k, 0), 1.0);
        return out;
    }
    auto binom = [](int n, int r) {
        double b = 1;
        for (int i = 0; i < r; ++i) b = b * (n - i) / (i + 1);
        return b;
    };
    for (int a = 0; a <= k; ++a) out.emplace_back(g.derivative(f, k - a, a), binom(k, a));
    return out;
}

} // namespace

std::string to_string(FlowKind k) {
    switch (k) {
        case FlowKind::VPMCF: return "vpmcf";
        case FlowKind::SDF: return "sdf";
        case FlowKind::LinearHeat: return "linear_heat";
        case FlowKind::LinearBiharmonic: return "linear_biharmonic";
    }
    return "unknown";
}

FlowKind flow_kind_from_string(const std::string& s) {
    if (s == "vpmcf") return FlowKind::VPMCF;
    if (s == "sdf") return FlowKind::SDF;
    if (s == "linear_heat") return FlowKind::LinearHeat;
    if (s == "linear_biharmonic") return FlowKind::LinearBiharmonic;
    throw FlowError("unknown flow kind '" + s + "'");
}

void Trajectory::append(double t, HeightField f) {
    if (!times.empty() && t <= times.back()) throw FlowError("trajectory times must be strictly increasing");
    if (times.empty() && t != 0.0) throw FlowError("trajectory must start at t = 0");
    times.push_back(t);
    fields.push_back(std::move(f));
}

void Trajectory::validate(const ReferenceSurface& ref) const {
    if (times.size() != fields.size()) throw FlowError("trajectory times/fields length mismatch");
    for (const auto& f : fields) check_field(ref, f);
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1]) throw FlowError("trajectory times must be strictly increasing");
}

HeightField biharmonic_semigroup(const ReferenceSurface& ref, const HeightField& u0, double t) {
    check_field(ref, u0);
    if (t < 0.0) throw FlowError("semigroup time must be nonnegative");
    if (t == 0.0) return u0;
    auto v = ref.grid.apply_multiplier(u0.values, [t](double lam) { return std::exp(-t * lam * lam); });
    return HeightField{ref.hash, std::move(v)};
}

HeightField heat_semigroup(const ReferenceSurface& ref, const HeightField& u0, double t) {
    check_field(ref, u0);
    if (t < 0.0) throw FlowError("semigroup time must be nonnegative");
    if (t == 0.0) return u0;
    auto v = ref.grid.apply_multiplier(u0.values, [t](double lam) { return std::exp(-t * lam); });
    return HeightField{ref.hash, std::move(v)};
}

HeightField biharmonic_semigroup_dt(const ReferenceSurface& ref, const HeightField& u0, double t, int l) {
    check_field(ref, u0);
    if (t < 0.0) throw FlowError("semigroup time must be nonnegative");
    auto v = ref.grid.apply_multiplier(u0.values, [t, l](double lam) {
        double mu = lam * lam;
        return std::pow(-mu, l) * std::exp(-t * mu);
    });
    return HeightField{ref.hash, std::move(v)};
}

std::vector<HeightField> duhamel_path(const ReferenceSurface& ref,
                                      const std::vector<HeightField>& source, double t) {
    const int m = static_cast<int>(source.size());
    if (m < 2) throw FlowError("duhamel requires at least two time samples");
    if (!(t > 0.0)) throw FlowError("duhamel horizon must be positive");
    for (const auto& f : source) check_field(ref, f);

    const auto& g = ref.grid;
    const double h = t / (m - 1);
    std::vector<std::vector<std::complex<double>>> chat(m);
    for (int i = 0; i < m; ++i) chat[i] = g.to_spectral(source[i].values);

    const int nc = g.spectral_size();
    std::vector<double> mu(nc);
    for (int idx = 0; idx < nc; ++idx) {
        double lam = g.laplace_eigenvalue(idx);
        mu[idx] = lam * lam;
    }

    std::vector<HeightField> out;
    out.reserve(m);
    std::vector<std::complex<double>> acc(nc, 0.0);
    out.push_back(HeightField{ref.hash, std::vector<double>(g.total(), 0.0)});
    for (int j = 0; j + 1 < m; ++j) {
        for (int idx = 0; idx < nc; ++idx) {
            const double z = mu[idx] * h;
            const std::complex<double> a = chat[j][idx];
            const std::complex<double> b = (chat[j + 1][idx] - chat[j][idx]) / h;
            acc[idx] = acc[idx] * std::exp(-z) + h * (a * phi1(z) + b * h * phi2(z));
        }
        out.push_back(HeightField{ref.hash, g.from_spectral(acc)});
    }
    return out;
}

HeightField duhamel(const ReferenceSurface& ref, const std::vector<HeightField>& source, double t) {
    return duhamel_path(ref, source, t).back();
}

namespace {

// finite-difference d/dt along the stored time grid (centered inside)
std::vector<std::vector<double>> time_derivative(const Trajectory& traj) {
    const int m = traj.size();
    std::vector<std::vector<double>> out(m);
    for (int i = 0; i < m; ++i) {
        int a = std::max(0, i - 1), b = std::min(m - 1, i + 1);
        double dt = traj.times[b] - traj.times[a];
        std::vector<double> d(traj.fields[0].values.size());
        for (std::size_t j = 0; j < d.size(); ++j)
            d[j] = (traj.fields[b].values[j] - traj.fields[a].values[j]) / dt;
        out[i] = std::move(d);
    }
    return out;
}

} // namespace

WeightedNormReport norm_YT(const ReferenceSurface& ref, const Trajectory& traj, double beta) {
    traj.validate(ref);
    if (traj.size() < 3) throw FlowError("norm_YT needs at least 3 samples");
    if (!(beta > 0.0 && beta < 1.0)) throw FlowError("beta must lie in (0,1)");
    const auto& g = ref.grid;
    const int m = traj.size();

    WeightedNormReport rep;
    rep.beta = beta;
    rep.T = traj.times.back();

    double sup_sum = 0.0, sup_c0 = 0.0, sup_holder = 0.0;
    for (int i = 0; i < m; ++i) {
        double t = traj.times[i];
        if (t <= 0.0) continue;
        double c0 = std::pow(t, 0.5) * max_abs(traj.fields[i].values);
        double hs = std::pow(t, 0.5 + beta / 4.0) *
                    holder_seminorm(g, {{traj.fields[i].values, 1.0}}, beta);
        sup_c0 = std::max(sup_c0, c0);
        sup_holder = std::max(sup_holder, hs);
        sup_sum = std::max(sup_sum, c0 + hs);
    }

    double sup_time = 0.0;
    for (int i = 0; i < m; ++i) {
        double t = traj.times[i];
        if (t <= 0.0) continue;
        for (int j = i + 1; j < m; ++j) {
            double hstep = traj.times[j] - traj.times[i];
            double diff = 0.0;
            for (std::size_t idx = 0; idx < traj.fields[i].values.size(); ++idx)
                diff = std::max(diff, std::abs(traj.fields[j].values[idx] - traj.fields[i].values[idx]));
            sup_time = std::max(sup_time,
                                std::pow(t, 0.5 + beta / 4.0) * diff / std::pow(hstep, beta / 4.0));
        }
    }

    rep.per_term["t12_c0"] = sup_c0;
    rep.per_term["t12b4_holder_space"] = sup_holder;
    rep.per_term["t12b4_holder_time"] = sup_time;
    rep.y_norm = sup_sum + sup_time;
    return rep;
}

WeightedNormReport norm_XT(const ReferenceSurface& ref, const Trajectory& traj, double beta) {
    traj.validate(ref);
    if (traj.size() < 3) throw FlowError("norm_XT needs at least 3 samples");
    if (!(beta > 0.0 && beta < 1.0)) throw FlowError("beta must lie in (0,1)");
    const auto& g = ref.grid;
    const int m = traj.size();

    WeightedNormReport rep;
    rep.beta = beta;
    rep.T = traj.times.back();

    auto dt_fields = time_derivative(traj);

    // cached grad^4 components per sample for the time-Holder sups
    std::vector<std::vector<std::pair<std::vector<double>, double>>> grad4(m);
    for (int i = 0; i < m; ++i) grad4[i] = derivative_components(g, traj.fields[i].values, 4);

    std::array<double, 5> sup_k{};
    double sup_h4 = 0.0, sup_dt = 0.0, sup_dth = 0.0, sup_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        double t = traj.times[i];
        if (t <= 0.0) continue;
        double sum_i = 0.0;
        for (int k = 0; k <= 4; ++k) {
            double v = std::pow(t, -0.5 + k / 4.0) * max_abs(tensor_abs(g, traj.fields[i].values, k));
            sup_k[k] = std::max(sup_k[k], v);
            sum_i += v;
        }
        double h4 = std::pow(t, 0.5 + beta / 4.0) * holder_seminorm(g, grad4[i], beta);
        double d0 = std::pow(t, 0.5) * max_abs(dt_fields[i]);
        double dh = std::pow(t, 0.5 + beta / 4.0) * holder_seminorm(g, {{dt_fields[i], 1.0}}, beta);
        sup_h4 = std::max(sup_h4, h4);
        sup_dt = std::max(sup_dt, d0);
        sup_dth = std::max(sup_dth, dh);
        sum_i += h4 + d0 + dh;
        sup_sum = std::max(sup_sum, sum_i);
    }

    // time-Holder sups of grad^4 u and of d_t u over stored pairs
    double sup_time4 = 0.0, sup_timedt = 0.0;
    for (int i = 0; i < m; ++i) {
        double t = traj.times[i];
        if (t <= 0.0) continue;
        double w = std::pow(t, 0.5 + beta / 4.0);
        for (int j = i + 1; j < m; ++j) {
            double hstep = traj.times[j] - traj.times[i];
            double hw = std::pow(hstep, beta / 4.0);
            double diff4 = 0.0;
            for (std::size_t c = 0; c < grad4[i].size(); ++c) {
                const auto& [ai, mult] = grad4[i][c];
                const auto& aj = grad4[j][c].first;
                for (std::size_t idx = 0; idx < ai.size(); ++idx) {
                    double dv = std::sqrt(mult) * (aj[idx] - ai[idx]);
                    diff4 = std::max(diff4, std::abs(dv));
                }
            }
            double diffdt = 0.0;
            for (std::size_t idx = 0; idx < dt_fields[i].size(); ++idx)
                diffdt = std::max(diffdt, std::abs(dt_fields[j][idx] - dt_fields[i][idx]));
            sup_time4 = std::max(sup_time4, w * diff4 / hw);
            sup_timedt = std::max(sup_timedt, w * diffdt / hw);
        }
    }

    for (int k = 0; k <= 4; ++k) rep.per_term["weighted_c0_grad" + std::to_string(k)] = sup_k[k];
    rep.per_term["holder_space_grad4"] = sup_h4;
    rep.per_term["dt_c0"] = sup_dt;
    rep.per_term["dt_holder_space"] = sup_dth;
    rep.per_term["holder_time_grad4"] = sup_time4;
    rep.per_term["holder_time_dt"] = sup_timedt;
    rep.x_norm = sup_sum + sup_time4 + sup_timedt;
    return rep;
}

double schauder_constant(const ReferenceSurface& ref, const HeightField& u0, int l, int k, double T) {
    check_field(ref, u0);
    const double a = l + k / 4.0;
    const auto& g = ref.grid;
    const auto c0 = g.to_spectral(u0.values);
    const int order = k + 2;

    // single spectral pass: the semigroup factor kills high modes before the
    // derivative multiplier can amplify transform roundoff
    auto component_max_sq = [&](double t) {
        auto binom = [](int n, int r) {
            double b = 1;
            for (int i = 0; i < r; ++i) b = b * (n - i) / (i + 1);
            return b;
        };
        const double two_pi = 2.0 * std::numbers::pi;
        std::vector<double> acc(g.total(), 0.0);
        const int parts = g.dims() == 1 ? 1 : order + 1;
        for (int part = 0; part < parts; ++part) {
            const int p = g.dims() == 1 ? order : order - part;
            const int q = g.dims() == 1 ? 0 : part;
            auto c = c0;
            for (int idx = 0; idx < g.spectral_size(); ++idx) {
                double lam = g.laplace_eigenvalue(idx);
                double mu = lam * lam;
                int k0 = g.freq0(idx), k1 = g.freq1(idx);
                bool drop = (p % 2 == 1 && std::abs(k0) == g.n(0) / 2) ||
                            (q % 2 == 1 && g.dims() == 2 && k1 == g.n(1) / 2);
                if (drop) {
                    c[idx] = 0.0;
                    continue;
                }
                std::complex<double> m = std::pow(-mu, l) * std::exp(-t * mu);
                if (p > 0) m *= std::pow(std::complex<double>(0.0, two_pi * k0 / g.scale(0)), p);
                if (q > 0) m *= std::pow(std::complex<double>(0.0, two_pi * k1 / g.scale(1)), q);
                c[idx] *= m;
            }
            auto comp = g.from_spectral(c);
            double mult = g.dims() == 1 ? 1.0 : binom(order, q);
            for (int i = 0; i < g.total(); ++i) acc[i] += mult * comp[i] * comp[i];
        }
        double m = 0.0;
        for (double v : acc) m = std::max(m, v);
        return m;
    };

    auto value_at = [&](double t) {
        return (a == 0.0 ? 1.0 : std::pow(t, a)) * std::sqrt(component_max_sq(t));
    };
    if (a == 0.0) {
        // t^0 * |grad^{k+2} S u0| is monotone decreasing: sup at t -> 0
        return value_at(0.0);
    }
    // coarse log scan, then golden-section refinement around the argmax
    const int mscan = 160;
    double best_t = T, best_v = value_at(T);
    for (int i = 0; i < mscan; ++i) {
        double t = T * std::pow(1e-10, static_cast<double>(mscan - 1 - i) / (mscan - 1));
        double v = value_at(t);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    double lo = best_t / 3.0, hi = std::min(T, best_t * 3.0);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = value_at(c), fd = value_at(d);
    for (int it = 0; it < 80; ++it) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = value_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = value_at(d);
        }
    }
    return std::max({best_v, fc, fd});
}

HeightField random_band_limited_field(const ReferenceSurface& ref, std::uint64_t seed,
                                      double amplitude, int kmax) {
    const auto& g = ref.grid;
    std::vector<double> v(g.total(), 0.0);
    std::uint64_t ctr = 0;
    const bool d2 = g.dims() == 2;
    for (int k0 = 0; k0 <= kmax; ++k0)
        for (int k1 = d2 ? -kmax : 0; k1 <= (d2 ? kmax : 0); ++k1) {
            if (k0 == 0 && k1 <= 0) continue;
            double a = rng::draw_symmetric(seed, ctr++) / (1.0 + k0 * k0 + k1 * k1);
            double ph = kTwoPi * rng::draw_unit(seed, ctr++);
            for (int i = 0; i < g.n(0); ++i) {
                double arg0 = kTwoPi * k0 * g.coord(0, i);
                for (int j = 0; j < (d2 ? g.n(1) : 1); ++j) {
                    double arg = arg0 + (d2 ? kTwoPi * k1 * g.coord(1, j) : 0.0);
                    v[g.param().index(i, j)] += a * std::cos(arg + ph);
                }
            }
        }
    double m = max_abs(v);
    if (m > 0.0)
        for (double& x : v) x *= amplitude / m;
    return HeightField{ref.hash, std::move(v)};
}

std::vector<SchauderRow> semigroup_estimate_check(const ReferenceSurface& ref, int samples,
                                                  int k_max, int l_max, double T,
                                                  std::uint64_t seed) {
    if (samples < 1) throw FlowError("samples must be >= 1");
    std::vector<HeightField> data;
    data.reserve(samples);
    for (int s = 0; s < samples; ++s) {
        auto u0 = random_band_limited_field(ref, seed + s, 1.0, 8);
        double c11 = field_norm(ref, u0.values, NormKind::c11());
        for (double& x : u0.values) x /= c11;
        data.push_back(std::move(u0));
    }
    std::vector<SchauderRow> rows;
    for (int l = 0; l <= l_max; ++l)
        for (int k = 0; k <= k_max; ++k) {
            SchauderRow row{l, k, {}, 0.0};
            for (const auto& u0 : data) row.values.push_back(schauder_constant(ref, u0, l, k, T));
            auto [mn, mx] = std::minmax_element(row.values.begin(), row.values.end());
            row.ratio_max_min = *mn > 0.0 ? *mx / *mn : 0.0;
            rows.push_back(std::move(row));
        }
    return rows;
}

} // namespace torusflow
