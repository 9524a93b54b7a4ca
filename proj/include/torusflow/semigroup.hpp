#pragma once

#include <map>
#include <string>
#include <vector>

#include "torusflow/height_field.hpp"
#include "torusflow/reference.hpp"

namespace torusflow {

enum class FlowKind { VPMCF, SDF, LinearHeat, LinearBiharmonic };

std::string to_string(FlowKind k);
FlowKind flow_kind_from_string(const std::string& s);

/// Time-stamped height fields along a run.  Times are strictly increasing and
/// start at 0; all fields share the reference grid.
struct Trajectory {
    std::uint64_t ref_hash = 0;
    FlowKind flow_kind = FlowKind::VPMCF;
    std::vector<double> times;
    std::vector<HeightField> fields;

    int size() const { return static_cast<int>(times.size()); }
    void append(double t, HeightField f);
    void validate(const ReferenceSurface& ref) const;
};

/// exp(-t Delta^2) u0 on the flat parameter torus: Fourier multiplier
/// exp(-t lambda_k^2) per mode.  Exact identity at t = 0; constants invariant.
HeightField biharmonic_semigroup(const ReferenceSurface& ref, const HeightField& u0, double t);

/// exp(t Delta) u0: multiplier exp(-t lambda_k).
HeightField heat_semigroup(const ReferenceSurface& ref, const HeightField& u0, double t);

/// l-th time derivative of S(t) u0 applied modewise: (-lambda^2)^l exp(-t lambda^2).
HeightField biharmonic_semigroup_dt(const ReferenceSurface& ref, const HeightField& u0, double t, int l);

/// Duhamel operator for the biharmonic heat equation: Vf(t) = Int_0^t
/// S(t-s) f(s) ds with the source sampled on the uniform grid times[i] =
/// i*t/(m-1).  Piecewise-linear coefficients in time, integrated exactly per
/// interval (exponential integrator), so the time-interpolation error is
/// O(dt^2).
HeightField duhamel(const ReferenceSurface& ref, const std::vector<HeightField>& source, double t);
/// All partial Duhamel integrals V f(times[j]) in one sweep.
std::vector<HeightField> duhamel_path(const ReferenceSurface& ref,
                                      const std::vector<HeightField>& source, double t);

/// Discrete evaluation of the time-weighted parabolic norms.  Sups run over
/// the stored time grid (t > 0) and all node pairs, so reported values are
/// grid-converged lower bounds of the continuous sups.
struct WeightedNormReport {
    double beta = 0.5;
    double T = 0.0;
    double y_norm = 0.0;
    double x_norm = 0.0;
    std::map<std::string, double> per_term;
};

WeightedNormReport norm_YT(const ReferenceSurface& ref, const Trajectory& traj, double beta);
WeightedNormReport norm_XT(const ReferenceSurface& ref, const Trajectory& traj, double beta);

/// Empirical Schauder constant sup_{0<t<=T} t^{l+k/4} |d_t^l grad^{k+2} S u0|_C0
/// for one initial datum, located by a log-grid scan plus golden-section
/// refinement in t (the semigroup is evaluated exactly at any t, so this
/// resolves the continuous sup).
double schauder_constant(const ReferenceSurface& ref, const HeightField& u0, int l, int k, double T);

struct SchauderRow {
    int l = 0, k = 0;
    std::vector<double> values; // one constant per sample
    double ratio_max_min = 0.0;
};

/// Constants over `samples` seeded random band-limited u0 normalized to
/// |u0|_{C^{1,1}} = 1, for all (l,k) in [0,l_max] x [0,k_max].
std::vector<SchauderRow> semigroup_estimate_check(const ReferenceSurface& ref, int samples,
                                                  int k_max, int l_max, double T,
                                                  std::uint64_t seed = 2024);

/// Seeded band-limited field with mode amplitudes ~ 1/(1+|k|^2) and uniform
/// phases from the counter-based stream; C0-normalized to `amplitude`.
HeightField random_band_limited_field(const ReferenceSurface& ref, std::uint64_t seed,
                                      double amplitude, int kmax);

} // namespace torusflow
