#pragma once

#include <optional>
#include <vector>

#include "torusflow/graph_geometry.hpp"
#include "torusflow/semigroup.hpp"

namespace torusflow {

struct FlowConfig {
    FlowKind kind = FlowKind::VPMCF; // VPMCF or SDF
    double dt = 1e-5;
    double t_end = 0.05;
    double imex_theta = 1.0; // implicit weight in [1/2, 1]
    bool volume_projection = true;
    bool adapt = true;
    double safety = 1.0;
    int snapshot_every = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FlowState {
    double t = 0.0;
    HeightField u;
    GeometryCache cache;
    double lambda = 0.0; // last volume-projection multiplier
};

struct StepReport {
    double t = 0.0;       // time after the step
    double dt_used = 0.0;
    int projection_iters = 0;
    int halvings = 0;
    double residual = 0.0; // discrete dissipation identity residual
    double perimeter_before = 0.0;
    double perimeter_after = 0.0;
    double volume_drift_before_projection = 0.0;
    double volume_rel_drift_after = 0.0;
    double lambda = 0.0;
};

FlowState make_flow_state(const ReferenceSurface& ref, const HeightField& u, double t = 0.0);

/// d_t u = -(H_{E_u} - Hbar)/tilt with Hbar the area-weighted mean
/// Int H J / Int J; the sign makes the perimeter non-increasing.
SurfaceField rhs_vpmcf(const ReferenceSurface& ref, const HeightField& u);

/// d_t u = Delta_{E_u} H_{E_u} / tilt.
SurfaceField rhs_sdf(const ReferenceSurface& ref, const HeightField& u);

std::vector<double> flow_rhs(const ReferenceSurface& ref, const GeometryCache& cache, FlowKind kind);

/// Instantaneous dissipation of the flow: |H - Hbar|^2_{L2(dE_u)} for VPMCF,
/// |grad H|^2_{L2(dE_u)} for SDF.
double dissipation_rate(const ReferenceSurface& ref, const GeometryCache& cache, FlowKind kind);

/// Uniform normal shift u + lambda with lambda solved by scalar Newton so
/// |E_{u+lambda}| = |E| to 1e-14 relative.  Returns (projected field, lambda).
std::pair<HeightField, double> project_volume(const ReferenceSurface& ref, const HeightField& u,
                                              int* iters = nullptr);

/// One semi-implicit spectral step u+ = u + dt (I + theta dt A)^{-1} RHS(u),
/// with A = -Delta_E (VPMCF) or Delta_E^2 (SDF) applied as a flat Fourier
/// multiplier, followed by the volume projection.  The perimeter may not
/// increase beyond 1e-12 P(E) per step; on violation dt is halved, up to 20
/// times, then StepFailed is thrown.
std::pair<FlowState, StepReport> step_imex(const ReferenceSurface& ref, const FlowState& state,
                                           const FlowConfig& cfg);

/// Nonlinear error f[u]: the full flow right-hand side minus its flat-base
/// linear part (-Delta^2_E u for SDF, Delta_E u for VPMCF), computed as an
/// exact residual rather than from assembled coefficient tensors.
SurfaceField nonlinear_residual(const ReferenceSurface& ref, const HeightField& u,
                                FlowKind kind = FlowKind::SDF);

struct MildSolveResult {
    Trajectory trajectory;
    std::vector<double> contraction_ratios; // |psi_{n+1}-psi_n| / |psi_n-psi_{n-1}| in X_T
};

/// Mild-solution fixed point u_n = S u_0 + V f[u_{n-1}] for the SDF on a
/// flat-base (lamella) reference over a uniform time grid.
MildSolveResult mild_solve(const ReferenceSurface& ref, const HeightField& u0, double T,
                           int n_iter, double beta, int time_samples = 256);

struct RunResult {
    Trajectory trajectory;
    std::vector<StepReport> steps;
};

/// Advances the flow to t_end with snapshots every snapshot_every accepted
/// steps (plus initial and final states).  The initial datum is volume
/// projected first when projection is enabled.
RunResult run_flow(const ReferenceSurface& ref, const HeightField& u0, const FlowConfig& cfg);

} // namespace torusflow
