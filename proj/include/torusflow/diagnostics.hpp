#pragma once

#include <optional>
#include <string>

#include "torusflow/fitting.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/recentering.hpp"

namespace torusflow {

/// Per-snapshot values of every monitored functional.  Quotients are absent
/// when their denominators fall below 1e-13 (0/0 noise near equilibrium).
struct DiagnosticsRecord {
    double t = 0.0;
    double perimeter_gap = 0.0;      // E(t) = P(E_t) - P(E)
    double volume_drift = 0.0;       // (|E_t| - |E|) / |E|
    double l2_curvature_gap = 0.0;   // |H - Hbar|_{L2(dE_t)}
    double grad_curvature = 0.0;     // |grad H|_{L2(dE_t)}
    double hbar_surface = 0.0;       // area-weighted mean of H over dE_t
    double hbar_reference = 0.0;     // plain mean of the pulled-back H over dE
    std::array<double, 3> sigma = {0.0, 0.0, 0.0};
    double projection_defect = 0.0;
    std::optional<double> alexandrov_quotient; // |v|_{H1(dE)} / l2_curvature_gap
    std::optional<double> poincare_quotient;   // l2_curvature_gap / grad_curvature
    std::optional<double> asymmetry;           // alpha(E, E_t)
    std::optional<std::array<double, 3>> asymmetry_shift;
    std::optional<double> isoperimetric_quotient; // alpha^2 / perimeter_gap
    std::optional<double> dissipation_residual;   // discrete identity residual
    std::optional<double> dissipation_functional; // D(E_t, E - tau)
};

/// Populates the per-snapshot part of the record from a geometry cache and the
/// recentred state supplied by the caller.
DiagnosticsRecord snapshot_diagnostics(const ReferenceSurface& ref, const GeometryCache& cache,
                                       const RecenteredState& recentred, double t,
                                       double delta_star);

struct AsymmetryResult {
    double alpha = 0.0;
    std::array<double, 3> shift = {0.0, 0.0, 0.0};
    int excluded_shifts = 0; // candidates dropped because reparametrization failed
};

struct AsymmetryOptions {
    int coarse_per_axis = 64;
    double refine_tol = 1e-8;
    std::optional<std::array<double, 3>> center; // warm start; defaults to 0
    std::optional<double> box_half_width;        // search box around the centre
};

/// Fraenkel asymmetry alpha(E, E_u) = min_x |E symmdiff (E_u + x)| over a
/// coarse translation grid refined by per-axis golden-section search; the
/// symmetric difference is the fibered normal-coordinate volume, exact to
/// quadrature order.
AsymmetryResult fraenkel_asymmetry(const ReferenceSurface& ref, const HeightField& u,
                                   const AsymmetryOptions& opts = {});

/// max alpha^2 / perimeter_gap over records with both quantities present and
/// gap > 1e-13; needs at least 10 qualifying records.
double isoperimetric_check(const std::vector<DiagnosticsRecord>& records);

/// D(E_u, E - tau) = Int_{E_u symmdiff (E-tau)} dist_{d(E-tau)} dx via fibered
/// quadrature with the catalogue's closed-form distance.
double dissipation_functional(const ReferenceSurface& ref, const HeightField& u,
                              const std::array<double, 3>& tau);

struct DiagnosticsOptions {
    double delta_star = 0.1;
    bool asymmetry = false;
    int asymmetry_stride = 1;
    bool dissipation = true; // D(E_t, E - sigma_end) when the track exists
};

struct TrajectoryDiagnostics {
    std::vector<DiagnosticsRecord> records;
    TranslationTrack track;
};

/// Recentres every snapshot, evaluates all monitored functionals, and chains
/// the discrete dissipation identity across consecutive snapshots.
TrajectoryDiagnostics diagnose_trajectory(const ReferenceSurface& ref, const Trajectory& traj,
                                          const DiagnosticsOptions& opts = {});

// --- persistence ---

std::string diagnostics_record_json(const DiagnosticsRecord& rec);
void write_diagnostics_ndjson(const std::string& path, const std::vector<DiagnosticsRecord>& recs);
void write_recentering_ndjson(const std::string& path, const TranslationTrack& track);
void export_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRecord>& recs,
                            const std::vector<std::string>& keys);

} // namespace torusflow
