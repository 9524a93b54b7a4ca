#pragma once

#include <array>

#include "torusflow/fitting.hpp"
#include "torusflow/graph_geometry.hpp"
#include "torusflow/semigroup.hpp"

namespace torusflow {

/// Result of fitting a translation so the recentred set has small projection
/// onto the translation subspace.
struct RecenteredState {
    std::array<double, 3> sigma = {0.0, 0.0, 0.0}; // ambient translation
    HeightField v;                                 // E_u + sigma = E_v
    double projection_defect = 0.0;                // |Int v nu dH| / |v|_L2
};

/// The N-vector Int_dE u nu_E dH^{N-1}.
std::array<double, 3> barycenter_projection(const ReferenceSurface& ref, const HeightField& u);

/// Writes the translated set E_u + sigma as a normal graph v over dE, using
/// the closed-form nearest-point projection of the catalogue (in-plane shift
/// for lamellae, radial re-expression for disc/cylinder) and spectral
/// resampling.  Throws FoldOver when the projection stops being injective and
/// TubularViolation when the normal component of the shift leaves the guard.
HeightField reparametrize(const ReferenceSurface& ref, const HeightField& u,
                          const std::array<double, 3>& sigma);

/// Finds sigma minimizing |Int v nu| by Newton iteration (finite-difference
/// Jacobian) started from the translation-Gram initial guess; directions on
/// which translations act trivially are pinned to zero, giving the smallest
/// such sigma.  For lamellae the minimizer is exact mean subtraction and the
/// Newton path is cross-checked against it.
RecenteredState find_translation(const ReferenceSurface& ref, const HeightField& u,
                                 double delta_star);

struct TranslationTrack {
    std::vector<double> times;
    std::vector<std::array<double, 3>> sigmas;
    std::vector<double> defects;
    std::vector<double> cauchy_modulus;    // sup_{s>t} |sigma_s - sigma_t|
    std::vector<double> dist_to_final;     // |sigma_t - sigma_end|
    RateFit modulus_decay;                 // fitted on cauchy_modulus where positive
};

/// Recentres every snapshot of a trajectory and reports the translation
/// series with its Cauchy modulus and fitted exponential decay.
TranslationTrack track_translations(const ReferenceSurface& ref, const Trajectory& traj,
                                    double delta_star);

} // namespace torusflow
