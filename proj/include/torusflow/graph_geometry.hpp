#pragma once

#include <utility>
#include <vector>

#include "torusflow/height_field.hpp"
#include "torusflow/reference.hpp"

namespace torusflow {

/// All geometric quantities of the normal deformation E_u, evaluated nodewise
/// on the reference grid.  Constructed once per evaluation, never mutated.
struct GeometryCache {
    HeightField u;
    SurfaceField normal_graph;        // nu_{E_u} pulled back to the reference grid
    std::vector<double> normal_tilt;  // nu_E . nu_{E_u} in (0, 1]
    std::vector<double> area_factor;  // J = Q * prod(1 + kappa_a u)
    // induced metric in reference-arclength coordinates
    std::vector<double> g00, g01, g11, det_g;
    std::vector<double> mean_curvature; // script-H pulled back: H_{E_u}(x + u nu)
    double perimeter = 0.0;
    double volume = 0.0;
};

GeometryCache analyze(const ReferenceSurface& ref, const HeightField& u);

/// Phi(x) = x + u(x) nu_E(x), reduced modulo 1 per periodic coordinate.
SurfaceField immersion(const ReferenceSurface& ref, const HeightField& u);

/// (nu_{E_u} pulled back, tilt nu_E . nu_{E_u}).  Uses the principal frame
/// formula with factors (1 + kappa_a u).
std::pair<SurfaceField, std::vector<double>> normal_field(const ReferenceSurface& ref,
                                                          const HeightField& u);

std::vector<double> area_factor(const ReferenceSurface& ref, const HeightField& u);

/// P(E_u) = fixed part + Int_dE J dH^{N-1}.
double perimeter(const ReferenceSurface& ref, const HeightField& u);

/// |E_u| by normal fibration: |E| + Int_dE Int_0^u prod(1 + kappa_a s) ds dH.
double enclosed_volume(const ReferenceSurface& ref, const HeightField& u);

/// Mean curvature of E_u pulled back to the reference grid, from the
/// closed-form (radial) graph formula of each catalogue entry.
std::vector<double> mean_curvature(const ReferenceSurface& ref, const HeightField& u);

/// Laplace-Beltrami of phi in the induced metric of E_u, in divergence form
/// with spectral derivatives.  At u = 0 this is the exact Fourier multiplier.
std::vector<double> laplace_beltrami(const ReferenceSurface& ref, const HeightField& u,
                                     const std::vector<double>& phi);
std::vector<double> laplace_beltrami(const ReferenceSurface& ref, const GeometryCache& cache,
                                     const std::vector<double>& phi);

/// |grad_{E_u} phi|^2 nodewise (induced metric).
std::vector<double> surface_gradient_sq(const ReferenceSurface& ref, const GeometryCache& cache,
                                        const std::vector<double>& phi);

/// Area-weighted mean of phi over dE_u: Int phi J dH / Int J dH.
double surface_mean(const ReferenceSurface& ref, const GeometryCache& cache,
                    const std::vector<double>& phi);

// --- discrete function-space norms on the reference boundary ---

struct NormKind {
    enum class Family { C, C11, Holder, L2, Hk, W2p };
    Family family = Family::C;
    int order = 0;    // C: k in [0,6]; Hk: k in [0,4]
    double param = 0; // Holder: beta in (0,1); W2p: p in {2,4}

    static NormKind c(int k) { return {Family::C, k, 0.0}; }
    static NormKind c11() { return {Family::C11, 0, 0.0}; }
    static NormKind holder(double beta) { return {Family::Holder, 0, beta}; }
    static NormKind l2() { return {Family::L2, 0, 0.0}; }
    static NormKind h(int k) { return {Family::Hk, k, 0.0}; }
    static NormKind w2p(double p) { return {Family::W2p, 0, p}; }
};

/// Discrete norm of a grid field.  C^k sums sup-norms of |grad^j| for j <= k;
/// C^{1,1} = C0 + C1 + max|grad^2|; the Holder seminorm scans all node pairs
/// with the geodesic grid distance; Sobolev norms integrate spectral
/// derivative tensors.
double field_norm(const ReferenceSurface& ref, const std::vector<double>& f, NormKind kind);

/// Nodewise |grad^k f|^2 with tensor multiplicities (flat reference metric).
std::vector<double> derivative_tensor_sq(const SpectralGrid& grid, const std::vector<double>& f, int k);

} // namespace torusflow
