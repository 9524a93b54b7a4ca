#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "torusflow/spectral_grid.hpp"

namespace torusflow {

struct HeightField;

/// Catalogue of constant-principal-curvature reference sets in T^N whose
/// boundary is parametrized by a flat torus, so every differential operator
/// diagonalizes under the discrete Fourier transform.
///
/// Lamella entries model the slab {0 <= y <= slab_width} with the free wall
/// at height slab_width and the opposite wall pinned flat; height fields live
/// on the free wall only, and the pinned wall enters perimeter/volume through
/// closed-form constants.  Disc and cylinder entries parametrize the whole
/// boundary.
enum class ReferenceKind { Lamella2D, Lamella3D, Disc2D, Cylinder3D };

std::string to_string(ReferenceKind k);
ReferenceKind reference_kind_from_string(const std::string& s);

struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::Lamella2D;
    double radius = 0.25;     // Disc2D / Cylinder3D, in (0, 1/2)
    double slab_width = 0.5;  // lamellae, in (0, 1)
    ParamGrid grid;

    void validate() const;
    std::string canonical() const;
};

/// Immutable geometry of a catalogue reference set E.
///
/// Shared by read-only access; every per-node array is aligned with the grid
/// (row-major, index = i*n1 + j).  Positions live in the unit torus cell,
/// discs/cylinders centred at 0.5 per periodic coordinate.
struct ReferenceSurface {
    ReferenceSurface(ReferenceSpec s, SpectralGrid g) : spec(std::move(s)), grid(std::move(g)) {}

    ReferenceSpec spec;
    SpectralGrid grid;
    int ambient_dim = 2;

    std::vector<std::array<double, 3>> points;
    std::vector<std::array<double, 3>> normal;
    std::vector<std::array<double, 3>> tangent0;
    std::vector<std::array<double, 3>> tangent1; // dims == 2 only

    std::array<double, 2> kappa = {0.0, 0.0}; // principal curvature per grid axis
    double mean_curvature = 0.0;              // H_E = sum kappa_a (constant: criticality)
    double sff_norm_sq = 0.0;                 // |B_E|^2 = sum kappa_a^2
    double perimeter = 0.0;                   // P(E), pinned wall included
    double fixed_boundary_measure = 0.0;      // measure of the non-parametrized boundary part
    double volume = 0.0;                      // |E|
    double tubular_radius = 0.0;              // uniform inner/outer ball radius

    std::uint64_t hash = 0;

    int total_nodes() const { return grid.total(); }
};

/// Builds the full reference geometry from closed forms.
ReferenceSurface make_reference(const ReferenceSpec& spec);

/// Second variation of the perimeter at the critical set E in the direction of
/// the normal field phi:
///
///     Q(phi) = Int_{dE} |grad_tau phi|^2 - |B_E|^2 phi^2 dH^{N-1}.
///
/// For a critical E (constant H_E) and volume-preserving-to-first-order normal
/// variations the two extra terms of the general formula, H_E div_tau(X_tau
/// (X.nu)) and H_E (div X)(X.nu), integrate to zero, which is the reduction
/// implemented here; equivalently, Q is the second derivative of the
/// volume-constrained Lagrangian P(E_u) - H_E |E_u| along the graph path.
double second_variation(const ReferenceSurface& ref, const HeightField& phi);

struct SpectrumEntry {
    std::array<int, 2> mode = {0, 0}; // integer frequency per grid axis
    double eigenvalue = 0.0;
    bool translation = false; // spanned by the translation fields nu . e_i
};

struct StabilitySpectrum {
    std::vector<SpectrumEntry> entries;       // T-perp modes, ascending eigenvalue
    std::vector<SpectrumEntry> translations;  // reported separately
    double min_eigenvalue = 0.0;
    bool strictly_stable = false;
};

/// Eigenvalues of the second-variation form on mean-zero fields L2-orthogonal
/// to the translation subspace, per Fourier mode with |k_a| <= kmax.
/// Zero-mode cutoff: 1e-10 times the largest computed eigenvalue.
StabilitySpectrum stability_spectrum(const ReferenceSurface& ref, int kmax);

} // namespace torusflow
