#include "torusflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "torusflow/height_field.hpp"

namespace torusflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

std::string to_string(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::Lamella2D: return "lamella2d";
        case ReferenceKind::Lamella3D: return "lamella3d";
        case ReferenceKind::Disc2D: return "disc2d";
        case ReferenceKind::Cylinder3D: return "cylinder3d";
    }
    return "unknown";
}

ReferenceKind reference_kind_from_string(const std::string& s) {
    if (s == "lamella2d") return ReferenceKind::Lamella2D;
    if (s == "lamella3d") return ReferenceKind::Lamella3D;
    if (s == "disc2d") return ReferenceKind::Disc2D;
    if (s == "cylinder3d") return ReferenceKind::Cylinder3D;
    throw FlowError("unknown reference kind '" + s + "'");
}

void ReferenceSpec::validate() const {
    const bool curved = kind == ReferenceKind::Disc2D || kind == ReferenceKind::Cylinder3D;
    if (curved && !(radius > 0.0 && radius < 0.5))
        throw FlowError("radius must lie in (0, 1/2)");
    if (!curved && !(slab_width > 0.0 && slab_width < 1.0))
        throw FlowError("slab_width must lie in (0, 1)");
    const int want_dims = (kind == ReferenceKind::Lamella2D || kind == ReferenceKind::Disc2D) ? 1 : 2;
    if (grid.dims != want_dims)
        throw FlowError("grid dimension does not match reference kind");
    for (int a = 0; a < grid.dims; ++a)
        if (grid.n[a] < 16 || !is_power_of_two(grid.n[a]))
            throw FlowError("grid resolution must be a power of two >= 16");
}

std::string ReferenceSpec::canonical() const {
    std::ostringstream os;
    os << to_string(kind) << ";r=" << radius << ";w=" << slab_width << ";n=" << grid.n[0];
    if (grid.dims == 2) os << "x" << grid.n[1];
    return os.str();
}

ReferenceSurface make_reference(const ReferenceSpec& spec_in) {
    ReferenceSpec spec = spec_in;
    spec.validate();

    const double r = spec.radius;
    const double w = spec.slab_width;

    switch (spec.kind) {
        case ReferenceKind::Lamella2D:
            spec.grid.scale = {1.0, 1.0};
            break;
        case ReferenceKind::Lamella3D:
            spec.grid.scale = {1.0, 1.0};
            break;
        case ReferenceKind::Disc2D:
            spec.grid.scale = {kTwoPi * r, 1.0};
            break;
        case ReferenceKind::Cylinder3D:
            // axis 0: cylinder axis (length 1), axis 1: angle (arclength 2*pi*r)
            spec.grid.scale = {1.0, kTwoPi * r};
            break;
    }

    ReferenceSurface ref(spec, SpectralGrid(spec.grid));
    const int nodes = ref.grid.total();
    ref.points.resize(nodes);
    ref.normal.resize(nodes);
    ref.tangent0.resize(nodes);
    if (spec.grid.dims == 2) ref.tangent1.resize(nodes);

    auto fill = [&](auto&& fn) {
        for (int i = 0; i < spec.grid.n[0]; ++i)
            for (int j = 0; j < spec.grid.n[1]; ++j)
                fn(spec.grid.index(i, j), ref.grid.coord(0, i), spec.grid.dims == 2 ? ref.grid.coord(1, j) : 0.0);
    };

    switch (spec.kind) {
        case ReferenceKind::Lamella2D:
            ref.ambient_dim = 2;
            fill([&](int idx, double s0, double) {
                ref.points[idx] = {s0, w, 0.0};
                ref.normal[idx] = {0.0, 1.0, 0.0};
                ref.tangent0[idx] = {1.0, 0.0, 0.0};
            });
            ref.kappa = {0.0, 0.0};
            ref.perimeter = 2.0;
            ref.fixed_boundary_measure = 1.0;
            ref.volume = w;
            ref.tubular_radius = 0.5 * std::min(w, 1.0 - w);
            break;
        case ReferenceKind::Lamella3D:
            ref.ambient_dim = 3;
            fill([&](int idx, double s0, double s1) {
                ref.points[idx] = {s0, s1, w};
                ref.normal[idx] = {0.0, 0.0, 1.0};
                ref.tangent0[idx] = {1.0, 0.0, 0.0};
                ref.tangent1[idx] = {0.0, 1.0, 0.0};
            });
            ref.kappa = {0.0, 0.0};
            ref.perimeter = 2.0;
            ref.fixed_boundary_measure = 1.0;
            ref.volume = w;
            ref.tubular_radius = 0.5 * std::min(w, 1.0 - w);
            break;
        case ReferenceKind::Disc2D:
            ref.ambient_dim = 2;
            fill([&](int idx, double s0, double) {
                double th = kTwoPi * s0;
                double c = std::cos(th), s = std::sin(th);
                ref.points[idx] = {0.5 + r * c, 0.5 + r * s, 0.0};
                ref.normal[idx] = {c, s, 0.0};
                ref.tangent0[idx] = {-s, c, 0.0};
            });
            ref.kappa = {1.0 / r, 0.0};
            ref.perimeter = kTwoPi * r;
            ref.fixed_boundary_measure = 0.0;
            ref.volume = std::numbers::pi * r * r;
            ref.tubular_radius = std::min(r, 0.5 * (1.0 - 2.0 * r));
            break;
        case ReferenceKind::Cylinder3D:
            ref.ambient_dim = 3;
            fill([&](int idx, double s0, double s1) {
                double th = kTwoPi * s1;
                double c = std::cos(th), s = std::sin(th);
                ref.points[idx] = {s0, 0.5 + r * c, 0.5 + r * s};
                ref.normal[idx] = {0.0, c, s};
                ref.tangent0[idx] = {1.0, 0.0, 0.0};
                ref.tangent1[idx] = {0.0, -s, c};
            });
            ref.kappa = {0.0, 1.0 / r};
            ref.perimeter = kTwoPi * r;
            ref.fixed_boundary_measure = 0.0;
            ref.volume = std::numbers::pi * r * r;
            ref.tubular_radius = std::min(r, 0.5 * (1.0 - 2.0 * r));
            break;
    }

    ref.mean_curvature = ref.kappa[0] + ref.kappa[1];
    ref.sff_norm_sq = ref.kappa[0] * ref.kappa[0] + ref.kappa[1] * ref.kappa[1];
    ref.hash = fnv1a(spec.canonical());
    return ref;
}

double second_variation(const ReferenceSurface& ref, const HeightField& phi) {
    check_field(ref, phi);
    const auto& g = ref.grid;
    auto dx = g.derivative(phi.values, 1, 0);
    std::vector<double> integrand(g.total());
    if (g.dims() == 2) {
        auto dy = g.derivative(phi.values, 0, 1);
        for (int i = 0; i < g.total(); ++i)
            integrand[i] = dx[i] * dx[i] + dy[i] * dy[i] - ref.sff_norm_sq * phi.values[i] * phi.values[i];
    } else {
        for (int i = 0; i < g.total(); ++i)
            integrand[i] = dx[i] * dx[i] - ref.sff_norm_sq * phi.values[i] * phi.values[i];
    }
    return g.integrate(integrand);
}

StabilitySpectrum stability_spectrum(const ReferenceSurface& ref, int kmax) {
    if (kmax < 1) throw FlowError("kmax must be >= 1");
    StabilitySpectrum out;
    const auto& g = ref.grid;

    auto eigenvalue = [&](int k0, int k1) {
        double xi0 = kTwoPi * k0 / g.scale(0);
        double xi1 = g.dims() == 2 ? kTwoPi * k1 / g.scale(1) : 0.0;
        return xi0 * xi0 + xi1 * xi1 - ref.sff_norm_sq;
    };

    auto is_translation = [&](int k0, int k1) {
        switch (ref.spec.kind) {
            case ReferenceKind::Lamella2D:
            case ReferenceKind::Lamella3D:
                return false; // the normal translation is the constant mode, handled below
            case ReferenceKind::Disc2D:
                return std::abs(k0) == 1;
            case ReferenceKind::Cylinder3D:
                return k0 == 0 && std::abs(k1) == 1;
        }
        return false;
    };

    // Lamellae: in-slab translations have nu.e_i = 0 and act trivially; the
    // single normal translation is the constant field, with eigenvalue
    // -|B|^2 = 0 on the flat wall.
    if (ref.spec.kind == ReferenceKind::Lamella2D || ref.spec.kind == ReferenceKind::Lamella3D) {
        out.translations.push_back({{0, 0}, 0.0, true});
    }

    auto push_mode = [&](int k0, int k1) {
        if (k0 == 0 && k1 == 0) return; // constant: the volume mode, excluded by mean-zero
        SpectrumEntry e{{k0, k1}, eigenvalue(k0, k1), is_translation(k0, k1)};
        // cos and sin copy of every nonzero frequency
        if (e.translation) {
            out.translations.push_back(e);
            out.translations.push_back(e);
        } else {
            out.entries.push_back(e);
            out.entries.push_back(e);
        }
    };

    if (g.dims() == 1) {
        for (int k = 1; k <= kmax; ++k) push_mode(k, 0);
    } else {
        // half frequency plane, conjugates represent the same real modes
        for (int k0 = 0; k0 <= kmax; ++k0)
            for (int k1 = (k0 == 0 ? 1 : -kmax); k1 <= kmax; ++k1) push_mode(k0, k1);
    }

    std::sort(out.entries.begin(), out.entries.end(),
              [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.eigenvalue < b.eigenvalue; });

    double max_ev = 0.0;
    for (const auto& e : out.entries) max_ev = std::max(max_ev, std::abs(e.eigenvalue));
    const double zero_cut = 1e-10 * std::max(max_ev, 1.0);
    for (auto& t : out.translations)
        if (std::abs(t.eigenvalue) <= zero_cut) t.eigenvalue = 0.0;

    out.min_eigenvalue = out.entries.empty() ? 0.0 : out.entries.front().eigenvalue;
    out.strictly_stable = out.min_eigenvalue > zero_cut;
    return out;
}

} // namespace torusflow
