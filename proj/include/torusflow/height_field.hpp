#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torusflow/reference.hpp"

namespace torusflow {

/// Scalar height u over the parametrized part of a reference boundary.
/// The graph stays valid while max|u| < tubular_radius.
struct HeightField {
    std::uint64_t ref_hash = 0;
    std::vector<double> values;

    double max_abs() const;
};

/// Scalar or vector-valued samples on the reference grid (node-major layout:
/// data[node*comps + c]).
struct SurfaceField {
    std::uint64_t ref_hash = 0;
    int comps = 1;
    std::vector<double> data;

    int nodes() const { return comps > 0 ? static_cast<int>(data.size()) / comps : 0; }
    double& at(int node, int c = 0) { return data[node * comps + c]; }
    double at(int node, int c = 0) const { return data[node * comps + c]; }
};

HeightField make_height_field(const ReferenceSurface& ref, std::vector<double> values);
HeightField zero_height_field(const ReferenceSurface& ref);

/// Throws GridMismatch unless the field belongs to ref's grid.
void check_field(const ReferenceSurface& ref, const HeightField& f);
/// Throws TubularViolation if the graph leaves the tubular neighborhood.
void check_tubular(const ReferenceSurface& ref, const HeightField& f);

/// Binary snapshot format: 8 little-endian uint64 header fields
/// (magic, version, kind, dims, n0, n1, value count, reference hash)
/// followed by the values as little-endian IEEE doubles.
void save_height_field(const std::string& path, const ReferenceSurface& ref, const HeightField& f);
HeightField load_height_field(const std::string& path, const ReferenceSurface& ref);

/// One "s0,s1,value" row per node, for inspection.
void export_height_field_csv(const std::string& path, const ReferenceSurface& ref, const HeightField& f);

} // namespace torusflow
