#include "torusflow/height_field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace torusflow {

namespace {
constexpr std::uint64_t kMagic = 0x544F525553464C44ULL; // "TORUSFLD"
constexpr std::uint64_t kVersion = 1;

void write_u64(std::ofstream& os, std::uint64_t v) {
    // little-endian on all supported platforms
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
} // namespace

double HeightField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

HeightField make_height_field(const ReferenceSurface& ref, std::vector<double> values) {
    if (static_cast<int>(values.size()) != ref.total_nodes())
        throw GridMismatch("height field size does not match reference grid");
    for (double v : values)
        if (!std::isfinite(v)) throw FlowError("height field contains non-finite values");
    return HeightField{ref.hash, std::move(values)};
}

HeightField zero_height_field(const ReferenceSurface& ref) {
    return HeightField{ref.hash, std::vector<double>(ref.total_nodes(), 0.0)};
}

void check_field(const ReferenceSurface& ref, const HeightField& f) {
    if (f.ref_hash != ref.hash || static_cast<int>(f.values.size()) != ref.total_nodes())
        throw GridMismatch("height field does not belong to this reference");
}

void check_tubular(const ReferenceSurface& ref, const HeightField& f) {
    check_field(ref, f);
    if (f.max_abs() >= ref.tubular_radius)
        throw TubularViolation("graph left the tubular neighborhood (max|u| = " +
                               std::to_string(f.max_abs()) + " >= " +
                               std::to_string(ref.tubular_radius) + ")");
}

void save_height_field(const std::string& path, const ReferenceSurface& ref, const HeightField& f) {
    check_field(ref, f);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    write_u64(os, kMagic);
    write_u64(os, kVersion);
    write_u64(os, static_cast<std::uint64_t>(ref.spec.kind));
    write_u64(os, static_cast<std::uint64_t>(ref.grid.dims()));
    write_u64(os, static_cast<std::uint64_t>(ref.grid.n(0)));
    write_u64(os, static_cast<std::uint64_t>(ref.grid.dims() == 2 ? ref.grid.n(1) : 1));
    write_u64(os, static_cast<std::uint64_t>(f.values.size()));
    write_u64(os, ref.hash);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!os) throw FlowError("write failed for '" + path + "'");
}

HeightField load_height_field(const std::string& path, const ReferenceSurface& ref) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FlowError("cannot open '" + path + "'");
    if (read_u64(is) != kMagic) throw FlowError("'" + path + "' is not a height field file");
    if (read_u64(is) != kVersion) throw FlowError("unsupported height field version in '" + path + "'");
    read_u64(is); // kind, informational
    read_u64(is); // dims
    read_u64(is); // n0
    read_u64(is); // n1
    std::uint64_t count = read_u64(is);
    std::uint64_t hash = read_u64(is);
    if (hash != ref.hash || count != static_cast<std::uint64_t>(ref.total_nodes()))
        throw GridMismatch("height field file does not match the reference");
    std::vector<double> values(count);
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw FlowError("truncated height field file '" + path + "'");
    return HeightField{ref.hash, std::move(values)};
}

void export_height_field_csv(const std::string& path, const ReferenceSurface& ref, const HeightField& f) {
    check_field(ref, f);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FlowError("cannot open '" + path + "' for writing");
    os << "s0,s1,value\n";
    char buf[96];
    for (int i = 0; i < ref.grid.n(0); ++i)
        for (int j = 0; j < (ref.grid.dims() == 2 ? ref.grid.n(1) : 1); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", ref.grid.coord(0, i),
                          ref.grid.dims() == 2 ? ref.grid.coord(1, j) : 0.0,
                          f.values[ref.grid.param().index(i, j)]);
            os << buf;
        }
}

} // namespace torusflow
