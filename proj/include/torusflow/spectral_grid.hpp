#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "torusflow/errors.hpp"

namespace torusflow {

/// Uniform periodic grid on the flat parameter torus of a reference boundary.
///
/// Each axis is parametrized by s in [0,1) with n[a] equidistant nodes and a
/// physical length scale[a] per unit parameter (angular axes record 2*pi*r
/// here), so d/d(arclength) = (1/scale[a]) d/ds.
struct ParamGrid {
    int dims = 1;
    std::array<int, 2> n = {16, 1};
    std::array<double, 2> scale = {1.0, 1.0};

    int total() const { return n[0] * n[1]; }
    double spacing(int axis) const { return scale[axis] / n[axis]; }
    /// Surface measure carried by one node (trapezoid weight on a periodic grid).
    double cell_measure() const {
        double m = scale[0] / n[0];
        if (dims == 2) m *= scale[1] / n[1];
        return m;
    }
    double total_measure() const { return cell_measure() * total(); }
    int index(int i, int j = 0) const { return i * n[1] + j; }
    bool operator==(const ParamGrid&) const = default;
};

bool is_power_of_two(int v);

/// FFT engine attached to a ParamGrid: real<->spectral transforms, spectral
/// derivatives with arclength scaling, Fourier multipliers, quadrature and
/// trigonometric evaluation at arbitrary points.
///
/// Transforms are planned once with FFTW_ESTIMATE (deterministic plans) and
/// guarded by a mutex, so a const SpectralGrid can be shared across threads.
class SpectralGrid {
public:
    explicit SpectralGrid(ParamGrid grid);
    ~SpectralGrid();
    SpectralGrid(const SpectralGrid& other) : SpectralGrid(other.grid_) {}
    SpectralGrid(SpectralGrid&&) noexcept;
    SpectralGrid& operator=(SpectralGrid&&) noexcept;
    SpectralGrid& operator=(const SpectralGrid& other) {
        if (this != &other) *this = SpectralGrid(other.grid_);
        return *this;
    }

    const ParamGrid& param() const { return grid_; }
    int dims() const { return grid_.dims; }
    int total() const { return grid_.total(); }
    int n(int axis) const { return grid_.n[axis]; }
    double scale(int axis) const { return grid_.scale[axis]; }

    /// Parameter coordinate in [0,1) of node i along an axis.
    double coord(int axis, int i) const { return static_cast<double>(i) / grid_.n[axis]; }

    /// Number of stored (Hermitian-reduced) spectral coefficients.
    int spectral_size() const { return nc_total_; }

    /// Integer frequency of stored coefficient index along each axis.
    int freq0(int idx) const;
    int freq1(int idx) const;

    /// Normalized Fourier coefficients (forward transform divided by N).
    std::vector<std::complex<double>> to_spectral(const std::vector<double>& f) const;
    /// Inverse of to_spectral.
    std::vector<double> from_spectral(const std::vector<std::complex<double>>& c) const;

    /// Mixed spectral derivative d^{ox+oy} f / d(arclength_0)^{ox} d(arclength_1)^{oy}.
    /// Nyquist modes are zeroed when the order along an axis is odd.
    std::vector<double> derivative(const std::vector<double>& f, int ox, int oy = 0) const;

    /// Applies a real multiplier m(lambda) per mode, with lambda = |xi|^2 the
    /// (nonnegative) Laplace-Beltrami eigenvalue of the mode at u = 0.
    std::vector<double> apply_multiplier(const std::vector<double>& f,
                                         const std::function<double(double)>& m) const;

    /// Laplace eigenvalue |xi|^2 of stored coefficient idx, xi_a = 2*pi*k_a/scale_a.
    double laplace_eigenvalue(int idx) const;

    /// Translates f by ds (in parameter units) along each axis, spectrally exact.
    std::vector<double> shift(const std::vector<double>& f, double ds0, double ds1 = 0.0) const;

    /// Evaluates the trigonometric interpolant at an arbitrary parameter point.
    double eval(const std::vector<std::complex<double>>& c, double s0, double s1 = 0.0) const;

    /// Trapezoid quadrature: integral over the reference boundary patch.
    double integrate(const std::vector<double>& f) const;
    double mean(const std::vector<double>& f) const;

    /// Geodesic distance on the scaled flat torus between nodes a and b.
    double node_distance(int a, int b) const;

private:
    ParamGrid grid_;
    int nc_total_ = 0;
    int nc1_ = 0; // stored coefficients along the last axis
    struct Plans; // FFTW plans, buffers and their execution mutex
    std::unique_ptr<Plans> plans_;
};

/// Kahan-compensated sum; quadratures stay near machine precision at any n.
double stable_sum(const std::vector<double>& v);

} // namespace torusflow
