#include "torusflow/spectral_grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

namespace torusflow {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

double stable_sum(const std::vector<double>& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

struct SpectralGrid::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double* real_buf = nullptr;
    fftw_complex* cplx_buf = nullptr;
    std::mutex mutex;

    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
        if (real_buf) fftw_free(real_buf);
        if (cplx_buf) fftw_free(cplx_buf);
    }
};

SpectralGrid::SpectralGrid(ParamGrid grid) : grid_(grid) {
    if (grid_.dims != 1 && grid_.dims != 2)
        throw FlowError("parameter torus must be 1- or 2-dimensional");
    for (int a = 0; a < grid_.dims; ++a) {
        if (grid_.n[a] < 16 || !is_power_of_two(grid_.n[a]))
            throw FlowError("grid resolution must be a power of two >= 16");
        if (!(grid_.scale[a] > 0.0)) throw FlowError("axis scale must be positive");
    }
    if (grid_.dims == 1) {
        grid_.n[1] = 1;
        grid_.scale[1] = 1.0;
        nc1_ = grid_.n[0] / 2 + 1;
        nc_total_ = nc1_;
    } else {
        nc1_ = grid_.n[1] / 2 + 1;
        nc_total_ = grid_.n[0] * nc1_;
    }

    plans_ = std::make_unique<Plans>();
    plans_->real_buf = fftw_alloc_real(grid_.total());
    plans_->cplx_buf = fftw_alloc_complex(nc_total_);

    std::lock_guard<std::mutex> lock(planner_mutex());
    if (grid_.dims == 1) {
        plans_->fwd = fftw_plan_dft_r2c_1d(grid_.n[0], plans_->real_buf, plans_->cplx_buf, FFTW_ESTIMATE);
        plans_->bwd = fftw_plan_dft_c2r_1d(grid_.n[0], plans_->cplx_buf, plans_->real_buf, FFTW_ESTIMATE);
    } else {
        plans_->fwd = fftw_plan_dft_r2c_2d(grid_.n[0], grid_.n[1], plans_->real_buf, plans_->cplx_buf, FFTW_ESTIMATE);
        plans_->bwd = fftw_plan_dft_c2r_2d(grid_.n[0], grid_.n[1], plans_->cplx_buf, plans_->real_buf, FFTW_ESTIMATE);
    }
    if (!plans_->fwd || !plans_->bwd) throw FlowError("FFTW plan creation failed");
}

SpectralGrid::~SpectralGrid() = default;
SpectralGrid::SpectralGrid(SpectralGrid&&) noexcept = default;
SpectralGrid& SpectralGrid::operator=(SpectralGrid&&) noexcept = default;

int SpectralGrid::freq0(int idx) const {
    if (grid_.dims == 1) return idx;
    int k0 = idx / nc1_;
    return k0 <= grid_.n[0] / 2 ? k0 : k0 - grid_.n[0];
}

int SpectralGrid::freq1(int idx) const {
    if (grid_.dims == 1) return 0;
    return idx % nc1_;
}

std::vector<std::complex<double>> SpectralGrid::to_spectral(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != grid_.total()) throw GridMismatch("field size does not match grid");
    std::vector<std::complex<double>> out(nc_total_);
    std::lock_guard<std::mutex> lock(plans_->mutex);
    std::copy(f.begin(), f.end(), plans_->real_buf);
    fftw_execute(plans_->fwd);
    const double inv_n = 1.0 / grid_.total();
    for (int i = 0; i < nc_total_; ++i)
        out[i] = std::complex<double>(plans_->cplx_buf[i][0], plans_->cplx_buf[i][1]) * inv_n;
    return out;
}

std::vector<double> SpectralGrid::from_spectral(const std::vector<std::complex<double>>& c) const {
    if (static_cast<int>(c.size()) != nc_total_) throw GridMismatch("coefficient size does not match grid");
    std::vector<double> out(grid_.total());
    std::lock_guard<std::mutex> lock(plans_->mutex);
    for (int i = 0; i < nc_total_; ++i) {
        plans_->cplx_buf[i][0] = c[i].real();
        plans_->cplx_buf[i][1] = c[i].imag();
    }
    fftw_execute(plans_->bwd);
    std::copy(plans_->real_buf, plans_->real_buf + grid_.total(), out.begin());
    return out;
}

std::vector<double> SpectralGrid::derivative(const std::vector<double>& f, int ox, int oy) const {
    auto c = to_spectral(f);
    const double two_pi = 2.0 * std::numbers::pi;
    const std::complex<double> i_unit(0.0, 1.0);
    for (int idx = 0; idx < nc_total_; ++idx) {
        int k0 = freq0(idx), k1 = freq1(idx);
        // Nyquist has no well-defined sign for odd derivative orders.
        bool drop = (ox % 2 == 1 && grid_.dims >= 1 && std::abs(k0) == grid_.n[0] / 2) ||
                    (oy % 2 == 1 && grid_.dims == 2 && k1 == grid_.n[1] / 2);
        if (drop) {
            c[idx] = 0.0;
            continue;
        }
        std::complex<double> m = 1.0;
        if (ox > 0) m *= std::pow(i_unit * (two_pi * k0 / grid_.scale[0]), ox);
        if (oy > 0) m *= std::pow(i_unit * (two_pi * k1 / grid_.scale[1]), oy);
        c[idx] *= m;
    }
    return from_spectral(c);
}

double SpectralGrid::laplace_eigenvalue(int idx) const {
    const double two_pi = 2.0 * std::numbers::pi;
    double xi0 = two_pi * freq0(idx) / grid_.scale[0];
    double xi1 = grid_.dims == 2 ? two_pi * freq1(idx) / grid_.scale[1] : 0.0;
    return xi0 * xi0 + xi1 * xi1;
}

std::vector<double> SpectralGrid::apply_multiplier(const std::vector<double>& f,
                                                   const std::function<double(double)>& m) const {
    auto c = to_spectral(f);
    for (int idx = 0; idx < nc_total_; ++idx) c[idx] *= m(laplace_eigenvalue(idx));
    return from_spectral(c);
}

std::vector<double> SpectralGrid::shift(const std::vector<double>& f, double ds0, double ds1) const {
    auto c = to_spectral(f);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int idx = 0; idx < nc_total_; ++idx) {
        int k0 = freq0(idx), k1 = freq1(idx);
        // shifted(s) = f(s - ds); self-conjugate Nyquist bins only admit a
        // real (cosine) phase factor
        std::complex<double> m = 1.0;
        double p0 = -two_pi * k0 * ds0;
        m *= (std::abs(k0) == grid_.n[0] / 2) ? std::complex<double>(std::cos(p0), 0.0)
                                              : std::complex<double>(std::cos(p0), std::sin(p0));
        if (grid_.dims == 2) {
            double p1 = -two_pi * k1 * ds1;
            m *= (k1 == grid_.n[1] / 2) ? std::complex<double>(std::cos(p1), 0.0)
                                        : std::complex<double>(std::cos(p1), std::sin(p1));
        }
        c[idx] *= m;
    }
    return from_spectral(c);
}

double SpectralGrid::eval(const std::vector<std::complex<double>>& c, double s0, double s1) const {
    if (static_cast<int>(c.size()) != nc_total_) throw GridMismatch("coefficient size does not match grid");
    const double two_pi = 2.0 * std::numbers::pi;
    if (grid_.dims == 1) {
        double acc = c[0].real();
        for (int k = 1; k < nc1_; ++k) {
            double w = (k == grid_.n[0] / 2) ? 1.0 : 2.0;
            double phase = two_pi * k * s0;
            acc += w * (c[k].real() * std::cos(phase) - c[k].imag() * std::sin(phase));
        }
        return acc;
    }
    std::complex<double> acc = 0.0;
    for (int idx = 0; idx < nc_total_; ++idx) {
        int k0 = freq0(idx), k1 = freq1(idx);
        double w = (k1 == 0 || k1 == grid_.n[1] / 2) ? 1.0 : 2.0;
        double phase = two_pi * (k0 * s0 + k1 * s1);
        // columns k1 in {0, n1/2} are Hermitian in k0 and sum to a real value
        if (w == 1.0) {
            acc += c[idx] * std::complex<double>(std::cos(phase), std::sin(phase));
        } else {
            acc += w * (c[idx] * std::complex<double>(std::cos(phase), std::sin(phase))).real();
        }
    }
    return acc.real();
}

double SpectralGrid::integrate(const std::vector<double>& f) const {
    if (static_cast<int>(f.size()) != grid_.total()) throw GridMismatch("field size does not match grid");
    return stable_sum(f) * grid_.cell_measure();
}

double SpectralGrid::mean(const std::vector<double>& f) const {
    return integrate(f) / grid_.total_measure();
}

double SpectralGrid::node_distance(int a, int b) const {
    int ai = a / grid_.n[1], aj = a % grid_.n[1];
    int bi = b / grid_.n[1], bj = b % grid_.n[1];
    auto wrap = [](double d) { return d > 0.5 ? 1.0 - d : d; };
    double d0 = wrap(std::abs(static_cast<double>(ai - bi)) / grid_.n[0]) * grid_.scale[0];
    if (grid_.dims == 1) return d0;
    double d1 = wrap(std::abs(static_cast<double>(aj - bj)) / grid_.n[1]) * grid_.scale[1];
    return std::hypot(d0, d1);
}

} // namespace torusflow
