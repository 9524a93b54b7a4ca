#include "torusflow/fitting.hpp"

#include <algorithm>
#include <cmath>

namespace torusflow {

RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& values,
                 double t0, double t1, int min_samples) {
    if (times.size() != values.size()) throw FlowError("fit_rate: size mismatch");
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 || times[i] > t1) continue;
        if (!(values[i] > 0.0)) throw FlowError("fit_rate: nonpositive value inside the window");
        ts.push_back(times[i]);
        ys.push_back(std::log(values[i]));
    }
    const int n = static_cast<int>(ts.size());
    if (n < min_samples) throw FlowError("fit_rate: fewer than the required samples in the window");

    double st = 0, sy = 0, stt = 0, sty = 0;
    for (int i = 0; i < n; ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw FlowError("fit_rate: degenerate time window");
    const double slope = (n * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / n;

    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (int i = 0; i < n; ++i) {
        double fit = intercept + slope * ts[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    RateFit out;
    out.t0 = t0;
    out.t1 = t1;
    out.rate = -slope;
    out.prefactor = std::exp(intercept);
    out.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    out.samples = n;
    return out;
}

} // namespace torusflow
