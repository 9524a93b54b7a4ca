#pragma once

#include <vector>

#include "torusflow/errors.hpp"

namespace torusflow {

/// Exponential fit y ~ C exp(-c t) over a time window, by least squares on
/// log y.  rate > 0 means decay.
struct RateFit {
    double t0 = 0.0, t1 = 0.0;
    double rate = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    int samples = 0;
};

RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& values,
                 double t0, double t1, int min_samples = 10);

} // namespace torusflow
