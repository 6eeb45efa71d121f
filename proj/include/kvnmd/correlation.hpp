#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kvnmd {

// Velocity autocorrelation sampled on a uniform time stride.
//
// `c` is the normalized series with c[0] == 1; `c0` is the raw t = 0 value
// <v(0)^2> so the physical correlation is c0 * c[k].  State-vector readouts
// additionally keep the complex overlaps they were computed from in `overlap`
// (empty for trajectory averages, which are real by construction).
struct CorrelationSeries {
    double dt = 0.0;
    double c0 = 0.0;
    std::vector<double> c;
    std::vector<std::complex<double>> overlap;

    std::size_t size() const { return c.size(); }
};

// Cumulative trapezoid of uniformly sampled values; out[0] == 0.
inline std::vector<double> running_integral(double dt, const std::vector<double>& values) {
    std::vector<double> out(values.size(), 0.0);
    for (std::size_t k = 1; k < values.size(); ++k)
        out[k] = out[k - 1] + 0.5 * dt * (values[k - 1] + values[k]);
    return out;
}

// Running transport coefficient D(t) = integral of the raw correlation.
inline std::vector<double> gk_running(const CorrelationSeries& s) {
    std::vector<double> d = running_integral(s.dt, s.c);
    for (double& v : d) v *= s.c0;
    return d;
}

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

// Mean and spread of samples whose times fall in [t_lo, t_hi].
inline WindowStats window_stats(double dt, const std::vector<double>& values, double t_lo,
                                double t_hi) {
    WindowStats w;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double t = dt * static_cast<double>(k);
        if (t < t_lo || t > t_hi) continue;
        sum += values[k];
        sum2 += values[k] * values[k];
        ++w.count;
    }
    if (w.count == 0) throw std::invalid_argument("window_stats: empty window");
    w.mean = sum / static_cast<double>(w.count);
    const double var = sum2 / static_cast<double>(w.count) - w.mean * w.mean;
    w.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
    return w;
}

}  // namespace kvnmd
