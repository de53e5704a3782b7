#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "itherm/errors.hpp"

namespace itherm {
namespace stats {

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Unbiased sample variance (divides by n-1).
inline double variance(std::span<const double> xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

inline double second_moment(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return s / static_cast<double>(xs.size());
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope*x + intercept.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::invalid_argument, "linear_fit needs >= 2 matched points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorCode::invalid_argument, "linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

inline double normal_cdf(double x, double mu = 0.0, double sigma = 1.0) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

/// Kolmogorov-Smirnov statistic sup_x |F_n(x) - F(x)| for an arbitrary
/// continuous CDF F. Sorts a copy of the sample.
inline double ks_statistic(std::span<const double> sample,
                           const std::function<double(double)>& cdf) {
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Log-log power-law fit: value = amplitude * abscissa^exponent.
/// Requires strictly positive data.
inline LinearFit log_log_fit(std::span<const double> abscissa, std::span<const double> value) {
    std::vector<double> lx(abscissa.size()), ly(value.size());
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        if (abscissa[i] <= 0.0 || value[i] <= 0.0)
            throw Error(ErrorCode::invalid_argument, "log_log_fit requires positive data");
        lx[i] = std::log(abscissa[i]);
        ly[i] = std::log(value[i]);
    }
    return linear_fit(lx, ly);
}

}  // namespace stats
}  // namespace itherm
