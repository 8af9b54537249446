#pragma once

#include <span>

namespace nlobs {

/// Ordinary least squares line y = intercept + slope * x.
/// `slope_half_width` is two standard errors of the slope (zero when the
/// fit has no residual degrees of freedom).
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_half_width = 0.0;
    int samples = 0;

    double lower() const { return slope - slope_half_width; }
    double upper() const { return slope + slope_half_width; }
    bool within(double lo, double hi) const { return lower() >= lo && upper() <= hi; }
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Fits log(y) = log(C) + p log(x); non-positive samples are skipped.
LineFit fit_power_law(std::span<const double> x, std::span<const double> y);

}  // namespace nlobs
