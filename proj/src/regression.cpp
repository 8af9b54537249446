#include "nlobs/regression.hpp"

#include <cmath>
#include <vector>

namespace nlobs {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    LineFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    fit.samples = static_cast<int>(n);
    if (n < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            sse += r * r;
        }
        const double sigma2 = sse / static_cast<double>(n - 2);
        fit.slope_half_width = 2.0 * std::sqrt(sigma2 / sxx);
    }
    return fit;
}

LineFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx, ly;
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return fit_line(lx, ly);
}

}  // namespace nlobs
