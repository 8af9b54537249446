#pragma once

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

namespace nlobs::testing {

// Independent brute-force oracle for int (1 - cos(k y)) c |y|^{-1-2s} dy.
inline double symbol_brute(double c, double s, double k) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto integrand = [&](double y) {
        if (k * y < 1e-6) return 0.5 * k * k * std::pow(y, 1.0 - 2.0 * s);
        return (1.0 - std::cos(k * y)) * std::pow(y, -1.0 - 2.0 * s);
    };
    const double near = ts.integrate(integrand, 0.0, 1.0);
    boost::math::quadrature::ooura_fourier_cos<double> oc;
    const double far_cos = oc.integrate([&](double y) { return std::pow(y + 1.0, -1.0 - 2.0 * s); }, k).first;
    // int_1^inf cos(k y) y^{-1-2s} dy = cos(k) I_c - sin(k) I_s with y = 1 + x
    boost::math::quadrature::ooura_fourier_sin<double> os;
    const double far_sin = os.integrate([&](double y) { return std::pow(y + 1.0, -1.0 - 2.0 * s); }, k).first;
    const double far = 1.0 / (2.0 * s) - (std::cos(k) * far_cos - std::sin(k) * far_sin);
    return 2.0 * c * (near + far);
}

}  // namespace nlobs::testing
