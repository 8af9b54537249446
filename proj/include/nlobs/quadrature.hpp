#pragma once

#include <array>
#include <cstddef>

namespace nlobs::quad {

/// Gauss-Legendre rule on [-1, 1] with N nodes, computed once per N.
template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    static const GaussLegendre& get();

    template <typename F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) sum += weights[i] * f(mid + half * nodes[i]);
        return sum * half;
    }
};

void legendre_rule(std::size_t n, double* nodes, double* weights);

template <std::size_t N>
const GaussLegendre<N>& GaussLegendre<N>::get() {
    static const GaussLegendre rule = [] {
        GaussLegendre r;
        legendre_rule(N, r.nodes.data(), r.weights.data());
        return r;
    }();
    return rule;
}

/// Composite rule: `panels` equal panels of an N-point Gauss-Legendre rule.
template <std::size_t N, typename F>
double composite(F&& f, double a, double b, std::size_t panels) {
    const auto& rule = GaussLegendre<N>::get();
    const double w = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + w * static_cast<double>(p);
        sum += rule.integrate(f, lo, lo + w);
    }
    return sum;
}

}  // namespace nlobs::quad
