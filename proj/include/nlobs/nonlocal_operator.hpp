#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nlobs/grid.hpp"

namespace nlobs {

enum class KernelKind { fractional, custom };

/// Radial jump kernel K(y) = c * rho(|y|) * |y|^{-dim-2s}.
///
/// For the fractional family rho == 1 and c is calibrated so that the
/// Fourier symbol at |k| = 1 equals one. Custom kernels tabulate rho at
/// increasing radii and interpolate linearly, holding the end values
/// constant outside the table.
struct KernelSpec {
    double s = 0.25;
    int dim = 1;
    double lambda = 1.0;
    double Lambda = 1.0;
    KernelKind kind = KernelKind::fractional;
    double calibration = 1.0;
    std::vector<double> profile_r;
    std::vector<double> profile_rho;

    double modulation(double r) const;
    /// K at a point of the real line (dim 1) or at radius |y| (dim 2).
    double operator()(double y) const;
    /// Checks lambda |y|^{-dim-2s} <= K(y) <= Lambda |y|^{-dim-2s} at every sample.
    bool sandwich_holds(std::span<const double> ys) const;
};

/// Continuous symbol of the uncalibrated kernel |y|^{-dim-2s}:
/// the integral of (1 - cos(y . e)) |y|^{-dim-2s} over R^dim.
double unit_symbol_integral(double s, int dim);

KernelSpec fractional_kernel(double s, int dim);

/// Kernel c * rho(|y|) |y|^{-1-2s} with rho tabulated at `radii`.
KernelSpec custom_kernel(double s, std::vector<double> radii, std::vector<double> rho,
                         double scale = 1.0);

enum class FarField { zero_extension, constant_extension, periodic };

enum class OperatorPurpose { obstacle, heat };

struct OperatorOptions {
    FarField far_field = FarField::zero_extension;
    /// Largest explicit offset radius; zero means the full grid span.
    double truncation_radius = 0.0;
    OperatorPurpose purpose = OperatorPurpose::obstacle;
};

/// Discretization of Lu(x) = int (u(x) - u(x+y)) K(y) dy on a uniform grid.
///
/// Weights come from integrating K against the piecewise-linear
/// interpolant of u on cells with |y| >= h, plus a second-difference
/// correction on |y| < h. Offsets beyond the grid (or beyond the explicit
/// truncation radius) are folded into per-node exterior masses that act on
/// u(x) minus the far-field value.
class DiscreteOperator {
public:
    DiscreteOperator() = default;

    FarField far_field() const { return far_field_; }
    double spacing() const { return h_; }
    std::size_t size() const { return n_; }
    const KernelSpec& kernel() const { return kernel_; }

    /// Explicit offset count M: offsets 1..M are applied node to node.
    std::size_t truncation_index() const { return m_trunc_; }
    double truncation_radius() const { return static_cast<double>(m_trunc_) * h_; }
    /// Total kernel mass assigned to offsets beyond the truncation radius.
    double tail_coefficient() const { return tail_coefficient_; }

    /// weight(m) for |m| >= 1; symmetric in m. Periodic operators return
    /// the periodized weight for m mod n.
    double weight(std::ptrdiff_t m) const;
    std::span<const double> weights() const { return w_; }

    /// Exterior masses (left, right) at node i: weight of offsets that leave
    /// the explicit stencil on each side. Zero for periodic operators.
    double exterior_left(std::size_t i) const { return ext_left_.empty() ? 0.0 : ext_left_[i]; }
    double exterior_right(std::size_t i) const { return ext_right_.empty() ? 0.0 : ext_right_[i]; }

    /// Diagonal entry of the assembled matrix at node i.
    double diagonal(std::size_t i) const;
    double max_diagonal() const;

    void apply(std::span<const double> u, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> u) const;

    /// Dense matrix of the linear part (far-field values treated as
    /// unknown-dependent for constant_extension).
    Eigen::MatrixXd matrix() const;

private:
    friend DiscreteOperator build_discrete_operator(const KernelSpec&, const GridSpec&,
                                                    const OperatorOptions&);
    friend double symbol_check(const DiscreteOperator&, double);

    KernelSpec kernel_;
    FarField far_field_ = FarField::zero_extension;
    double h_ = 0.0;
    std::size_t n_ = 0;
    std::size_t m_trunc_ = 0;
    double tail_coefficient_ = 0.0;
    double diag_ = 0.0;
    double x_left_ = 0.0;
    std::vector<double> w_;  // w_[m], m = 0..m_trunc_ (w_[0] = 0); periodic: m = 0..n-1
    std::vector<double> ext_left_, ext_right_;
};

DiscreteOperator build_discrete_operator(const KernelSpec& kernel, const GridSpec& grid,
                                         const OperatorOptions& options = {});

std::vector<double> apply_operator(const DiscreteOperator& op, std::span<const double> field);

/// Discrete amplification factor of cos(k x) at x = 0. Periodic operators only.
double symbol_check(const DiscreteOperator& op, double k);

namespace detail {
/// Hat-function weight for offset m >= 1 (singular correction included at m = 1).
double offset_weight(const KernelSpec& kernel, double h, std::size_t m);
/// Sum of offset weights for m >= first (first >= 1).
double weight_tail(const KernelSpec& kernel, double h, std::size_t first);
}  // namespace detail

}  // namespace nlobs
