#pragma once

#include <cstddef>
#include <span>
#include <variant>

#include <Eigen/Dense>

#include "nlobs/nonlocal_operator.hpp"

namespace nlobs {

/// A = I + dt L_h with a reusable solver: dense Cholesky (or LU for the
/// non-symmetric constant closure) up to `dense_limit` nodes, matrix-free
/// conjugate gradients above.
class ImplicitSystem {
public:
    static constexpr std::size_t dense_limit = 2049;

    ImplicitSystem(const DiscreteOperator& op, double dt, double cg_tol = 1e-13);

    std::size_t size() const { return op_->size(); }
    double dt() const { return dt_; }
    bool dense() const { return dense_; }
    /// Dense A; only available when dense().
    const Eigen::MatrixXd& matrix() const { return A_; }

    void solve(std::span<const double> rhs, std::span<double> out) const;
    void multiply(std::span<const double> x, std::span<double> out) const;

private:
    const DiscreteOperator* op_;
    double dt_;
    double cg_tol_;
    bool dense_ = true;
    Eigen::MatrixXd A_;
    std::variant<std::monostate, Eigen::LLT<Eigen::MatrixXd>, Eigen::PartialPivLU<Eigen::MatrixXd>> factor_;
};

}  // namespace nlobs
