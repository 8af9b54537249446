#include "nlobs/implicit_system.hpp"

#include <cmath>
#include <vector>

#include "nlobs/error.hpp"

namespace nlobs {

ImplicitSystem::ImplicitSystem(const DiscreteOperator& op, double dt, double cg_tol)
    : op_(&op), dt_(dt), cg_tol_(cg_tol) {
    if (!(dt > 0.0)) throw Error(ErrorKind::parameter, "time step must be positive");
    const auto n = static_cast<Eigen::Index>(op.size());
    dense_ = op.size() <= dense_limit;
    if (!dense_) {
        if (op.far_field() == FarField::constant_extension)
            throw Error(ErrorKind::unsupported,
                        "constant_extension above the dense limit needs a non-symmetric iterative solver");
        return;
    }
    A_ = dt * op.matrix();
    A_.diagonal().array() += 1.0;
    if (op.far_field() == FarField::constant_extension) {
        factor_ = Eigen::PartialPivLU<Eigen::MatrixXd>(A_);
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(A_);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorKind::assembly, "implicit system is not positive definite");
        factor_ = std::move(llt);
    }
    (void)n;
}

void ImplicitSystem::multiply(std::span<const double> x, std::span<double> out) const {
    op_->apply(x, out);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + dt_ * out[i];
}

void ImplicitSystem::solve(std::span<const double> rhs, std::span<double> out) const {
    const auto n = static_cast<Eigen::Index>(size());
    if (rhs.size() != size() || out.size() != size())
        throw Error(ErrorKind::shape, "right-hand side length does not match the system");
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::Map<Eigen::VectorXd> x(out.data(), n);
    if (dense_) {
        if (const auto* llt = std::get_if<Eigen::LLT<Eigen::MatrixXd>>(&factor_))
            x = llt->solve(b);
        else
            x = std::get<Eigen::PartialPivLU<Eigen::MatrixXd>>(factor_).solve(b);
        return;
    }
    // Conjugate gradients; A is symmetric positive definite for these closures.
    x = b;
    std::vector<double> Ax(size()), Ap(size());
    multiply(out, Ax);
    Eigen::VectorXd r = b - Eigen::Map<Eigen::VectorXd>(Ax.data(), n);
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    const double stop = cg_tol_ * cg_tol_ * std::max(1.0, b.squaredNorm());
    for (std::size_t it = 0; it < 10 * size() && rr > stop; ++it) {
        multiply(std::span<const double>(p.data(), size()), Ap);
        Eigen::Map<Eigen::VectorXd> q(Ap.data(), n);
        const double alpha = rr / p.dot(q);
        x += alpha * p;
        r -= alpha * q;
        const double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    if (rr > stop) throw ConvergenceError(std::sqrt(rr), "conjugate gradients did not converge");
}

}  // namespace nlobs
