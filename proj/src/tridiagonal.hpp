// Symmetric tridiagonal eigensolve shared by the transmon and strip code.
#pragma once

#include <Eigen/Dense>

namespace mist::detail {

// Eigen's implicit QL on the raw tridiagonal occasionally exhausts its
// iteration budget on highly symmetric inputs (e.g. the n_g = 0 charge
// matrix). The dense path reduces to a different tridiagonal form first and
// converges in those cases. Returns false if both fail.
inline bool solve_tridiagonal(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, int options,
                              Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver) {
    solver.computeFromTridiagonal(diag, sub, options);
    if (solver.info() == Eigen::Success) return true;
    const Eigen::Index n = diag.size();
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    dense.diagonal() = diag;
    dense.diagonal(-1) = sub;
    dense.diagonal(1) = sub;
    solver.compute(dense, options);
    return solver.info() == Eigen::Success;
}

}  // namespace mist::detail
