#include "mvtv/tv_core.hpp"

#include <algorithm>
#include <cmath>

namespace mvtv {

void check_signal(const Matrix& y, const char* what)
{
    if (y.rows() < 1 || y.cols() < 1)
        throw DimensionError(std::string(what) + ": needs at least one component and one sample");
    if (!y.allFinite())
        throw InvalidArgument(std::string(what) + ": entries must be finite");
}

Matrix first_difference(const Matrix& x)
{
    if (x.cols() < 2)
        throw DimensionError("first_difference: need at least two samples");
    const Eigen::Index n = x.cols();
    return x.rightCols(n - 1) - x.leftCols(n - 1);
}

Matrix adjoint_difference(const Matrix& u)
{
    const Eigen::Index m = u.rows(), n = u.cols() + 1;
    Matrix out = Matrix::Zero(m, n);
    if (n == 1) return out;
    out.leftCols(n - 1) -= u;
    out.rightCols(n - 1) += u;
    return out;
}

Matrix dual_from_primal(const Matrix& x, const Matrix& y)
{
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("dual_from_primal: shape mismatch between x and y");
    const Eigen::Index n = y.cols();
    Matrix u(y.rows(), std::max<Eigen::Index>(n - 1, 0));
    Vector acc = Vector::Zero(y.rows());
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        acc += y.col(k) - x.col(k);
        u.col(k) = acc;
    }
    return u;
}

double group_tv(const Matrix& x)
{
    if (x.cols() < 2) return 0.0;
    return first_difference(x).colwise().norm().sum();
}

double primal_objective(const Matrix& x, const Matrix& y, double lambda)
{
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("primal_objective: shape mismatch between x and y");
    if (!(lambda > 0.0))
        throw InvalidArgument("primal_objective: lambda must be positive");
    return 0.5 * (x - y).squaredNorm() + lambda * group_tv(x);
}

KKTReport verify_kkt(const Matrix& x, const Matrix& y, double lambda,
                     const DualCertificate& certificate, KKTOptions options)
{
    const Eigen::Index M = y.rows(), N = y.cols();
    if (x.rows() != M || x.cols() != N)
        throw DimensionError("verify_kkt: x and y differ in shape");
    const Matrix& u = certificate.u;
    if (u.rows() != M || u.cols() != N - 1)
        throw DimensionError("verify_kkt: dual must be M x (N-1)");
    if (certificate.z && (certificate.z->rows() != M || certificate.z->cols() != N - 1))
        throw DimensionError("verify_kkt: auxiliary variable must be M x (N-1)");

    KKTReport report;
    report.max_primal_residual = (x - y - adjoint_difference(u)).cwiseAbs().maxCoeff();

    for (Eigen::Index k = 0; k + 1 < N; ++k) {
        const Vector dx = x.col(k + 1) - x.col(k);
        const double jump = dx.norm();
        if (jump > options.jump_tol) {
            const double link = (u.col(k) + lambda * dx / jump).norm();
            report.max_gradient_link_violation = std::max(report.max_gradient_link_violation, link);
        } else {
            const double excess = u.col(k).norm() - lambda;
            report.max_dual_feasibility_violation =
                std::max(report.max_dual_feasibility_violation, excess);
        }

        if (!certificate.z) continue;
        const auto z = certificate.z->col(k);
        double aux = std::abs(z.norm() - lambda);
        for (Eigen::Index m = 0; m < M; ++m) {
            aux = std::max(aux, -z(m));
            const double d = dx(m);
            if (d < -options.jump_tol)
                aux = std::max(aux, std::abs(u(m, k) - z(m)));
            else if (d > options.jump_tol)
                aux = std::max(aux, std::abs(u(m, k) + z(m)));
            else
                aux = std::max(aux, std::abs(u(m, k)) - z(m));
        }
        report.max_auxiliary_violation = std::max(report.max_auxiliary_violation, aux);
    }

    report.pass = report.max_primal_residual <= options.tol
        && report.max_dual_feasibility_violation <= options.tol
        && report.max_gradient_link_violation <= options.tol
        && report.max_auxiliary_violation <= options.tol;
    return report;
}

}  // namespace mvtv
