#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

/* Multivariate total variation (group fused lasso) on signals stored as
 * M-by-N matrices: row m is component m, column k is the sample at time k.
 *
 *        F(x) = 1/2 sum_m ||x_m - y_m||^2 + lambda sum_k ||x_{k+1} - x_k||_2
 *
 * Time indices are 0-based in code. Dual variables u live on the N-1 gaps
 * between consecutive samples and follow the sign convention x = y + L*u,
 * so that a jump x_{k+1} != x_k forces u_k = -lambda (x_{k+1}-x_k)/||.||. */
namespace mvtv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/* Validates a signal: M >= 1, N >= 1, all entries finite. */
void check_signal(const Matrix& y, const char* what = "signal");

/* (Lx)_k = x_{k+1} - x_k, output is M-by-(N-1). Requires N >= 2. */
Matrix first_difference(const Matrix& x);

/* Adjoint of first_difference, output is M-by-(N-1+1):
 * (L*u)_0 = -u_0, (L*u)_{N-1} = u_{N-2}, (L*u)_k = u_{k-1} - u_k. */
Matrix adjoint_difference(const Matrix& u);

/* Dual that makes x = y + L*u hold on the first N-1 samples:
 * u_k = sum_{j<=k} (y_j - x_j). */
Matrix dual_from_primal(const Matrix& x, const Matrix& y);

double group_tv(const Matrix& x);

double primal_objective(const Matrix& x, const Matrix& y, double lambda);

struct DualCertificate {
    Matrix u;                  // M x (N-1)
    std::optional<Matrix> z;   // M x (N-1), nonnegative, ||z_k|| = lambda
};

struct KKTReport {
    double max_primal_residual = 0.0;            // |x - (y + L*u)|
    double max_dual_feasibility_violation = 0.0; // ||u_k|| - lambda on plateaus
    double max_gradient_link_violation = 0.0;    // u_k + lambda dx/||dx|| on jumps
    double max_auxiliary_violation = 0.0;        // componentwise z conditions
    bool pass = false;
};

struct KKTOptions {
    double tol = 1e-6;
    double jump_tol = 1e-9;
};

/* Checks the optimality conditions of (x, u) for F, and the componentwise
 * conditions through z when the certificate carries one. Report only. */
KKTReport verify_kkt(const Matrix& x, const Matrix& y, double lambda,
                     const DualCertificate& certificate,
                     KKTOptions options = {});

}  // namespace mvtv
