#pragma once

#include <cstddef>
#include <vector>

#include "mvtv/tv_core.hpp"

namespace mvtv {

struct ExactOptions {
    double rel_tol = 1e-10;
    std::size_t max_iter = 200000;
    // momentum on the projected dual iteration, restarted when the objective rises
    bool momentum = true;
    // Newton refinement of the plateau levels found by the dual iteration
    bool polish = true;
};

struct ExactResult {
    Matrix x;
    Matrix u;  // M x (N-1), ||u_k|| <= lambda
    std::size_t iterations = 0;
    bool converged = false;
    double last_rel_change = 0.0;
    bool polished = false;
};

/* Projected gradient on the dual: u <- P_ball(u - tau L(y + L*u)), tau = 1/4,
 * x = y + L*u. Stops on the relative change of the primal objective.
 * warm_start, when given, must be M x (N-1). */
ExactResult solve_exact(const Matrix& y, double lambda, ExactOptions options = {},
                        const Matrix* warm_start = nullptr);

/* Exact solution on columns max(0, k-K+1) .. k; returns the estimate at k. */
Vector solve_windowed(const Matrix& y, double lambda, std::size_t K, std::size_t k,
                      ExactOptions options = {});

/* Windowed estimates for every k, optionally warm-starting each window with
 * the previous window's dual shifted by one gap. Column k of x holds the
 * estimate at k; change[k] is the last change point (index of the sample
 * before the jump) of window k's solution, or -1 if it has none. */
struct WindowedRun {
    Matrix x;
    std::vector<long> last_change;
    std::vector<double> seconds;  // wall time per window
};

WindowedRun run_windowed(const Matrix& y, double lambda, std::size_t K,
                         ExactOptions options = {}, bool warm_start = false);

}  // namespace mvtv
