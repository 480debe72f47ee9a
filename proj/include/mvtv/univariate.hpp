#pragma once

#include "mvtv/tv_core.hpp"

namespace mvtv {

/* Exact minimizer of 1/2 ||y - x||^2 + lambda sum_k |x_{k+1} - x_k| by a
 * single left-to-right pass over the samples. lambda = 0 returns y. */
Vector tv1d_direct(const Vector& y, double lambda);

/* Same with per-gap weights w (length N-1, nonnegative). */
Vector tv1d_weighted(const Vector& y, const Vector& w);

}  // namespace mvtv
