#pragma once

#include <cstdint>
#include <vector>

#include "mvtv/tv_core.hpp"

namespace mvtv {

struct PiecewiseConstantSignal {
    // index i marks a change between samples i and i+1
    std::vector<std::size_t> breakpoints;
    std::vector<Vector> levels;  // breakpoints.size() + 1 entries
    Matrix x;
};

/* Segment lengths ceil(|g|), g ~ N(12.5, 16.25) (variance), at least 1; each
 * component jumps by s * a at every breakpoint with a ~ N(2, 0.4) (variance)
 * and s = +-1 equiprobable. The first level is 0. */
PiecewiseConstantSignal generate_piecewise(Eigen::Index M, std::size_t N, std::uint64_t seed);

/* y = x + eps, eps i.i.d. centered Gaussian scaled so that
 * 10 log10(var(x) / var(eps)) = snr_db with var(x) the population variance
 * over all entries. snr_db = +inf returns x. */
Matrix add_noise(const Matrix& x, double snr_db, std::uint64_t seed);

/* ||a - b||_F^2 / N */
double mse(const Matrix& a, const Matrix& b);

/* r_i = 1 when some component changes by more than tol between samples i
 * and i+1; the last entry is always 0. */
Vector change_indicator(const Matrix& x, double tol = 1e-9);

/* Taps exp(-(t - (len-1)/2)^2 / (2 sigma^2)), t = 0 .. len-1, scaled to unit
 * sum and then to a peak of 1. */
Vector gaussian_kernel(std::size_t length = 10, double sigma = 3.0);

/* Same-size convolution; tap t lands at offset t - len/2 + 1, values
 * clipped to [0, 1]. */
Vector smooth_indicator(const Vector& r, const Vector& kernel);

/* Weighted Jaccard index of nonnegative vectors; two all-zero vectors give 1. */
double jaccard(const Vector& a, const Vector& b);

double smoothed_jaccard(const Vector& a, const Vector& b, const Vector& kernel = gaussian_kernel());

}  // namespace mvtv
