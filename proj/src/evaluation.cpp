#include "mvtv/evaluation.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mvtv/random.hpp"

namespace mvtv {

PiecewiseConstantSignal generate_piecewise(Eigen::Index M, std::size_t N, std::uint64_t seed)
{
    if (M < 1 || N < 1) throw DimensionError("generate_piecewise: M and N must be positive");
    Rng rng = make_rng(seed, 0x5e6);
    std::normal_distribution<double> length(12.5, std::sqrt(16.25));
    std::normal_distribution<double> amplitude(2.0, std::sqrt(0.4));
    std::bernoulli_distribution flip(0.5);

    PiecewiseConstantSignal sig;
    sig.x.resize(M, static_cast<Eigen::Index>(N));
    Vector level = Vector::Zero(M);
    std::size_t pos = 0;
    while (true) {
        const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(length(rng)))));
        const std::size_t end = std::min(N, pos + len);
        sig.levels.push_back(level);
        for (std::size_t j = pos; j < end; ++j) sig.x.col(static_cast<Eigen::Index>(j)) = level;
        if (end == N) break;
        sig.breakpoints.push_back(end - 1);
        for (Eigen::Index m = 0; m < M; ++m)
            level(m) += (flip(rng) ? 1.0 : -1.0) * amplitude(rng);
        pos = end;
    }
    return sig;
}

Matrix add_noise(const Matrix& x, double snr_db, std::uint64_t seed)
{
    check_signal(x, "add_noise");
    if (std::isinf(snr_db) && snr_db > 0) return x;
    if (!std::isfinite(snr_db)) throw InvalidArgument("add_noise: snr must be finite or +inf");
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    if (!(var > 0.0))
        throw InvalidArgument("add_noise: constant signal has no defined SNR");
    const double sd = std::sqrt(var / std::pow(10.0, snr_db / 10.0));

    Rng rng = make_rng(seed, 0x7015e);
    std::normal_distribution<double> noise(0.0, sd);
    Matrix y = x;
    for (Eigen::Index k = 0; k < y.cols(); ++k)
        for (Eigen::Index m = 0; m < y.rows(); ++m) y(m, k) += noise(rng);
    return y;
}

double mse(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("mse: shape mismatch");
    if (a.cols() == 0) throw DimensionError("mse: empty signals");
    return (a - b).squaredNorm() / static_cast<double>(a.cols());
}

Vector change_indicator(const Matrix& x, double tol)
{
    Vector r = Vector::Zero(x.cols());
    for (Eigen::Index i = 0; i + 1 < x.cols(); ++i)
        if ((x.col(i + 1) - x.col(i)).cwiseAbs().maxCoeff() > tol) r(i) = 1.0;
    return r;
}

Vector gaussian_kernel(std::size_t length, double sigma)
{
    if (length < 1 || !(sigma > 0.0))
        throw InvalidArgument("gaussian_kernel: need a positive length and sigma");
    Vector h(static_cast<Eigen::Index>(length));
    const double c = 0.5 * static_cast<double>(length - 1);
    for (Eigen::Index t = 0; t < h.size(); ++t) {
        const double d = static_cast<double>(t) - c;
        h(t) = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    h /= h.sum();
    return h / h.maxCoeff();
}

Vector smooth_indicator(const Vector& r, const Vector& kernel)
{
    const Eigen::Index n = r.size(), L = kernel.size();
    const Eigen::Index shift = L / 2 - 1;
    Vector out = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (r(i) == 0.0) continue;
        for (Eigen::Index t = 0; t < L; ++t) {
            const Eigen::Index j = i + t - shift;
            if (j >= 0 && j < n) out(j) += kernel(t) * r(i);
        }
    }
    return out.cwiseMax(0.0).cwiseMin(1.0);
}

double jaccard(const Vector& a, const Vector& b)
{
    if (a.size() != b.size()) throw DimensionError("jaccard: length mismatch");
    if ((a.array() < 0.0).any() || (b.array() < 0.0).any())
        throw InvalidArgument("jaccard: entries must be nonnegative");
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        num += std::min(a(i), b(i));
        if (a(i) > 0.0 && b(i) > 0.0) den += 0.5 * (a(i) + b(i));
        else den += a(i) + b(i);
    }
    if (den == 0.0) return 1.0;
    return num / den;
}

double smoothed_jaccard(const Vector& a, const Vector& b, const Vector& kernel)
{
    return jaccard(smooth_indicator(a, kernel), smooth_indicator(b, kernel));
}

}  // namespace mvtv
