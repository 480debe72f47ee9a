#include "mvtv/univariate.hpp"

#include <cmath>

#include "mvtv/streaming.hpp"

namespace mvtv {

Vector tv1d_direct(const Vector& y, double lambda)
{
    if (y.size() == 0) throw DimensionError("tv1d_direct: empty input");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("tv1d_direct: lambda must be finite and nonnegative");
    if (y.size() < 2) return y;
    return tv1d_weighted(y, Vector::Constant(y.size() - 1, lambda));
}

Vector tv1d_weighted(const Vector& y, const Vector& w)
{
    if (y.size() == 0) throw DimensionError("tv1d_weighted: empty input");
    if (w.size() != std::max<Eigen::Index>(y.size() - 1, 0))
        throw DimensionError("tv1d_weighted: weights must have length N-1");
    if (!w.allFinite() || (w.array() < 0.0).any())
        throw InvalidArgument("tv1d_weighted: weights must be finite and nonnegative");
    const Matrix x = solve_weighted(y.transpose(), w.transpose());
    return x.row(0).transpose();
}

}  // namespace mvtv
