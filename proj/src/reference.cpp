#include "mvtv/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

namespace mvtv {

namespace {

void project_ball(Matrix& u, double lambda)
{
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const double n = u.col(k).norm();
        if (n > lambda) u.col(k) *= lambda / n;
    }
}

// out = y + L*u without temporaries
void primal_from_dual(const Matrix& y, const Matrix& u, Matrix& out)
{
    const Eigen::Index n = y.cols();
    out = y;
    if (n < 2) return;
    out.leftCols(n - 1) -= u;
    out.rightCols(n - 1) += u;
}

double dual_objective(const Matrix& x) { return 0.5 * x.squaredNorm(); }

/* Levels of the plateaus between fixed jump positions, found by Newton's
 * method on the reduced objective. Segments whose levels merge are fused. */
class PlateauPolish {
public:
    PlateauPolish(const Matrix& y, double lambda) : y_(y), lambda_(lambda) {}

    std::optional<Matrix> run(const Matrix& x0, const std::vector<Eigen::Index>& jumps);

private:
    void build(const std::vector<Eigen::Index>& starts, const Matrix& x0);
    double reduced_objective(const Matrix& c) const;
    bool step();
    Matrix expand() const;

    const Matrix& y_;
    double lambda_;
    std::vector<Eigen::Index> starts_;
    Vector count_;
    Matrix mean_, c_;
};

void PlateauPolish::build(const std::vector<Eigen::Index>& starts, const Matrix& x0)
{
    starts_ = starts;
    const auto S = static_cast<Eigen::Index>(starts.size());
    count_.resize(S);
    mean_.resize(y_.rows(), S);
    c_.resize(y_.rows(), S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index a = starts_[static_cast<std::size_t>(s)];
        const Eigen::Index b = s + 1 < S ? starts_[static_cast<std::size_t>(s + 1)] : y_.cols();
        count_(s) = static_cast<double>(b - a);
        mean_.col(s) = y_.middleCols(a, b - a).rowwise().mean();
        c_.col(s) = x0.middleCols(a, b - a).rowwise().mean();
    }
}

double PlateauPolish::reduced_objective(const Matrix& c) const
{
    double f = 0.0;
    for (Eigen::Index s = 0; s < c.cols(); ++s) {
        f += 0.5 * count_(s) * (c.col(s) - mean_.col(s)).squaredNorm();
        if (s + 1 < c.cols()) f += lambda_ * (c.col(s + 1) - c.col(s)).norm();
    }
    return f;
}

Matrix PlateauPolish::expand() const
{
    Matrix x(y_.rows(), y_.cols());
    const auto S = static_cast<Eigen::Index>(starts_.size());
    for (Eigen::Index s = 0; s < S; ++s) {
        const Eigen::Index a = starts_[static_cast<std::size_t>(s)];
        const Eigen::Index b = s + 1 < S ? starts_[static_cast<std::size_t>(s + 1)] : y_.cols();
        x.middleCols(a, b - a) = c_.col(s).replicate(1, b - a);
    }
    return x;
}

// one damped Newton step; false once the gradient has vanished
bool PlateauPolish::step()
{
    const Eigen::Index M = y_.rows(), S = c_.cols();
    const Matrix I = Matrix::Identity(M, M);

    std::vector<Vector> e(static_cast<std::size_t>(std::max<Eigen::Index>(S - 1, 0)));
    std::vector<Matrix> P(e.size());
    for (Eigen::Index s = 0; s + 1 < S; ++s) {
        const Vector d = c_.col(s + 1) - c_.col(s);
        const double r = d.norm();
        e[static_cast<std::size_t>(s)] = d / r;
        P[static_cast<std::size_t>(s)] = (I - d * d.transpose() / (r * r)) / r;
    }

    Matrix g(M, S);
    for (Eigen::Index s = 0; s < S; ++s) {
        g.col(s) = count_(s) * (c_.col(s) - mean_.col(s));
        if (s > 0) g.col(s) += lambda_ * e[static_cast<std::size_t>(s - 1)];
        if (s + 1 < S) g.col(s) -= lambda_ * e[static_cast<std::size_t>(s)];
    }
    const double scale = 1.0 + mean_.cwiseAbs().maxCoeff() * count_.maxCoeff() + lambda_;
    if (g.cwiseAbs().maxCoeff() <= 1e-14 * scale) return false;

    // block tridiagonal elimination; off-diagonal blocks are -lambda P_s
    std::vector<Eigen::LLT<Matrix>> fac(static_cast<std::size_t>(S));
    std::vector<Matrix> W(static_cast<std::size_t>(S));
    Matrix rt(M, S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const auto ss = static_cast<std::size_t>(s);
        Matrix D = count_(s) * I;
        if (s > 0) D += lambda_ * P[ss - 1];
        if (s + 1 < S) D += lambda_ * P[ss];
        Vector r = -g.col(s);
        if (s > 0) {
            const Matrix B = -lambda_ * P[ss - 1];
            D -= B * W[ss - 1];
            r -= B * fac[ss - 1].solve(Vector(rt.col(s - 1)));
        }
        fac[ss].compute(D);
        if (fac[ss].info() != Eigen::Success) return false;
        if (s + 1 < S) W[ss] = fac[ss].solve(Matrix(-lambda_ * P[ss]));
        rt.col(s) = r;
    }
    Matrix delta(M, S);
    for (Eigen::Index s = S - 1; s >= 0; --s) {
        const auto ss = static_cast<std::size_t>(s);
        Vector r = rt.col(s);
        if (s + 1 < S) r -= -lambda_ * P[ss] * delta.col(s + 1);
        delta.col(s) = fac[ss].solve(r);
    }

    const double f0 = reduced_objective(c_);
    const double slope = (g.array() * delta.array()).sum();
    double t = 1.0;
    while (t > 1e-12) {
        const Matrix trial = c_ + t * delta;
        if (reduced_objective(trial) <= f0 + 1e-4 * t * slope) {
            c_ = trial;
            return t * delta.cwiseAbs().maxCoeff() > 1e-16 * scale;
        }
        t *= 0.5;
    }
    return false;
}

std::optional<Matrix> PlateauPolish::run(const Matrix& x0, const std::vector<Eigen::Index>& jumps)
{
    std::vector<Eigen::Index> starts{0};
    for (Eigen::Index j : jumps) starts.push_back(j + 1);
    build(starts, x0);

    for (int iter = 0; iter < 200; ++iter) {
        const double tiny = 1e-12 * (1.0 + mean_.cwiseAbs().maxCoeff());
        std::vector<Eigen::Index> kept{0};
        bool merged = false;
        for (Eigen::Index s = 0; s + 1 < c_.cols(); ++s) {
            if ((c_.col(s + 1) - c_.col(s)).norm() <= tiny) merged = true;
            else kept.push_back(starts_[static_cast<std::size_t>(s + 1)]);
        }
        if (merged) {
            const Matrix x = expand();
            build(kept, x);
            continue;
        }
        if (c_.cols() < 2) {
            c_ = mean_;
            break;
        }
        if (!step()) break;
    }
    return expand();
}

std::optional<Matrix> polish(const Matrix& y, double lambda, const Matrix& x, const Matrix& u)
{
    const double best = primal_objective(x, y, lambda);
    for (double slack : {1e-7, 1e-5, 1e-3}) {
        std::vector<Eigen::Index> jumps;
        for (Eigen::Index k = 0; k < u.cols(); ++k)
            if (u.col(k).norm() >= lambda * (1.0 - slack)) jumps.push_back(k);

        PlateauPolish p(y, lambda);
        auto xp = p.run(x, jumps);
        if (!xp) continue;
        const Matrix up = dual_from_primal(*xp, y);
        KKTOptions opt;
        opt.tol = 1e-9 * (1.0 + lambda);
        opt.jump_tol = 1e-12 * (1.0 + xp->cwiseAbs().maxCoeff());
        const KKTReport rep = verify_kkt(*xp, y, lambda, DualCertificate{up, std::nullopt}, opt);
        const double f = primal_objective(*xp, y, lambda);
        if (rep.pass && f <= best + 1e-12 * std::abs(best)) return xp;
    }
    return std::nullopt;
}

}  // namespace

ExactResult solve_exact(const Matrix& y, double lambda, ExactOptions options,
                        const Matrix* warm_start)
{
    check_signal(y, "solve_exact");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("solve_exact: lambda must be finite and nonnegative");
    if (!(options.rel_tol > 0.0))
        throw InvalidArgument("solve_exact: rel_tol must be positive");
    const Eigen::Index M = y.rows(), N = y.cols();

    ExactResult res;
    res.u = Matrix::Zero(M, std::max<Eigen::Index>(N - 1, 0));
    if (warm_start) {
        if (warm_start->rows() != M || warm_start->cols() != res.u.cols())
            throw DimensionError("solve_exact: warm start must be M x (N-1)");
        res.u = *warm_start;
        project_ball(res.u, lambda);
    }
    if (lambda == 0.0 || N < 2) {
        res.u.setZero();
        res.x = y;
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    constexpr double tau = 0.25;
    Matrix& u = res.u;
    Matrix v = u, u_next(M, N - 1), xv(M, N), x(M, N);
    primal_from_dual(y, u, x);
    double obj = primal_objective(x, y, lambda);
    double dual = dual_objective(x);
    double t = 1.0;

    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        primal_from_dual(y, v, xv);
        u_next = v - tau * (xv.rightCols(N - 1) - xv.leftCols(N - 1));
        project_ball(u_next, lambda);
        primal_from_dual(y, u_next, x);
        const double dual_next = dual_objective(x);

        if (options.momentum) {
            if (dual_next > dual) {
                t = 1.0;
                v = u_next;
            } else {
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                v = u_next + ((t - 1.0) / t_next) * (u_next - u);
                t = t_next;
            }
        } else {
            v = u_next;
        }
        u.swap(u_next);
        dual = dual_next;

        const double obj_next = primal_objective(x, y, lambda);
        res.last_rel_change = std::abs(obj_next - obj)
            / std::max(std::abs(obj_next), std::numeric_limits<double>::min());
        obj = obj_next;
        res.iterations = it;
        if (res.last_rel_change <= options.rel_tol) {
            res.converged = true;
            break;
        }
    }
    res.x = x;

    if (options.polish) {
        if (auto xp = polish(y, lambda, res.x, res.u)) {
            res.x = std::move(*xp);
            res.u = dual_from_primal(res.x, y);
            project_ball(res.u, lambda);
            res.polished = true;
        }
    }
    return res;
}

Vector solve_windowed(const Matrix& y, double lambda, std::size_t K, std::size_t k,
                      ExactOptions options)
{
    check_signal(y, "solve_windowed");
    if (K < 1) throw InvalidArgument("solve_windowed: window length must be at least 1");
    if (k >= static_cast<std::size_t>(y.cols()))
        throw DimensionError("solve_windowed: index past the end of the signal");
    const std::size_t a = k + 1 >= K ? k + 1 - K : 0;
    const auto len = static_cast<Eigen::Index>(k - a + 1);
    const ExactResult r = solve_exact(y.middleCols(static_cast<Eigen::Index>(a), len), lambda, options);
    return r.x.col(len - 1);
}

WindowedRun run_windowed(const Matrix& y, double lambda, std::size_t K, ExactOptions options,
                         bool warm_start)
{
    check_signal(y, "run_windowed");
    if (K < 1) throw InvalidArgument("run_windowed: window length must be at least 1");
    const auto N = static_cast<std::size_t>(y.cols());
    WindowedRun run;
    run.x.resize(y.rows(), y.cols());
    run.last_change.assign(N, -1);
    run.seconds.assign(N, 0.0);

    Matrix prev_u;
    std::size_t prev_a = 0;
    for (std::size_t k = 0; k < N; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t a = k + 1 >= K ? k + 1 - K : 0;
        const auto len = static_cast<Eigen::Index>(k - a + 1);
        const auto window = y.middleCols(static_cast<Eigen::Index>(a), len);

        Matrix init;
        const Matrix* warm = nullptr;
        if (warm_start && k > 0 && len > 1) {
            // gaps a .. k-1; the previous run covered gaps prev_a .. k-2
            init = Matrix::Zero(y.rows(), len - 1);
            for (Eigen::Index g = 0; g < len - 1; ++g) {
                const auto abs_gap = static_cast<Eigen::Index>(a) + g;
                const Eigen::Index pg = abs_gap - static_cast<Eigen::Index>(prev_a);
                if (pg >= 0 && pg < prev_u.cols()) init.col(g) = prev_u.col(pg);
            }
            warm = &init;
        }
        ExactResult r = solve_exact(window, lambda, options, warm);
        const auto t1 = std::chrono::steady_clock::now();

        run.x.col(static_cast<Eigen::Index>(k)) = r.x.col(len - 1);
        for (Eigen::Index i = len - 2; i >= 0; --i) {
            if ((r.x.col(i + 1) - r.x.col(i)).norm() > 1e-9) {
                run.last_change[k] = static_cast<long>(a) + i;
                break;
            }
        }
        run.seconds[k] = std::chrono::duration<double>(t1 - t0).count();
        prev_u = std::move(r.u);
        prev_a = a;
    }
    return run;
}

}  // namespace mvtv
