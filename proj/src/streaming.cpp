#include "mvtv/streaming.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mvtv {

namespace {

constexpr double kSigmaFloor = 1e-12;

void check_candidate_args(const Eigen::Ref<const Vector>& y, const Vector& zeta,
                          const Vector* carry)
{
    const Eigen::Index M = zeta.size();
    if (y.size() != M)
        throw DimensionError("init_candidate: sample and zeta differ in dimension");
    if (!zeta.allFinite() || (zeta.array() < 0.0).any())
        throw InvalidArgument("init_candidate: zeta must be finite and nonnegative");
    if (carry && carry->size() != M)
        throw DimensionError("init_candidate: carried dual has the wrong dimension");
}

// unchecked; reuses the state's storage
void reset_candidate(CandidateState& s, const Eigen::Ref<const Vector>& y, const Vector& zeta,
                     std::size_t k0, const Vector* carry)
{
    const Eigen::Index M = zeta.size();
    const auto Mu = static_cast<std::size_t>(M);
    if (s.zeta.size() != M) {
        for (Vector* v : {&s.zeta, &s.carry, &s.u_lo, &s.u_hi, &s.x_lo, &s.x_hi}) v->resize(M);
        s.rev_lo.resize(Mu);
        s.rev_hi.resize(Mu);
        s.rev_lo_x.resize(Mu);
        s.rev_hi_x.resize(Mu);
        s.violation.resize(Mu);
    }
    s.k0 = s.k = k0;
    for (Eigen::Index i = 0; i < M; ++i) {
        const auto m = static_cast<std::size_t>(i);
        const double z = zeta(i);
        const double c = carry ? (*carry)(i) : 0.0;
        s.zeta(i) = z;
        s.carry(i) = c;
        s.u_lo(i) = z;
        s.u_hi(i) = -z;
        s.x_lo(i) = y(i) - z + c;
        s.x_hi(i) = y(i) + z + c;
        s.rev_lo[m].clear();
        s.rev_lo[m].push_back(k0);
        s.rev_hi[m].clear();
        s.rev_hi[m].push_back(k0);
        s.rev_lo_x[m].clear();
        s.rev_lo_x[m].push_back(s.x_lo(i));
        s.rev_hi_x[m].clear();
        s.rev_hi_x[m].push_back(s.x_hi(i));
        s.violation[m] = JumpDirection::None;
    }
    s.status = CandidateStatus::Active;
}

bool log_ends_at(const std::vector<std::size_t>& log, std::size_t index)
{
    return !log.empty() && log.back() == index;
}

}  // namespace

CandidateState init_candidate(const Eigen::Ref<const Vector>& y_k0, const Vector& zeta,
                              std::size_t k0, const Vector* carry)
{
    check_candidate_args(y_k0, zeta, carry);
    CandidateState s;
    reset_candidate(s, y_k0, zeta, k0, carry);
    return s;
}

StepOutcome advance_candidate(CandidateState& state, const Eigen::Ref<const Vector>& y_next)
{
    if (state.status != CandidateStatus::Active)
        throw std::logic_error("advance_candidate: candidate already stopped");
    const Eigen::Index M = state.zeta.size();
    if (y_next.size() != M)
        throw DimensionError("advance_candidate: sample has the wrong dimension");

    const Vector& zeta = state.zeta;
    ++state.k;

    bool violated = false;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double lo = y_next(m) + state.u_lo(m) - state.x_lo(m);
        const double hi = y_next(m) + state.u_hi(m) - state.x_hi(m);
        if (lo < -zeta(m) || hi > zeta(m)) { violated = true; break; }
    }
    if (violated) {
        for (Eigen::Index m = 0; m < M; ++m) {
            const double lo = y_next(m) + state.u_lo(m) - state.x_lo(m);
            const double hi = y_next(m) + state.u_hi(m) - state.x_hi(m);
            auto& v = state.violation[static_cast<std::size_t>(m)];
            if (lo < -zeta(m)) v = JumpDirection::Negative;
            else if (hi > zeta(m)) v = JumpDirection::Positive;
            else v = JumpDirection::None;
            state.u_lo(m) = lo;
            state.u_hi(m) = hi;
        }
        state.status = CandidateStatus::Violated;
        return StepOutcome::RuleOneViolated;
    }

    const double count = static_cast<double>(state.k - state.k0 + 1);
    for (Eigen::Index m = 0; m < M; ++m) {
        const auto mm = static_cast<std::size_t>(m);
        double lo = y_next(m) + state.u_lo(m) - state.x_lo(m);
        double hi = y_next(m) + state.u_hi(m) - state.x_hi(m);
        if (lo >= zeta(m)) {
            state.x_lo(m) += (lo - zeta(m)) / count;
            lo = zeta(m);
            state.rev_lo[mm].push_back(state.k);
            state.rev_lo_x[mm].push_back(state.x_lo(m));
        }
        if (hi <= -zeta(m)) {
            state.x_hi(m) += (hi + zeta(m)) / count;
            hi = -zeta(m);
            state.rev_hi[mm].push_back(state.k);
            state.rev_hi_x[mm].push_back(state.x_hi(m));
        }
        state.u_lo(m) = lo;
        state.u_hi(m) = hi;
        assert(state.x_hi(m) - state.x_lo(m) >= -1e-9 * (1.0 + std::abs(state.x_hi(m))));
        assert(lo - hi >= -1e-9 * (1.0 + std::abs(lo)));
    }
    return StepOutcome::Continue;
}

StepOutcome advance_candidate(CandidateState& state, const Eigen::Ref<const Vector>& y_next,
                              const Vector& zeta_next)
{
    if (zeta_next.size() != state.zeta.size())
        throw DimensionError("advance_candidate: zeta has the wrong dimension");
    state.zeta = zeta_next;
    return advance_candidate(state, y_next);
}

std::size_t latest_common_index(std::span<const std::vector<std::size_t>* const> logs,
                                std::size_t k0)
{
    if (logs.empty()) return k0;
    const auto* pivot = *std::min_element(logs.begin(), logs.end(),
        [](const auto* a, const auto* b) { return a->size() < b->size(); });
    for (auto it = pivot->rbegin(); it != pivot->rend(); ++it) {
        bool everywhere = true;
        for (const auto* log : logs)
            if (!std::binary_search(log->begin(), log->end(), *it)) { everywhere = false; break; }
        if (everywhere) return *it;
    }

    std::map<std::size_t, std::size_t> hits;
    for (const auto* log : logs)
        for (std::size_t j : *log) ++hits[j];
    if (hits.empty()) return k0;
    std::size_t best = k0, best_hits = 0;
    for (const auto& [j, n] : hits)
        if (n >= best_hits) { best = j; best_hits = n; }
    return best;
}

namespace {

void finalize_into(const CandidateState& state, KappaRule rule, CandidateOutcome& out,
                   std::vector<const std::vector<std::size_t>*>& logs)
{
    if (state.status != CandidateStatus::Violated)
        throw std::logic_error("finalize_candidate: candidate has not stopped");
    const auto M = static_cast<std::size_t>(state.zeta.size());

    out.closing = false;
    out.direction = state.violation;
    logs.clear();
    for (std::size_t m = 0; m < M; ++m) {
        auto& d = out.direction[m];
        if (d == JumpDirection::None) {
            if (rule == KappaRule::ViolatingOnly) continue;
            const auto i = static_cast<Eigen::Index>(m);
            d = state.u_lo(i) + state.u_hi(i) < 0.0 ? JumpDirection::Negative
                                                    : JumpDirection::Positive;
        }
        logs.push_back(d == JumpDirection::Negative ? &state.rev_lo[m] : &state.rev_hi[m]);
    }
    out.k_rupt = latest_common_index(logs, state.k0);

    if (rule == KappaRule::ViolatingOnly) {
        for (std::size_t m = 0; m < M; ++m) {
            auto& d = out.direction[m];
            if (d != JumpDirection::None) continue;
            const bool down = log_ends_at(state.rev_lo[m], out.k_rupt);
            const bool up = log_ends_at(state.rev_hi[m], out.k_rupt);
            if (down != up) {
                d = down ? JumpDirection::Negative : JumpDirection::Positive;
            } else {
                const auto i = static_cast<Eigen::Index>(m);
                d = state.u_lo(i) + state.u_hi(i) < 0.0 ? JumpDirection::Negative
                                                        : JumpDirection::Positive;
            }
        }
    }

    out.level.resize(state.zeta.size());
    out.gap.resize(state.zeta.size());
    for (std::size_t m = 0; m < M; ++m) {
        const auto i = static_cast<Eigen::Index>(m);
        out.level(i) = out.direction[m] == JumpDirection::Negative ? state.x_lo(i) : state.x_hi(i);
        out.gap(i) = bound_at(state.rev_hi[m], state.rev_hi_x[m], out.k_rupt)
            - bound_at(state.rev_lo[m], state.rev_lo_x[m], out.k_rupt);
    }
}

// end of data: true when some component needs a jump
bool mark_closing_jumps(CandidateState& state)
{
    if (state.status != CandidateStatus::Active)
        throw std::logic_error("close_candidate: candidate already stopped");
    bool jump = false;
    for (Eigen::Index m = 0; m < state.zeta.size(); ++m) {
        auto& v = state.violation[static_cast<std::size_t>(m)];
        if (state.u_lo(m) < 0.0) v = JumpDirection::Negative;
        else if (state.u_hi(m) > 0.0) v = JumpDirection::Positive;
        else continue;
        jump = true;
    }
    if (jump) state.status = CandidateStatus::Violated;
    return jump;
}

void close_into(CandidateState& state, KappaRule rule, CandidateOutcome& out,
                std::vector<const std::vector<std::size_t>*>& logs)
{
    if (mark_closing_jumps(state)) {
        finalize_into(state, rule, out, logs);
        return;
    }
    const Eigen::Index M = state.zeta.size();
    out.closing = true;
    out.k_rupt = state.k;
    out.level = state.x_lo + state.u_lo / static_cast<double>(state.k - state.k0 + 1);
    out.gap = state.x_hi - state.x_lo;
    out.direction.assign(static_cast<std::size_t>(M), JumpDirection::None);
}

}  // namespace

CandidateOutcome finalize_candidate(const CandidateState& state, KappaRule rule)
{
    CandidateOutcome out;
    std::vector<const std::vector<std::size_t>*> logs;
    finalize_into(state, rule, out, logs);
    return out;
}

CandidateOutcome close_candidate(CandidateState& state, KappaRule rule)
{
    CandidateOutcome out;
    std::vector<const std::vector<std::size_t>*> logs;
    close_into(state, rule, out, logs);
    return out;
}

double bound_at(const std::vector<std::size_t>& log, const std::vector<double>& values,
                std::size_t j)
{
    auto it = std::upper_bound(log.begin(), log.end(), j);
    if (it == log.begin()) throw std::logic_error("bound_at: index before segment start");
    return values[static_cast<std::size_t>(it - log.begin()) - 1];
}

std::size_t select_candidate(std::span<const CandidateOutcome> outcomes, const Vector& sigma)
{
    if (outcomes.empty())
        throw InvalidArgument("select_candidate: no candidates");
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < outcomes.size(); ++q) {
        const auto& o = outcomes[q];
        if (o.gap.size() != sigma.size())
            throw DimensionError("select_candidate: sigma has the wrong dimension");
        const double score = (o.gap.array() / sigma.array()).square().sum();
        // equal up to rounding counts as a tie
        const double slack = 1e-12 * std::max(std::abs(score), std::abs(best_score));
        if (q == 0 || score < best_score - slack) {
            best = q;
            best_score = score;
        } else if (std::abs(score - best_score) <= slack && o.k_rupt > outcomes[best].k_rupt) {
            best = q;
            best_score = std::min(best_score, score);
        }
    }
    return best;
}

Vector component_sigma(const Matrix& y)
{
    check_signal(y, "component_sigma");
    const Eigen::Index N = y.cols();
    if (N < 2) return Vector::Constant(y.rows(), kSigmaFloor);
    const Vector mean = y.rowwise().mean();
    const Vector var = (y.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(N - 1);
    return var.cwiseSqrt().cwiseMax(kSigmaFloor);
}

// ---------------------------------------------------------------------------

StreamSolver::StreamSolver(CandidateSet candidates, StreamOptions options)
    : candidates_(std::move(candidates)), options_(std::move(options)),
      M_(candidates_.dimension())
{
    if (options_.sigma_mode == SigmaMode::Offline) {
        if (!options_.sigma)
            throw InvalidArgument("stream: offline sigma mode needs a scale vector");
        if (options_.sigma->size() != M_ || !options_.sigma->allFinite())
            throw DimensionError("stream: sigma must be a finite M-vector");
        *options_.sigma = options_.sigma->cwiseMax(kSigmaFloor);
    }
    carry_.setZero(M_);
    mean_.setZero(M_);
    m2_.setZero(M_);
    states_.resize(candidates_.size());
    outcomes_.resize(candidates_.size());
    done_.assign(candidates_.size(), 0);
}

bool StreamSolver::chained() const
{
    switch (options_.init) {
    case SegmentInit::Chained: return true;
    case SegmentInit::Independent: return false;
    case SegmentInit::Auto: break;
    }
    return M_ == 1;
}

Vector StreamSolver::sigma() const
{
    if (options_.sigma_mode == SigmaMode::Offline) return *options_.sigma;
    if (n_ < 2) return Vector::Constant(M_, kSigmaFloor);
    return (m2_ / static_cast<double>(n_ - 1)).cwiseSqrt().cwiseMax(kSigmaFloor);
}

void StreamSolver::feed(std::size_t q, std::size_t index)
{
    if (advance_candidate(states_[q], sample(index)) == StepOutcome::RuleOneViolated) {
        finalize_into(states_[q], KappaRule::JointLogs, outcomes_[q], logs_);
        done_[q] = 1;
        --active_;
    }
}

void StreamSolver::start_segment(std::size_t k0)
{
    while (k0_ < k0) {
        buffer_.pop_front();
        ++k0_;
    }
    const Vector* carry = chained() ? &carry_ : nullptr;
    for (std::size_t q = 0; q < states_.size(); ++q) {
        reset_candidate(states_[q], sample(k0), candidates_[q], k0, carry);
        done_[q] = 0;
    }
    active_ = states_.size();
    for (std::size_t index = k0 + 1; index < n_ && active_ > 0; ++index)
        for (std::size_t q = 0; q < states_.size(); ++q)
            if (!done_[q]) feed(q, index);
}

Segment StreamSolver::emit()
{
    const std::size_t q = select_candidate(outcomes_, sigma());
    const CandidateOutcome& best = outcomes_[q];

    Segment seg;
    seg.start = k0_;
    seg.end = best.k_rupt;
    seg.level = best.level;
    seg.zeta = candidates_[q];
    seg.candidate_index = q;
    seg.direction = best.direction;

    for (Eigen::Index m = 0; m < M_; ++m)
        carry_(m) = -static_cast<double>(static_cast<int>(seg.direction[static_cast<std::size_t>(m)]))
            * seg.zeta(m);

    if (seg.end + 1 >= n_) {
        finished_ = true;
        std::fill(done_.begin(), done_.end(), 0);
    } else {
        start_segment(seg.end + 1);
    }
    return seg;
}

std::vector<Segment> StreamSolver::drain()
{
    std::vector<Segment> out;
    while (active_ == 0 && !finished_) out.push_back(emit());
    return out;
}

std::vector<Segment> StreamSolver::push(const Eigen::Ref<const Vector>& value)
{
    if (finished_) throw std::logic_error("stream: push after finish");
    if (value.size() != M_)
        throw DimensionError("stream: sample has " + std::to_string(value.size())
                             + " components, expected " + std::to_string(M_));
    if (!value.allFinite()) throw InvalidArgument("stream: sample entries must be finite");

    ++n_;
    const Vector delta = value - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(value - mean_);
    buffer_.push_back(value);

    if (n_ == 1) {
        start_segment(0);
        return {};
    }
    for (std::size_t q = 0; q < states_.size(); ++q)
        if (!done_[q]) feed(q, n_ - 1);
    return drain();
}

std::vector<Segment> StreamSolver::finish()
{
    if (finished_) throw std::logic_error("stream: already finished");
    if (n_ == 0) throw InvalidArgument("stream: no samples");
    std::vector<Segment> out;
    while (!finished_) {
        for (std::size_t q = 0; q < states_.size(); ++q)
            if (!done_[q]) {
                close_into(states_[q], KappaRule::JointLogs, outcomes_[q], logs_);
                done_[q] = 1;
            }
        active_ = 0;
        auto more = drain();
        out.insert(out.end(), std::make_move_iterator(more.begin()),
                   std::make_move_iterator(more.end()));
    }
    return out;
}

Vector StreamSolver::provisional() const
{
    if (n_ == 0 || finished_) return {};
    const Vector s = sigma();
    std::size_t best = states_.size();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < states_.size(); ++q) {
        if (done_[q]) continue;
        const auto& st = states_[q];
        const double score = ((st.x_hi - st.x_lo).array() / s.array()).square().sum();
        if (score < best_score) { best = q; best_score = score; }
    }
    if (best == states_.size()) return {};
    const auto& st = states_[best];
    const double count = static_cast<double>(st.k - st.k0 + 1);
    return (st.x_lo + st.u_lo / count).cwiseMax(st.x_lo).cwiseMin(st.x_hi);
}

StreamResult run_stream(const std::function<std::optional<Vector>()>& source,
                        const CandidateSet& candidates, StreamOptions options)
{
    StreamSolver solver(candidates, std::move(options));
    StreamResult result;
    while (auto value = source()) {
        auto segs = solver.push(*value);
        result.segments.insert(result.segments.end(), segs.begin(), segs.end());
    }
    if (solver.samples_consumed() == 0) throw InvalidArgument("run_stream: empty stream");
    result.provisional = solver.provisional();
    auto tail = solver.finish();
    result.segments.insert(result.segments.end(), tail.begin(), tail.end());
    result.samples_consumed = solver.samples_consumed();
    return result;
}

StreamResult run_stream(const Matrix& y, const CandidateSet& candidates, StreamOptions options)
{
    check_signal(y, "run_stream");
    if (y.rows() != candidates.dimension())
        throw DimensionError("run_stream: signal and candidates differ in dimension");
    if (options.sigma_mode == SigmaMode::Offline && !options.sigma)
        options.sigma = component_sigma(y);
    Eigen::Index k = 0;
    return run_stream([&]() -> std::optional<Vector> {
        if (k == y.cols()) return std::nullopt;
        return y.col(k++);
    }, candidates, std::move(options));
}

Matrix reconstruct(std::span<const Segment> segments, Eigen::Index M, std::size_t N)
{
    Matrix x(M, static_cast<Eigen::Index>(N));
    std::size_t next = 0;
    for (const auto& seg : segments) {
        if (seg.start != next || seg.end < seg.start || seg.end >= N)
            throw InvalidArgument("reconstruct: segments do not tile the signal");
        if (seg.level.size() != M)
            throw DimensionError("reconstruct: segment level has the wrong dimension");
        for (std::size_t j = seg.start; j <= seg.end; ++j)
            x.col(static_cast<Eigen::Index>(j)) = seg.level;
        next = seg.end + 1;
    }
    if (next != N) throw InvalidArgument("reconstruct: segments do not cover the signal");
    return x;
}

Matrix solve_weighted(const Matrix& y, const Matrix& z)
{
    check_signal(y, "solve_weighted");
    const Eigen::Index M = y.rows(), N = y.cols();
    if (z.rows() != M || z.cols() != N - 1)
        throw DimensionError("solve_weighted: weights must be M x (N-1)");
    if (!z.allFinite() || (z.array() < 0.0).any())
        throw InvalidArgument("solve_weighted: weights must be finite and nonnegative");
    if (N == 1) return y;
    // a known z decouples the components
    if (M > 1) {
        Matrix x(M, N);
        for (Eigen::Index m = 0; m < M; ++m) x.row(m) = solve_weighted(y.row(m), z.row(m));
        return x;
    }

    auto zeta_at = [&](Eigen::Index j) -> Vector { return z.col(std::min(j, N - 2)); };

    Matrix x(M, N);
    Vector carry = Vector::Zero(M);
    Eigen::Index k0 = 0;
    CandidateState state;
    while (k0 < N) {
        reset_candidate(state, y.col(k0), zeta_at(k0), static_cast<std::size_t>(k0), &carry);
        Eigen::Index j = k0 + 1;
        for (; j < N; ++j)
            if (advance_candidate(state, y.col(j), zeta_at(j)) == StepOutcome::RuleOneViolated)
                break;
        const CandidateOutcome out = j < N ? finalize_candidate(state, KappaRule::ViolatingOnly)
                                           : close_candidate(state, KappaRule::ViolatingOnly);
        const auto end = static_cast<Eigen::Index>(out.k_rupt);
        for (Eigen::Index i = k0; i <= end; ++i) x.col(i) = out.level;
        const Vector zeta = zeta_at(end);
        for (Eigen::Index m = 0; m < M; ++m)
            carry(m) = -static_cast<double>(static_cast<int>(out.direction[static_cast<std::size_t>(m)]))
                * zeta(m);
        k0 = end + 1;
    }
    return x;
}

Matrix solve_known_z(const Matrix& y, const Matrix& z)
{
    check_signal(y, "solve_known_z");
    if (z.rows() != y.rows() || z.cols() != y.cols() - 1)
        throw DimensionError("solve_known_z: z must be M x (N-1)");
    if (z.cols() > 0) {
        if (!z.allFinite() || (z.array() < 0.0).any())
            throw InvalidArgument("solve_known_z: z must be finite and nonnegative");
        const Vector norms = z.colwise().norm().transpose();
        const double lambda = norms(0);
        if (!(lambda > 0.0))
            throw InvalidArgument("solve_known_z: z columns must have positive norm");
        if (((norms.array() - lambda).abs() > 1e-9 * lambda).any())
            throw InvalidArgument("solve_known_z: every column of z must have the same norm lambda");
    }
    return solve_weighted(y, z);
}

double segment_interior_violation(const Matrix& y, std::span<const Segment> segments)
{
    double worst = 0.0;
    for (const auto& seg : segments) {
        Vector u = Vector::Zero(y.rows());
        for (std::size_t j = seg.start; j < seg.end; ++j) {
            u += y.col(static_cast<Eigen::Index>(j)) - seg.level;
            worst = std::max(worst, (u.cwiseAbs() - seg.zeta).maxCoeff());
        }
    }
    return worst;
}

}  // namespace mvtv
