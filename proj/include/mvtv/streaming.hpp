#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mvtv/candidates.hpp"
#include "mvtv/tv_core.hpp"

/* On-the-fly approximation of multivariate TV.
 *
 * Every candidate zeta^(q) drives an independent copy of the univariate
 * bound machinery in each component: lower/upper primal bounds x_lo, x_hi
 * and the dual values u_lo, u_hi they imply. A new sample first tests the
 * prolongation rule (u_lo >= -zeta and u_hi <= +zeta); if it holds, bounds
 * leaving [-zeta, +zeta] are revised so that the segment's running mean is
 * consistent again and the revision index is logged. When the prolongation
 * rule fails, the logs locate the change point and the bounds give the
 * level. Among the candidates, the one with the tightest normalized bounds
 * wins and its segment is emitted.
 *
 * Indices are 0-based sample positions. */
namespace mvtv {

enum class JumpDirection : int { Negative = -1, None = 0, Positive = 1 };

enum class CandidateStatus { Active, Violated };

enum class StepOutcome { Continue, RuleOneViolated };

/* How non-violating components take part in change-point location.
 * JointLogs: every component contributes a revision log, picked by the sign
 * of u_lo + u_hi (joint estimation over a candidate set).
 * ViolatingOnly: only violating components constrain the location; the
 * others are free (known auxiliary variable). */
enum class KappaRule { JointLogs, ViolatingOnly };

struct CandidateState {
    Vector zeta;          // auxiliary variable at index k
    Vector carry;         // dual entering the segment, u_{k0-1}
    std::size_t k0 = 0;
    std::size_t k = 0;    // last index folded into the bounds
    Vector x_lo, x_hi;
    Vector u_lo, u_hi;
    std::vector<std::vector<std::size_t>> rev_lo, rev_hi;
    // bound value set at the matching log entry
    std::vector<std::vector<double>> rev_lo_x, rev_hi_x;
    CandidateStatus status = CandidateStatus::Active;
    // per component, set when the prolongation rule fails at index k
    std::vector<JumpDirection> violation;
};

struct CandidateOutcome {
    std::size_t k_rupt = 0;
    Vector level;
    Vector gap;  // x_hi - x_lo as they stood at k_rupt
    std::vector<JumpDirection> direction;
    bool closing = false;  // reached the end of data with no jump required
};

struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    Vector level;
    Vector zeta;
    std::size_t candidate_index = 0;
    std::vector<JumpDirection> direction;  // jump leaving the segment
};

/* Bounds at a segment start: u_lo = +zeta, u_hi = -zeta,
 * x_lo = y - zeta + carry, x_hi = y + zeta + carry. Without carry the
 * segment is treated independently of the previous ones. */
CandidateState init_candidate(const Eigen::Ref<const Vector>& y_k0, const Vector& zeta,
                              std::size_t k0 = 0, const Vector* carry = nullptr);

/* Folds one sample into the bounds, with the auxiliary variable at the new
 * index. On RuleOneViolated the state keeps the tentative duals at k + 1 and
 * must be finalized. */
StepOutcome advance_candidate(CandidateState& state, const Eigen::Ref<const Vector>& y_next);
StepOutcome advance_candidate(CandidateState& state, const Eigen::Ref<const Vector>& y_next,
                              const Vector& zeta_next);

CandidateOutcome finalize_candidate(const CandidateState& state,
                                    KappaRule rule = KappaRule::JointLogs);

/* End of data at index state.k: applies the boundary u = 0. Components whose
 * bounds exclude it need a jump and the candidate is finalized as if
 * violated; otherwise the segment closes at state.k at the level that makes
 * the closing dual vanish. */
CandidateOutcome close_candidate(CandidateState& state,
                                 KappaRule rule = KappaRule::JointLogs);

/* Largest index common to all logs; when none, the index present in most
 * logs (latest on ties), and k0 as last resort. */
std::size_t latest_common_index(std::span<const std::vector<std::size_t>* const> logs,
                                std::size_t k0);

/* Bound value in force at index j, read from a revision log. */
double bound_at(const std::vector<std::size_t>& log, const std::vector<double>& values,
                std::size_t j);

/* Index minimizing ||gap / sigma||^2; ties go to the largest k_rupt, then to
 * the smallest index. */
std::size_t select_candidate(std::span<const CandidateOutcome> outcomes, const Vector& sigma);

enum class SigmaMode { Offline, Running };
enum class SegmentInit { Auto, Independent, Chained };

struct StreamOptions {
    SigmaMode sigma_mode = SigmaMode::Running;
    // per-component scale for Offline mode; run_stream fills it from y if unset
    std::optional<Vector> sigma;
    // Auto chains the carried dual for M = 1 only
    SegmentInit init = SegmentInit::Auto;
};

/* Push-based driver. Samples after a selected change point are replayed
 * from an internal buffer, so push() may return several segments or none. */
class StreamSolver {
public:
    explicit StreamSolver(CandidateSet candidates, StreamOptions options = {});

    std::vector<Segment> push(const Eigen::Ref<const Vector>& sample);
    std::vector<Segment> finish();

    /* Level of the open segment from the active candidate with the tightest
     * normalized bounds, closed with u = 0 and clamped into its bounds. */
    Vector provisional() const;

    std::size_t samples_consumed() const { return n_; }
    std::size_t segment_start() const { return k0_; }
    bool finished() const { return finished_; }
    Eigen::Index dimension() const { return M_; }
    const CandidateSet& candidates() const { return candidates_; }
    Vector sigma() const;

private:
    bool chained() const;
    void start_segment(std::size_t k0);
    void feed(std::size_t q, std::size_t index);
    Segment emit();
    std::vector<Segment> drain();
    const Vector& sample(std::size_t index) const { return buffer_[index - k0_]; }

    CandidateSet candidates_;
    StreamOptions options_;
    Eigen::Index M_;
    std::size_t n_ = 0;
    std::size_t k0_ = 0;
    bool finished_ = false;
    Vector carry_;
    std::deque<Vector> buffer_;
    std::vector<CandidateState> states_;
    // outcomes_[q] is meaningful only while done_[q] is set; storage is reused
    std::vector<CandidateOutcome> outcomes_;
    std::vector<char> done_;
    std::vector<const std::vector<std::size_t>*> logs_;
    std::size_t active_ = 0;
    // running mean / second moment
    Vector mean_, m2_;
};

struct StreamResult {
    std::vector<Segment> segments;
    Vector provisional;  // open-segment estimate before end of data
    std::size_t samples_consumed = 0;
};

StreamResult run_stream(const Matrix& y, const CandidateSet& candidates,
                        StreamOptions options = {});

/* source returns std::nullopt at end of data */
StreamResult run_stream(const std::function<std::optional<Vector>()>& source,
                        const CandidateSet& candidates, StreamOptions options = {});

/* Per-component sample standard deviation, floored at 1e-12. */
Vector component_sigma(const Matrix& y);

Matrix reconstruct(std::span<const Segment> segments, Eigen::Index M, std::size_t N);

/* Bound machinery with a known, time-varying auxiliary variable z
 * (M x (N-1), nonnegative, ||z_k|| = lambda), segments chained through the
 * carried dual. With z fixed the problem separates into M weighted
 * univariate problems, solved one row at a time. */
Matrix solve_known_z(const Matrix& y, const Matrix& z);

/* Same machinery without the sphere check; z >= 0 only. */
Matrix solve_weighted(const Matrix& y, const Matrix& z);

/* Largest componentwise violation of |u| <= zeta inside each segment, with the
 * dual rebuilt from the segment start (u_{start-1} = 0). */
double segment_interior_violation(const Matrix& y, std::span<const Segment> segments);

}  // namespace mvtv
