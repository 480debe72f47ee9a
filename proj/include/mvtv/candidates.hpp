#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvtv/tv_core.hpp"

namespace mvtv {

/* A finite set of auxiliary-variable candidates zeta^(q): nonnegative
 * M-vectors lying on the sphere of radius lambda. Immutable once built. */
class CandidateSet {
public:
    /* Validates every invariant (nonempty, same dimension, zeta >= 0,
     * ||zeta|| = lambda to 1e-12 relative) and drops exact duplicates,
     * keeping first occurrences in order. */
    CandidateSet(double lambda, std::vector<Vector> candidates);

    double lambda() const { return lambda_; }
    std::size_t size() const { return candidates_.size(); }
    Eigen::Index dimension() const { return candidates_.front().size(); }
    const Vector& operator[](std::size_t q) const { return candidates_[q]; }
    const std::vector<Vector>& candidates() const { return candidates_; }

    std::string to_json() const;
    static CandidateSet from_json(const std::string& text);

private:
    double lambda_;
    std::vector<Vector> candidates_;
};

/* zeta = lambda / sqrt(M) * (1,...,1). */
CandidateSet single_candidate(double lambda, Eigen::Index M);

/* Homogeneous covering of the quarter circle: theta_q = q pi / 2^(R+1),
 * q = 1 .. 2^R - 1. */
CandidateSet dyadic_bivariate(double lambda, int R);

/* Random covering. M = 2: theta ~ U[0, pi/2]. M > 2: lambda |g| / ||g|| with
 * g standard Gaussian. M = 1 collapses to the single point (lambda). */
CandidateSet random_directions(double lambda, Eigen::Index M, std::size_t count,
                               std::uint64_t seed);

/* Bivariate prior for unbalanced components: theta ~ N(mean, sd) folded
 * into [0, pi/2]. Defaults favour neither component. */
CandidateSet gaussian_angles(double lambda, std::size_t count, std::uint64_t seed,
                             double mean = 0.7853981633974483, double sd = 0.3);

/* Command-line mini-language: "single", "dyadic:R=<r>",
 * "random:n=<count>[,seed=<s>]" or "file:<path>" (JSON as in to_json). */
CandidateSet parse_candidate_spec(const std::string& spec, double lambda, Eigen::Index M,
                                  std::uint64_t default_seed = 0);

}  // namespace mvtv
