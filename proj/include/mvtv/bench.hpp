#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvtv/candidates.hpp"
#include "mvtv/reference.hpp"
#include "mvtv/streaming.hpp"

namespace mvtv {

class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/* Experiment grid. Offline runs need q_sizes; online runs need windows
 * (and use q_sizes for the streaming side). */
struct BenchConfig {
    Eigen::Index M = 2;
    std::size_t N = 400;
    double snr_db = 3.0;
    std::size_t realizations = 1;
    std::uint64_t seed = 0;
    std::vector<double> lambdas;
    std::vector<std::size_t> q_sizes;
    std::vector<std::size_t> windows;
    bool offline = true;
    bool online = false;
    double oracle_rel_tol = 1e-10;
    double window_rel_tol = 1e-6;
    bool window_polish = true;
    bool window_warm_start = false;
    unsigned workers = 0;  // 0: hardware concurrency
};

/* Validates against the schema; errors carry a JSON path such as
 * "$.lambda[2]". */
BenchConfig parse_bench_config(const nlohmann::json& doc);
BenchConfig parse_bench_config_text(const std::string& text);

/* Signal of realization r: generator and noise seeded from (seed, r). */
struct Realization {
    Matrix x;
    Matrix y;
};
Realization make_realization(const BenchConfig& config, std::size_t r);

/* Random covering of size n for lambda; sets with the same seed are nested
 * (the first n directions do not depend on the requested size). */
CandidateSet bench_candidates(double lambda, Eigen::Index M, std::size_t n, std::uint64_t seed);

/* Online side of the comparison: per-sample wall time of push() plus the
 * provisional estimate, and the change indicator of the finalized segments
 * followed by the open segment as a single plateau. */
struct OnlineRun {
    Vector indicator;
    std::vector<double> seconds;
    std::size_t segments = 0;
};
OnlineRun run_online(const Matrix& y, const CandidateSet& candidates);

/* Indicator holding the last change point of every window solution. */
Vector windowed_indicator(const WindowedRun& run);

double median(std::vector<double> values);

nlohmann::json run_bench(const BenchConfig& config);

}  // namespace mvtv
