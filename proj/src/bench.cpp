#include "mvtv/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "mvtv/evaluation.hpp"
#include "mvtv/random.hpp"

namespace mvtv {

namespace {

using nlohmann::json;

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_lock;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_lock);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t get_uint(const json& v, const std::string& path, std::uint64_t min)
{
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
        throw ConfigError(path, "must be a nonnegative integer");
    const auto n = v.get<std::uint64_t>();
    if (n < min) throw ConfigError(path, "must be at least " + std::to_string(min));
    return n;
}

double get_positive(const json& v, const std::string& path)
{
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
        throw ConfigError(path, "must be a positive number");
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& path)
{
    if (!v.is_boolean()) throw ConfigError(path, "must be a boolean");
    return v.get<bool>();
}

template <class T, class F>
std::vector<T> get_list(const json& v, const std::string& path, F item)
{
    std::vector<T> out;
    if (!v.is_array()) {
        out.push_back(item(v, path));
        return out;
    }
    if (v.empty()) throw ConfigError(path, "must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(item(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

json config_json(const BenchConfig& c)
{
    json j;
    j["M"] = c.M;
    j["N"] = c.N;
    j["SNR"] = std::isinf(c.snr_db) ? json("inf") : json(c.snr_db);
    j["realizations"] = c.realizations;
    j["seed"] = c.seed;
    j["lambda"] = c.lambdas;
    j["Q"] = c.q_sizes;
    j["K"] = c.windows;
    json protocols = json::array();
    if (c.offline) protocols.push_back("offline");
    if (c.online) protocols.push_back("online");
    j["protocols"] = protocols;
    j["oracle_rel_tol"] = c.oracle_rel_tol;
    j["window_rel_tol"] = c.window_rel_tol;
    j["window_polish"] = c.window_polish;
    j["window_warm_start"] = c.window_warm_start;
    return j;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

BenchConfig parse_bench_config(const json& doc)
{
    if (!doc.is_object()) throw ConfigError("$", "config must be a JSON object");
    static const std::vector<std::string> known = {
        "M", "N", "SNR", "realizations", "seed", "lambda", "Q", "K", "protocols",
        "oracle_rel_tol", "window_rel_tol", "window_polish", "window_warm_start", "workers"};
    for (const auto& [key, value] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("$." + key, "unknown key");

    BenchConfig c;
    auto require = [&](const char* key) -> const json& {
        if (!doc.contains(key)) throw ConfigError(std::string("$.") + key, "required");
        return doc[key];
    };
    c.M = static_cast<Eigen::Index>(get_uint(require("M"), "$.M", 1));
    c.N = get_uint(require("N"), "$.N", 2);
    const json& snr = require("SNR");
    if (snr.is_string() && snr.get<std::string>() == "inf") {
        c.snr_db = std::numeric_limits<double>::infinity();
    } else {
        if (!snr.is_number() || !std::isfinite(snr.get<double>()))
            throw ConfigError("$.SNR", "must be a number or \"inf\"");
        c.snr_db = snr.get<double>();
    }
    c.lambdas = get_list<double>(require("lambda"), "$.lambda", get_positive);
    if (doc.contains("realizations")) c.realizations = get_uint(doc["realizations"], "$.realizations", 1);
    if (doc.contains("seed")) c.seed = get_uint(doc["seed"], "$.seed", 0);
    auto size_item = [](const json& v, const std::string& p) { return get_uint(v, p, 1); };
    c.q_sizes = doc.contains("Q") ? get_list<std::size_t>(doc["Q"], "$.Q", size_item)
                                  : std::vector<std::size_t>{127};
    if (doc.contains("K")) c.windows = get_list<std::size_t>(doc["K"], "$.K", size_item);

    c.offline = c.windows.empty();
    c.online = !c.windows.empty();
    if (doc.contains("protocols")) {
        const json& p = doc["protocols"];
        if (!p.is_array() || p.empty()) throw ConfigError("$.protocols", "must be a nonempty array");
        c.offline = c.online = false;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const std::string path = "$.protocols[" + std::to_string(i) + "]";
            if (!p[i].is_string()) throw ConfigError(path, "must be \"offline\" or \"online\"");
            const auto name = p[i].get<std::string>();
            if (name == "offline") c.offline = true;
            else if (name == "online") c.online = true;
            else throw ConfigError(path, "must be \"offline\" or \"online\"");
        }
    }
    if (c.online && c.windows.empty()) throw ConfigError("$.K", "required by the online protocol");

    if (doc.contains("oracle_rel_tol")) c.oracle_rel_tol = get_positive(doc["oracle_rel_tol"], "$.oracle_rel_tol");
    if (doc.contains("window_rel_tol")) c.window_rel_tol = get_positive(doc["window_rel_tol"], "$.window_rel_tol");
    if (doc.contains("window_polish")) c.window_polish = get_bool(doc["window_polish"], "$.window_polish");
    if (doc.contains("window_warm_start"))
        c.window_warm_start = get_bool(doc["window_warm_start"], "$.window_warm_start");
    if (doc.contains("workers")) c.workers = static_cast<unsigned>(get_uint(doc["workers"], "$.workers", 0));
    return c;
}

BenchConfig parse_bench_config_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_bench_config(doc);
}

Realization make_realization(const BenchConfig& config, std::size_t r)
{
    Realization out;
    out.x = generate_piecewise(config.M, config.N, mix_seed(config.seed, 2 * r)).x;
    out.y = add_noise(out.x, config.snr_db, mix_seed(config.seed, 2 * r + 1));
    return out;
}

CandidateSet bench_candidates(double lambda, Eigen::Index M, std::size_t n, std::uint64_t seed)
{
    return random_directions(lambda, M, n, mix_seed(seed, 0xc0ffee));
}

double median(std::vector<double> values)
{
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double m = values[mid];
    if (values.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

OnlineRun run_online(const Matrix& y, const CandidateSet& candidates)
{
    check_signal(y, "run_online");
    StreamSolver solver(candidates);
    OnlineRun run;
    run.seconds.reserve(static_cast<std::size_t>(y.cols()));
    std::vector<Segment> segments;
    Vector tail;
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = solver.push(y.col(k));
        tail = solver.provisional();
        const auto t1 = std::chrono::steady_clock::now();
        run.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        segments.insert(segments.end(), out.begin(), out.end());
    }
    Segment open;
    open.start = solver.segment_start();
    open.end = static_cast<std::size_t>(y.cols()) - 1;
    open.level = tail;
    segments.push_back(open);
    run.segments = segments.size();
    run.indicator = change_indicator(reconstruct(segments, y.rows(), static_cast<std::size_t>(y.cols())));
    return run;
}

Vector windowed_indicator(const WindowedRun& run)
{
    Vector r = Vector::Zero(run.x.cols());
    for (long c : run.last_change)
        if (c >= 0) r(c) = 1.0;
    return r;
}

json run_bench(const BenchConfig& config)
{
    const std::size_t R = config.realizations, L = config.lambdas.size();
    const std::size_t nq = config.q_sizes.size(), nk = config.windows.size();

    std::vector<CandidateSet> sets;
    for (double lambda : config.lambdas)
        for (std::size_t n : config.q_sizes)
            sets.push_back(bench_candidates(lambda, config.M, n, config.seed));
    auto set_of = [&](std::size_t li, std::size_t qi) -> const CandidateSet& { return sets[li * nq + qi]; };

    // [r][l][q] and [r][l][k]
    std::vector<double> mse_values(R * L * nq, 0.0);
    std::vector<double> j_online(R * L * nq, 0.0), j_window(R * L * nk, 0.0);
    std::vector<std::vector<double>> t_online(L * nq), t_window(L * nk);
    std::mutex timing_lock;

    parallel_for(R * L, config.workers, [&](std::size_t cell) {
        const std::size_t r = cell / L, li = cell % L;
        const double lambda = config.lambdas[li];
        const Realization real = make_realization(config, r);

        if (config.offline) {
            ExactOptions opt;
            opt.rel_tol = config.oracle_rel_tol;
            const Matrix oracle = solve_exact(real.y, lambda, opt).x;
            for (std::size_t qi = 0; qi < nq; ++qi) {
                StreamOptions so;
                so.sigma_mode = SigmaMode::Offline;
                const StreamResult res = run_stream(real.y, set_of(li, qi), so);
                const Matrix approx = reconstruct(res.segments, config.M, config.N);
                mse_values[(r * L + li) * nq + qi] = mse(approx, oracle);
            }
        }
        if (config.online) {
            const Vector truth = change_indicator(real.x);
            for (std::size_t qi = 0; qi < nq; ++qi) {
                OnlineRun run = run_online(real.y, set_of(li, qi));
                j_online[(r * L + li) * nq + qi] = smoothed_jaccard(run.indicator, truth);
                std::lock_guard lock(timing_lock);
                auto& t = t_online[li * nq + qi];
                t.insert(t.end(), run.seconds.begin(), run.seconds.end());
            }
            ExactOptions opt;
            opt.rel_tol = config.window_rel_tol;
            opt.polish = config.window_polish;
            for (std::size_t ki = 0; ki < nk; ++ki) {
                WindowedRun run = run_windowed(real.y, lambda, config.windows[ki], opt,
                                               config.window_warm_start);
                j_window[(r * L + li) * nk + ki] = smoothed_jaccard(windowed_indicator(run), truth);
                std::lock_guard lock(timing_lock);
                auto& t = t_window[li * nk + ki];
                t.insert(t.end(), run.seconds.begin(), run.seconds.end());
            }
        }
    });

    auto across = [&](const std::vector<double>& v, std::size_t li, std::size_t i, std::size_t width) {
        std::vector<double> out;
        for (std::size_t r = 0; r < R; ++r) out.push_back(v[(r * L + li) * width + i]);
        return out;
    };

    json report;
    report["config"] = config_json(config);
    if (config.offline) {
        json curve = json::array();
        for (std::size_t li = 0; li < L; ++li)
            for (std::size_t qi = 0; qi < nq; ++qi) {
                const auto values = across(mse_values, li, qi, nq);
                curve.push_back({{"lambda", config.lambdas[li]},
                                 {"Q", set_of(li, qi).size()},
                                 {"median", median(values)},
                                 {"mean", mean(values)},
                                 {"values", values}});
            }
        report["offline"]["mse"] = curve;
    }
    if (config.online) {
        json cost = json::array(), jac = json::array();
        for (std::size_t li = 0; li < L; ++li) {
            for (std::size_t qi = 0; qi < nq; ++qi) {
                const auto values = across(j_online, li, qi, nq);
                cost.push_back({{"method", "online"}, {"lambda", config.lambdas[li]},
                                {"Q", set_of(li, qi).size()},
                                {"median_seconds", median(t_online[li * nq + qi])}});
                jac.push_back({{"method", "online"}, {"lambda", config.lambdas[li]},
                               {"Q", set_of(li, qi).size()},
                               {"mean", mean(values)}, {"values", values}});
            }
            for (std::size_t ki = 0; ki < nk; ++ki) {
                const auto values = across(j_window, li, ki, nk);
                cost.push_back({{"method", "windowed"}, {"lambda", config.lambdas[li]},
                                {"K", config.windows[ki]},
                                {"median_seconds", median(t_window[li * nk + ki])}});
                jac.push_back({{"method", "windowed"}, {"lambda", config.lambdas[li]},
                               {"K", config.windows[ki]},
                               {"mean", mean(values)}, {"values", values}});
            }
        }
        report["online"]["cost_per_sample"] = cost;
        report["online"]["jaccard"] = jac;
    }
    return report;
}

}  // namespace mvtv
