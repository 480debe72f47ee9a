// mvtv: streaming multivariate TV denoising from the command line.
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mvtv/bench.hpp"
#include "mvtv/candidates.hpp"
#include "mvtv/evaluation.hpp"
#include "mvtv/io.hpp"
#include "mvtv/reference.hpp"
#include "mvtv/streaming.hpp"

namespace {

using namespace mvtv;

// exit codes
constexpr int kBadArguments = 1;
constexpr int kBadInput = 2;

struct DenoiseArgs {
    double lambda = 0.0;
    std::string q = "single";
    std::string mode = "batch";
    bool provisional = false;
    std::uint64_t seed = 0;
    std::string sigma = "running";
    bool chained = false;
    std::string input;
    std::string output;
};

class InputError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::istream& open_input(const std::string& path, std::ifstream& file)
{
    if (path.empty() || path == "-") return std::cin;
    file.open(path);
    if (!file) throw InputError("cannot open " + path);
    return file;
}

StreamOptions stream_options(const DenoiseArgs& a)
{
    StreamOptions opt;
    opt.sigma_mode = a.sigma == "offline" ? SigmaMode::Offline : SigmaMode::Running;
    if (a.chained) opt.init = SegmentInit::Chained;
    return opt;
}

int denoise(const DenoiseArgs& a)
{
    if (!(a.lambda > 0.0) || !std::isfinite(a.lambda)) {
        std::cerr << "error: --lambda must be positive\n";
        return kBadArguments;
    }
    std::ifstream file;
    std::istream& in = open_input(a.input, file);

    if (a.mode == "batch") {
        Matrix y;
        try {
            y = read_csv(in);
        } catch (const InvalidArgument& e) {
            throw InputError(e.what());
        }
        const CandidateSet q = parse_candidate_spec(a.q, a.lambda, y.rows(), a.seed);
        StreamOptions opt = stream_options(a);
        if (opt.sigma_mode == SigmaMode::Offline) opt.sigma = component_sigma(y);
        StreamSolver solver(q, opt);
        std::vector<Segment> segments;
        auto emit = [&](std::vector<Segment> out) {
            for (Segment& s : out) {
                std::cout << segment_json(s) << '\n';
                segments.push_back(std::move(s));
            }
        };
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            emit(solver.push(y.col(k)));
            if (a.provisional)
                std::cout << provisional_json(static_cast<std::size_t>(k), solver.provisional()) << '\n';
        }
        emit(solver.finish());
        if (!a.output.empty())
            write_csv_file(a.output, reconstruct(segments, y.rows(), solver.samples_consumed()));
        return 0;
    }

    if (a.sigma == "offline") {
        std::cerr << "error: --sigma offline needs the whole signal; use --mode batch\n";
        return kBadArguments;
    }
    CsvReader reader(in);
    auto first = reader.next();
    if (!first) throw InputError("no samples");
    const CandidateSet q = parse_candidate_spec(a.q, a.lambda, first->size(), a.seed);
    StreamSolver solver(q, stream_options(a));
    std::vector<Segment> segments;
    std::size_t k = 0;
    for (auto sample = std::move(first); sample; sample = reader.next(), ++k) {
        for (Segment& s : solver.push(*sample)) {
            std::cout << segment_json(s) << '\n';
            segments.push_back(std::move(s));
        }
        if (a.provisional) std::cout << provisional_json(k, solver.provisional()) << '\n';
        std::cout.flush();
    }
    for (Segment& s : solver.finish()) {
        std::cout << segment_json(s) << '\n';
        segments.push_back(std::move(s));
    }
    if (!a.output.empty())
        write_csv_file(a.output, reconstruct(segments, solver.dimension(), solver.samples_consumed()));
    return 0;
}

int bench(const std::string& config_path, const std::string& output)
{
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open " << config_path << '\n';
        return kBadArguments;
    }
    std::stringstream text;
    text << in.rdbuf();
    BenchConfig config;
    try {
        config = parse_bench_config_text(text.str());
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid config at " << e.what() << '\n';
        return kBadArguments;
    }
    const std::string report = run_bench(config).dump(2);
    if (output.empty() || output == "-") {
        std::cout << report << '\n';
    } else {
        std::ofstream out(output);
        out << report << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Streaming multivariate total-variation denoising"};
    app.require_subcommand(1);

    DenoiseArgs d;
    auto* den = app.add_subcommand("denoise", "Segment a CSV signal (one sample per line)");
    den->add_option("--lambda", d.lambda, "Regularization weight")->required();
    den->add_option("--q", d.q, "Candidate set: single | dyadic:R=<r> | random:n=<n>[,seed=<s>] | file:<path>");
    den->add_option("--mode", d.mode, "batch reads the whole input first; stream emits as it reads")
        ->check(CLI::IsMember({"batch", "stream"}));
    den->add_flag("--provisional", d.provisional, "Emit the open-segment estimate after every sample");
    den->add_option("--seed", d.seed, "Seed for random candidate sets");
    den->add_option("--sigma", d.sigma, "Per-component scale for candidate selection")
        ->check(CLI::IsMember({"offline", "running"}));
    den->add_flag("--chained-init", d.chained, "Carry the dual across change points");
    den->add_option("--input", d.input, "CSV input (default: standard input)");
    den->add_option("--output", d.output, "Write the piecewise-constant reconstruction as CSV");

    std::string config, report;
    auto* ben = app.add_subcommand("bench", "Run an experiment grid from a JSON config");
    ben->add_option("--config", config, "Config file")->required();
    ben->add_option("--output", report, "Report file (default: standard output)");

    Eigen::Index gen_m = 2;
    std::size_t gen_n = 400;
    double gen_snr = std::numeric_limits<double>::infinity();
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_clean;
    auto* gen = app.add_subcommand("generate", "Draw a noisy piecewise-constant test signal");
    gen->add_option("--M", gen_m, "Components")->check(CLI::PositiveNumber);
    gen->add_option("--N", gen_n, "Samples")->check(CLI::PositiveNumber);
    gen->add_option("--snr", gen_snr, "Signal-to-noise ratio in dB (default: no noise)");
    gen->add_option("--seed", gen_seed, "Seed");
    gen->add_option("--output", gen_out, "Noisy signal CSV (default: standard output)");
    gen->add_option("--clean", gen_clean, "Also write the clean signal here");

    double or_lambda = 0.0, or_tol = 1e-10;
    std::string or_in, or_out;
    auto* orc = app.add_subcommand("oracle", "Exact solution by the iterative solver");
    orc->add_option("--lambda", or_lambda, "Regularization weight")->required();
    orc->add_option("--rel-tol", or_tol, "Relative objective change at which to stop");
    orc->add_option("--input", or_in, "CSV input (default: standard input)");
    orc->add_option("--output", or_out, "CSV output (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kBadArguments;
    }

    try {
        if (*den) return denoise(d);
        if (*ben) return bench(config, report);
        if (*gen) {
            const auto sig = generate_piecewise(gen_m, gen_n, gen_seed);
            const Matrix y = add_noise(sig.x, gen_snr, gen_seed + 1);
            if (!gen_clean.empty()) write_csv_file(gen_clean, sig.x);
            if (gen_out.empty()) write_csv(std::cout, y); else write_csv_file(gen_out, y);
            return 0;
        }
        if (*orc) {
            std::ifstream file;
            Matrix y;
            try {
                y = read_csv(open_input(or_in, file));
            } catch (const InvalidArgument& e) {
                throw InputError(e.what());
            }
            ExactOptions opt;
            opt.rel_tol = or_tol;
            const ExactResult r = solve_exact(y, or_lambda, opt);
            if (!r.converged)
                std::cerr << "warning: stopped after " << r.iterations
                          << " iterations, relative change " << r.last_rel_change << '\n';
            if (or_out.empty()) write_csv(std::cout, r.x); else write_csv_file(or_out, r.x);
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadArguments;
    }
    return 0;
}
