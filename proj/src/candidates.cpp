#include "mvtv/candidates.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "mvtv/random.hpp"

namespace mvtv {

CandidateSet::CandidateSet(double lambda, std::vector<Vector> candidates)
    : lambda_(lambda)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("candidate set: lambda must be positive and finite");
    if (candidates.empty())
        throw InvalidArgument("candidate set: no candidates");
    const Eigen::Index M = candidates.front().size();
    if (M < 1)
        throw DimensionError("candidate set: candidates must have at least one component");

    for (std::size_t q = 0; q < candidates.size(); ++q) {
        const Vector& zeta = candidates[q];
        const std::string where = "candidate set: candidate " + std::to_string(q);
        if (zeta.size() != M)
            throw DimensionError(where + " has " + std::to_string(zeta.size())
                                 + " components, expected " + std::to_string(M));
        if (!zeta.allFinite() || (zeta.array() < 0.0).any())
            throw InvalidArgument(where + " must be finite and nonnegative");
        if (std::abs(zeta.norm() - lambda) > 1e-12 * lambda)
            throw InvalidArgument(where + " does not have norm lambda");

        bool duplicate = false;
        for (const Vector& kept : candidates_)
            if (kept == zeta) { duplicate = true; break; }
        if (!duplicate) candidates_.push_back(zeta);
    }
}

std::string CandidateSet::to_json() const
{
    nlohmann::json j;
    j["lambda"] = lambda_;
    auto& list = j["candidates"] = nlohmann::json::array();
    for (const Vector& zeta : candidates_)
        list.push_back(std::vector<double>(zeta.data(), zeta.data() + zeta.size()));
    return j.dump();
}

CandidateSet CandidateSet::from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("candidate set: ") + e.what());
    }
    if (!j.is_object() || !j.contains("lambda") || !j["lambda"].is_number()
        || !j.contains("candidates") || !j["candidates"].is_array())
        throw InvalidArgument("candidate set: expected {\"lambda\": number, \"candidates\": [[...], ...]}");

    std::vector<Vector> list;
    for (const auto& row : j["candidates"]) {
        if (!row.is_array())
            throw InvalidArgument("candidate set: each candidate must be an array of numbers");
        Vector zeta(static_cast<Eigen::Index>(row.size()));
        for (std::size_t m = 0; m < row.size(); ++m) {
            if (!row[m].is_number())
                throw InvalidArgument("candidate set: each candidate must be an array of numbers");
            zeta(static_cast<Eigen::Index>(m)) = row[m].get<double>();
        }
        list.push_back(std::move(zeta));
    }
    return CandidateSet(j["lambda"].get<double>(), std::move(list));
}

CandidateSet single_candidate(double lambda, Eigen::Index M)
{
    if (M < 1) throw DimensionError("single_candidate: M must be at least 1");
    Vector zeta = Vector::Constant(M, 1.0);
    zeta *= lambda / zeta.norm();
    return CandidateSet(lambda, {zeta});
}

namespace {

Vector on_quarter_circle(double lambda, double theta)
{
    Vector zeta(2);
    zeta << lambda * std::cos(theta), lambda * std::sin(theta);
    // cos(pi/2) is not exactly zero
    zeta = zeta.cwiseMax(0.0);
    return zeta * (lambda / zeta.norm());
}

}  // namespace

CandidateSet dyadic_bivariate(double lambda, int R)
{
    if (R < 1) throw InvalidArgument("dyadic_bivariate: R must be at least 1");
    if (R > 30) throw InvalidArgument("dyadic_bivariate: R too large");
    const long count = (1L << R) - 1;
    const double step = std::numbers::pi / static_cast<double>(1L << (R + 1));
    std::vector<Vector> list;
    list.reserve(static_cast<std::size_t>(count));
    for (long q = 1; q <= count; ++q)
        list.push_back(on_quarter_circle(lambda, step * static_cast<double>(q)));
    return CandidateSet(lambda, std::move(list));
}

CandidateSet random_directions(double lambda, Eigen::Index M, std::size_t count,
                               std::uint64_t seed)
{
    if (count < 1) throw InvalidArgument("random_directions: count must be at least 1");
    if (M < 1) throw DimensionError("random_directions: M must be at least 1");
    Rng rng = make_rng(seed);
    std::vector<Vector> list;
    list.reserve(count);
    if (M == 1) {
        list.assign(count, Vector::Constant(1, lambda));
    } else if (M == 2) {
        std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2.0);
        for (std::size_t q = 0; q < count; ++q)
            list.push_back(on_quarter_circle(lambda, angle(rng)));
    } else {
        std::normal_distribution<double> gauss;
        for (std::size_t q = 0; q < count; ++q) {
            Vector g(M);
            do {
                for (Eigen::Index m = 0; m < M; ++m) g(m) = std::abs(gauss(rng));
            } while (g.norm() == 0.0);
            list.push_back(g * (lambda / g.norm()));
        }
    }
    return CandidateSet(lambda, std::move(list));
}

CandidateSet gaussian_angles(double lambda, std::size_t count, std::uint64_t seed,
                             double mean, double sd)
{
    if (count < 1) throw InvalidArgument("gaussian_angles: count must be at least 1");
    if (!(sd > 0.0)) throw InvalidArgument("gaussian_angles: sd must be positive");
    Rng rng = make_rng(seed);
    std::normal_distribution<double> angle(mean, sd);
    const double quarter = std::numbers::pi / 2.0;
    std::vector<Vector> list;
    list.reserve(count);
    for (std::size_t q = 0; q < count; ++q) {
        // reflect into [0, pi/2]
        double theta = std::fmod(std::abs(angle(rng)), 2.0 * quarter);
        if (theta > quarter) theta = 2.0 * quarter - theta;
        list.push_back(on_quarter_circle(lambda, theta));
    }
    return CandidateSet(lambda, std::move(list));
}

}  // namespace mvtv

namespace mvtv {

CandidateSet parse_candidate_spec(const std::string& spec, double lambda, Eigen::Index M,
                                  std::uint64_t default_seed)
{
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (kind == "file") {
        std::ifstream in(rest);
        if (!in) throw InvalidArgument("candidate spec: cannot open " + rest);
        std::stringstream text;
        text << in.rdbuf();
        CandidateSet set = CandidateSet::from_json(text.str());
        if (std::abs(set.lambda() - lambda) > 1e-12 * lambda)
            throw InvalidArgument("candidate spec: file lambda differs from --lambda");
        if (set.dimension() != M)
            throw DimensionError("candidate spec: file candidates have the wrong dimension");
        return set;
    }

    std::map<std::string, std::string> params;
    std::stringstream fields(rest);
    for (std::string field; std::getline(fields, field, ',');) {
        const auto eq = field.find('=');
        if (eq == std::string::npos || eq == 0)
            throw InvalidArgument("candidate spec: expected key=value, got '" + field + "'");
        params[field.substr(0, eq)] = field.substr(eq + 1);
    }
    auto take = [&](const std::string& key) -> std::optional<unsigned long long> {
        auto it = params.find(key);
        if (it == params.end()) return std::nullopt;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(it->second, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != it->second.size() || it->second.front() == '-')
            throw InvalidArgument("candidate spec: " + key + " must be a nonnegative integer");
        params.erase(it);
        return v;
    };

    CandidateSet set = [&] {
        if (kind == "single") return single_candidate(lambda, M);
        if (kind == "dyadic") {
            if (M != 2) throw DimensionError("candidate spec: dyadic needs two components");
            const auto R = take("R");
            if (!R) throw InvalidArgument("candidate spec: dyadic needs R=<r>");
            if (*R > 30) throw InvalidArgument("dyadic_bivariate: R too large");
            return dyadic_bivariate(lambda, static_cast<int>(*R));
        }
        if (kind == "random") {
            const auto n = take("n");
            if (!n) throw InvalidArgument("candidate spec: random needs n=<count>");
            const auto seed = take("seed");
            return random_directions(lambda, M, *n, seed ? *seed : default_seed);
        }
        throw InvalidArgument("candidate spec: unknown kind '" + kind + "'");
    }();
    if (!params.empty())
        throw InvalidArgument("candidate spec: unknown parameter '" + params.begin()->first + "'");
    return set;
}

}  // namespace mvtv
