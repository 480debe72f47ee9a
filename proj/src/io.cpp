#include "mvtv/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace mvtv {

namespace {

std::vector<double> as_list(const Vector& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::optional<Vector> CsvReader::next()
{
    std::string text;
    while (std::getline(in_, text)) {
        ++line_;
        std::string_view row = trim(text);
        if (row.empty()) continue;

        std::vector<double> values;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = row.find(',', pos);
            const std::string field(trim(row.substr(pos, comma == std::string_view::npos
                                                             ? std::string_view::npos : comma - pos)));
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v))
                throw ParseError(line_, "malformed value '" + field + "'");
            values.push_back(v);
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }

        const auto n = static_cast<Eigen::Index>(values.size());
        if (columns_ && *columns_ != n)
            throw ParseError(line_, "expected " + std::to_string(*columns_) + " columns, found "
                                        + std::to_string(n));
        columns_ = n;
        return Eigen::Map<const Vector>(values.data(), n);
    }
    return std::nullopt;
}

Matrix read_csv(std::istream& in)
{
    CsvReader reader(in);
    std::vector<Vector> rows;
    while (auto row = reader.next()) rows.push_back(std::move(*row));
    if (rows.empty()) throw InvalidArgument("no samples");
    Matrix y(rows.front().size(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) y.col(static_cast<Eigen::Index>(k)) = rows[k];
    return y;
}

Matrix read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_csv(in);
}

void write_csv(std::ostream& out, const Matrix& x)
{
    char buf[32];
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        for (Eigen::Index m = 0; m < x.rows(); ++m) {
            if (m) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", x(m, k));
            out << buf;
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const Matrix& x)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out, x);
}

std::string segment_json(const Segment& seg)
{
    nlohmann::json j;
    j["start"] = seg.start;
    j["end"] = seg.end;
    j["level"] = as_list(seg.level);
    j["zeta"] = as_list(seg.zeta);
    j["q"] = seg.candidate_index;
    return j.dump();
}

std::string provisional_json(std::size_t k, const Vector& level)
{
    nlohmann::json j;
    j["k"] = k;
    j["provisional"] = as_list(level);
    return j.dump();
}

}  // namespace mvtv
