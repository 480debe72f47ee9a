#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mvtv/streaming.hpp"

namespace mvtv {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/* One sample per line, components separated by commas. Blank lines are
 * skipped. The column count is fixed by the first row unless given. */
class CsvReader {
public:
    explicit CsvReader(std::istream& in, std::optional<Eigen::Index> columns = std::nullopt)
        : in_(in), columns_(columns) {}

    std::optional<Vector> next();
    std::size_t line() const { return line_; }
    std::optional<Eigen::Index> columns() const { return columns_; }

private:
    std::istream& in_;
    std::optional<Eigen::Index> columns_;
    std::size_t line_ = 0;
};

/* Reads every row; throws InvalidArgument("no samples") on empty input. */
Matrix read_csv(std::istream& in);
Matrix read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const Matrix& x);
void write_csv_file(const std::string& path, const Matrix& x);

/* {"start", "end", "level", "zeta", "q"}; indices 0-based, end inclusive */
std::string segment_json(const Segment& seg);
std::string provisional_json(std::size_t k, const Vector& level);

}  // namespace mvtv
