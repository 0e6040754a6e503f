#pragma once

// Numeric CSV input: a header row, then comma-separated decimal numbers.
// Errors carry 1-based line and column numbers.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mapereg/error.hpp"
#include "mapereg/kernel.hpp"
#include "mapereg/regressor.hpp"

namespace mapereg {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string where(const std::string& source, std::size_t line, std::size_t column) {
    return source + ":" + std::to_string(line) + ":" + std::to_string(column);
}

inline double parse_number(std::string_view field, const std::string& source, std::size_t line, std::size_t column) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw input_error(where(source, line, column) + ": expected a number, got '" + std::string(field) + "'");
    return value;
}

}  // namespace detail

/// Parses a header plus numeric rows. Blank lines are skipped; every row must
/// have as many fields as the header.
inline CsvTable read_csv(std::istream& in, const std::string& source = "<input>") {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        if (detail::trim(view).empty()) continue;
        const auto fields = detail::split_fields(view);
        if (!have_header) {
            for (std::size_t c = 0; c < fields.size(); ++c) {
                if (fields[c].empty())
                    throw input_error(detail::where(source, line_no, c + 1) + ": empty column name in header");
                table.header.emplace_back(fields[c]);
            }
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw input_error(detail::where(source, line_no, std::min(fields.size(), table.header.size()) + 1) +
                              ": expected " + std::to_string(table.header.size()) + " fields, found " +
                              std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row.push_back(detail::parse_number(fields[c], source, line_no, c + 1));
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw input_error(source + ": missing header row");
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    return read_csv(in, path);
}

/// Data file: every column but the last is a feature, the last is the target.
inline Dataset dataset_from_table(const CsvTable& table, const std::string& source = "<input>") {
    if (table.header.size() < 2)
        throw input_error(source + ": a data file needs at least one feature column and a target column");
    if (table.rows.empty()) throw input_error(source + ": no data rows");
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto d = static_cast<Eigen::Index>(table.header.size() - 1);
    Dataset data{Matrix(n, d), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j) data.X(i, j) = row[static_cast<std::size_t>(j)];
        data.y(i) = row.back();
    }
    return data;
}

inline Dataset read_dataset(const std::string& path) { return dataset_from_table(read_csv_file(path), path); }

/// Feature rows for prediction. A table with exactly `dim` columns is all
/// features; one with `dim + 1` is a data file whose target column is ignored.
inline Matrix features_from_table(const CsvTable& table, Eigen::Index dim, const std::string& source = "<input>") {
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    if (cols != dim && cols != dim + 1)
        throw input_error(source + ": model expects " + std::to_string(dim) + " features, file has " +
                          std::to_string(cols) + " columns");
    Matrix X(static_cast<Eigen::Index>(table.rows.size()), dim);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < dim; ++j) X(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return X;
}

}  // namespace mapereg
