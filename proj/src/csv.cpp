#include "condinf/io/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "condinf/errors.hpp"

namespace condinf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
    // Comma-separated; falls back to whitespace separation when no comma is
    // present (Berkeley Earth files are whitespace-delimited).
    std::vector<std::string> fields;
    if (line.find(',') != std::string::npos) {
        std::string field;
        std::istringstream is(line);
        while (std::getline(is, field, ',')) {
            fields.push_back(trim(field));
        }
        if (!line.empty() && line.back() == ',') {
            fields.emplace_back();
        }
    } else {
        std::istringstream is(line);
        std::string field;
        while (is >> field) {
            fields.push_back(field);
        }
    }
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) {
        return false;
    }
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    return in;
}

void write_or_throw(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << content;
}

} // namespace

AnomalySeries parse_anomaly_csv(const std::string& path, int year_from, int year_to) {
    std::ifstream in = open_or_throw(path);

    std::vector<std::pair<int, double>> rows;
    std::string line;
    int line_no = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '%' || stripped[0] == '#') {
            continue;
        }
        const std::vector<std::string> fields = split_fields(stripped);
        double year_value = 0.0;
        if (header_allowed && (fields.empty() || !parse_double(fields[0], year_value))) {
            header_allowed = false; // single header row
            continue;
        }
        header_allowed = false;
        if (fields.size() < 2) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected two numeric fields");
        }
        double anomaly = 0.0;
        if (!parse_double(fields[0], year_value) || !parse_double(fields[1], anomaly)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
        }
        const int year = static_cast<int>(std::llround(year_value));
        if (year < year_from || year > year_to) {
            continue;
        }
        rows.emplace_back(year, anomaly);
    }
    if (rows.empty()) {
        throw NumericDomainError(path + ": no rows inside [" + std::to_string(year_from) + ", " +
                                 std::to_string(year_to) + "]");
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
            throw ParseError(path + ": duplicate year " + std::to_string(rows[i].first));
        }
    }

    AnomalySeries series;
    series.source_path = path;
    series.year.reserve(rows.size());
    series.anomaly.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        series.year.push_back(rows[i].first);
        series.anomaly(static_cast<Eigen::Index>(i)) = rows[i].second;
        if (!std::isfinite(rows[i].second)) {
            throw ParseError(path + ": non-finite anomaly for year " +
                             std::to_string(rows[i].first));
        }
    }
    return series;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#' || stripped[0] == '%') {
            continue;
        }
        if (!seen_header) {
            seen_header = true; // header row of column indices
            continue;
        }
        const std::vector<std::string> fields = split_fields(stripped);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) {
            double v = 0.0;
            if (!parse_double(f, v)) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError(path + ": no data rows");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ostringstream os;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        os << (j ? "," : "") << j;
    }
    os << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << format_double(m(i, j));
        }
        os << "\n";
    }
    write_or_throw(path, os.str());
}

RandomWalkData parse_rw_csv(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::vector<std::vector<std::pair<double, bool>>> rows; // (value, missing)
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#' || stripped[0] == '%') {
            continue;
        }
        const std::vector<std::string> fields = split_fields(stripped);
        std::vector<std::pair<double, bool>> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) {
            std::string lower = f;
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            if (f.empty() || lower == "nan" || lower == "na") {
                row.emplace_back(0.0, true);
                continue;
            }
            double v = 0.0;
            if (!parse_double(f, v)) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
            }
            row.emplace_back(v, false);
        }
        width = std::max(width, row.size());
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2 || width == 0) {
        throw ParseError(path + ": need at least two time-step rows");
    }

    RandomWalkData data;
    data.T = static_cast<int>(rows.size());
    data.n = static_cast<int>(width);
    data.y = Eigen::MatrixXd::Zero(data.T, data.n);
    data.missing.setConstant(data.T, data.n, true);
    for (int t = 0; t < data.T; ++t) {
        const auto& row = rows[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < row.size(); ++i) {
            data.y(t, static_cast<int>(i)) = row[i].first;
            data.missing(t, static_cast<int>(i)) = row[i].second;
        }
    }
    data.validate();
    return data;
}

namespace {

constexpr const char* kCoverageSchema = "condinf coverage v1";
constexpr const char* kBiasSchema = "condinf bias v1";

} // namespace

void write_coverage_csv(const std::string& path, const CoverageReport& report) {
    std::ostringstream os;
    os << "# " << kCoverageSchema << "\n";
    os << "method,component_index,coverage,se,q05,q95\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        for (int c = 0; c < report.n_components; ++c) {
            os << method_name(report.methods[m]) << "," << c << ","
               << format_double(report.coverage(mi, c)) << ","
               << format_double(report.coverage_se(mi, c)) << ","
               << format_double(report.q05(mi, c)) << "," << format_double(report.q95(mi, c))
               << "\n";
        }
    }
    write_or_throw(path, os.str());
}

void write_bias_csv(const std::string& path, const CoverageReport& report) {
    std::ostringstream os;
    os << "# " << kBiasSchema << "\n";
    os << "method,component_index,squared_bias\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        for (int c = 0; c < report.n_components; ++c) {
            os << method_name(report.methods[m]) << "," << c << ","
               << format_double(report.squared_bias(mi, c)) << "\n";
        }
    }
    write_or_throw(path, os.str());
}

std::string report_csv_schema(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        if (stripped[0] == '#') {
            return trim(stripped.substr(1));
        }
        break;
    }
    throw ParseError(path + ": missing schema header comment");
}

namespace {

std::vector<std::vector<std::string>> read_report_rows(const std::string& path,
                                                       const char* schema,
                                                       std::size_t n_fields) {
    if (report_csv_schema(path) != schema) {
        throw ParseError(path + ": expected schema '" + schema + "'");
    }
    std::ifstream in = open_or_throw(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int line_no = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        if (!seen_header) {
            seen_header = true;
            continue;
        }
        std::vector<std::string> fields = split_fields(stripped);
        if (fields.size() != n_fields) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(n_fields) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

double to_double(const std::string& path, const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v)) {
        throw ParseError(path + ": malformed numeric field '" + s + "'");
    }
    return v;
}

} // namespace

CoverageTable read_coverage_csv(const std::string& path) {
    CoverageTable table;
    for (const auto& row : read_report_rows(path, kCoverageSchema, 6)) {
        table.method.push_back(row[0]);
        table.component.push_back(static_cast<int>(to_double(path, row[1])));
        table.coverage.push_back(to_double(path, row[2]));
        table.se.push_back(to_double(path, row[3]));
        table.q05.push_back(to_double(path, row[4]));
        table.q95.push_back(to_double(path, row[5]));
    }
    return table;
}

BiasTable read_bias_csv(const std::string& path) {
    BiasTable table;
    for (const auto& row : read_report_rows(path, kBiasSchema, 3)) {
        table.method.push_back(row[0]);
        table.component.push_back(static_cast<int>(to_double(path, row[1])));
        table.squared_bias.push_back(to_double(path, row[2]));
    }
    return table;
}

} // namespace condinf
