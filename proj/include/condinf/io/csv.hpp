#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "condinf/models/random_walk.hpp"
#include "condinf/simulation.hpp"

namespace condinf {

// Annual temperature anomaly series.
struct AnomalySeries {
    std::vector<int> year;    // strictly increasing
    Eigen::VectorXd anomaly;
    std::string source_path;
};

// Reads (year, anomaly) pairs from the first two numeric fields of each row.
// Lines starting with '%' or '#' and a leading non-numeric header row are
// skipped; rows are filtered to [year_from, year_to] inclusive and sorted;
// duplicate years are rejected.
AnomalySeries parse_anomaly_csv(const std::string& path, int year_from, int year_to);

// Plain rectangular numeric CSV with a header row of column indices.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

// Random-walk observations: one row per time step, comma-separated cells,
// empty or "nan" cells are missing.
RandomWalkData parse_rw_csv(const std::string& path);

// Report tables round-trip through versioned CSV schemas:
//   coverage v1: method,component_index,coverage,se,q05,q95
//   bias v1:     method,component_index,squared_bias
void write_coverage_csv(const std::string& path, const CoverageReport& report);
void write_bias_csv(const std::string& path, const CoverageReport& report);

struct CoverageTable {
    std::vector<std::string> method;
    std::vector<int> component;
    std::vector<double> coverage;
    std::vector<double> se;
    std::vector<double> q05;
    std::vector<double> q95;
};

struct BiasTable {
    std::vector<std::string> method;
    std::vector<int> component;
    std::vector<double> squared_bias;
};

CoverageTable read_coverage_csv(const std::string& path);
BiasTable read_bias_csv(const std::string& path);

// First header-comment line of a report CSV ("condinf coverage v1", ...).
std::string report_csv_schema(const std::string& path);

} // namespace condinf
