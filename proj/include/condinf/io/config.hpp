#pragma once

#include <string>

#include "condinf/simulation.hpp"

namespace condinf {

// Experiment configuration as JSON, mirroring ExperimentConfig field for
// field. gamma_c is either the string "auto" or a number.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& origin);

// Full report (summaries plus run metadata) as JSON.
std::string report_to_json(const CoverageReport& report);
void write_report_json(const std::string& path, const CoverageReport& report);

} // namespace condinf
