#include "condinf/io/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "condinf/errors.hpp"

namespace condinf {

namespace {

using nlohmann::ordered_json;

ExperimentConfig::Family family_from_name(const std::string& name) {
    if (name == "rw") return ExperimentConfig::Family::rw;
    if (name == "rw_missing") return ExperimentConfig::Family::rw_missing;
    if (name == "gam") return ExperimentConfig::Family::gam;
    throw ParseError("config: unknown family '" + name + "'");
}

std::string family_name(ExperimentConfig::Family family) {
    switch (family) {
        case ExperimentConfig::Family::rw: return "rw";
        case ExperimentConfig::Family::rw_missing: return "rw_missing";
        case ExperimentConfig::Family::gam: return "gam";
    }
    return "rw";
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.family = family_from_name(j.at("family").get<std::string>());

        if (cfg.family == ExperimentConfig::Family::gam) {
            cfg.K = j.value("K", cfg.K);
            cfg.data_path = j.value("data", std::string{});
            cfg.year_from = j.value("year_from", cfg.year_from);
            cfg.year_to = j.value("year_to", cfg.year_to);
            if (j.contains("theta_truth")) {
                const auto& t = j.at("theta_truth");
                cfg.theta_truth = Eigen::Vector3d(t.at("intercept").get<double>(),
                                                  t.at("sigma").get<double>(),
                                                  t.at("lambda").get<double>());
            }
            cfg.n_truths = 1;
        } else {
            cfg.T = j.value("T", cfg.T);
            cfg.n = j.value("n", cfg.n);
            cfg.sigma_psi = j.value("sigma_psi", cfg.sigma_psi);
            cfg.sigma_eps = j.value("sigma_eps", cfg.sigma_eps);
            if (j.contains("missing_times")) {
                cfg.missing_times = j.at("missing_times").get<std::vector<int>>();
            }
        }

        cfg.n_truths = j.value("n_truths", cfg.n_truths);
        cfg.n_reps = j.value("n_reps", cfg.n_reps);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.seed = j.value("seed", cfg.seed);

        if (j.contains("gamma_c")) {
            const auto& g = j.at("gamma_c");
            if (g.is_string()) {
                if (g.get<std::string>() != "auto") {
                    throw ParseError(origin + ": gamma_c must be \"auto\" or a number");
                }
                cfg.gamma_c = {};
            } else {
                cfg.gamma_c.fixed = true;
                cfg.gamma_c.value = g.get<double>();
            }
        }

        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& name : j.at("methods")) {
                cfg.methods.push_back(method_from_name(name.get<std::string>()));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(), path);
}

std::string report_to_json(const CoverageReport& report) {
    ordered_json j;
    j["schema"] = "condinf report v1";
    j["n_components"] = report.n_components;

    ordered_json methods = ordered_json::array();
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        ordered_json entry;
        entry["method"] = method_name(report.methods[m]);
        entry["across_function_coverage"] = report.across_function(mi);
        const auto row_to_array = [&](const Eigen::MatrixXd& mat) {
            ordered_json arr = ordered_json::array();
            for (int c = 0; c < report.n_components; ++c) {
                arr.push_back(mat(mi, c));
            }
            return arr;
        };
        entry["coverage"] = row_to_array(report.coverage);
        entry["se"] = row_to_array(report.coverage_se);
        entry["q05"] = row_to_array(report.q05);
        entry["q95"] = row_to_array(report.q95);
        entry["squared_bias"] = row_to_array(report.squared_bias);
        methods.push_back(std::move(entry));
    }
    j["methods"] = std::move(methods);

    ordered_json meta;
    meta["seed"] = report.metadata.seed;
    meta["n_truths"] = report.metadata.n_truths;
    meta["n_reps"] = report.metadata.n_reps;
    meta["failures"] = report.metadata.failures;
    meta["workers"] = report.metadata.workers;
    meta["elapsed_seconds"] = report.metadata.elapsed_seconds;
    meta["source"] = report.metadata.source;
    j["run_metadata"] = std::move(meta);
    return j.dump(2) + "\n";
}

void write_report_json(const std::string& path, const CoverageReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << report_to_json(report);
}

} // namespace condinf
