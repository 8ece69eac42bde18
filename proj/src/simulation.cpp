#include "condinf/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "condinf/conditional.hpp"
#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/models/random_walk.hpp"
#include "condinf/outer.hpp"
#include "condinf/rng.hpp"
#include "condinf/stats.hpp"

namespace condinf {

namespace {

// Stream domains; replicate (i, j) uses {kDataDomain, i, j}.
constexpr std::uint64_t kTruthDomain = 1;
constexpr std::uint64_t kDataDomain = 2;

constexpr double kMaxFailureFraction = 0.05;

struct MethodResult {
    Eigen::VectorXd est;
    Eigen::MatrixXd mse;
};

std::optional<double> gamma_override(const ExperimentConfig& cfg) {
    if (cfg.gamma_c.fixed) {
        return cfg.gamma_c.value;
    }
    return std::nullopt;
}

// Estimator and MSE matrix for one method given a completed fit.
MethodResult method_estimate(Method m, const OuterFit& fit, const PriorMean& prior,
                             const Eigen::MatrixXd& sens, const std::optional<double>& gamma) {
    MethodResult out;
    switch (m) {
        case Method::mode_marginal:
            out.est = fit.inner.psi_hat.values;
            out.mse = marginal_mse(fit.inner, sens, fit.cov_theta).psi_block;
            break;
        case Method::mode_conditional:
            out.est = fit.inner.psi_hat.values;
            out.mse = psd_clamp(conditional_covariance_mode(fit.inner, sens, fit.cov_theta));
            break;
        case Method::bc_conditional:
            out.est = bias_correct(fit.inner, prior);
            out.mse = psd_clamp(mse_bc(fit.inner, prior, sens, fit.cov_theta));
            break;
        case Method::sd_conditional: {
            const ShrinkageDecomposition dec = decompose_shrinkage(fit.inner, gamma);
            out.est = svd_estimate(fit.inner, prior, dec);
            out.mse = mse_sd(fit.inner, prior, sens, fit.cov_theta, dec);
            break;
        }
    }
    return out;
}

void accumulate(TruthPartial& partial, std::size_t method_slot, const Eigen::VectorXd& est,
                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                const Eigen::VectorXd& truth) {
    for (Eigen::Index c = 0; c < truth.size(); ++c) {
        if (lo(c) <= truth(c) && truth(c) <= hi(c)) {
            partial.hits[method_slot](c) += 1.0;
        }
        partial.bias_sum[method_slot](c) += est(c) - truth(c);
    }
}

TruthPartial make_partial(std::size_t truth_index, std::size_t begin_rep, std::size_t end_rep,
                          std::size_t n_methods, int n_components) {
    TruthPartial partial;
    partial.truth_index = truth_index;
    partial.begin_rep = begin_rep;
    partial.end_rep = end_rep;
    partial.hits.assign(n_methods, Eigen::VectorXd::Zero(n_components));
    partial.bias_sum.assign(n_methods, Eigen::VectorXd::Zero(n_components));
    return partial;
}

// Run `process(block)` over blocks 0..n_blocks-1 on up to n_workers threads.
// Blocks are fixed work units, so the schedule cannot affect the results.
template <typename Fn>
void parallel_blocks(std::size_t n_blocks, int n_workers, Fn&& process) {
    const int workers = std::max(1, std::min<int>(n_workers, static_cast<int>(n_blocks)));
    if (workers == 1) {
        for (std::size_t k = 0; k < n_blocks; ++k) {
            process(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                while (true) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= n_blocks) {
                        break;
                    }
                    process(k);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::mode_conditional: return "mode_conditional";
        case Method::mode_marginal: return "mode_marginal";
        case Method::bc_conditional: return "bc_conditional";
        case Method::sd_conditional: return "sd_conditional";
    }
    throw ContractViolation("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
    if (name == "mode_conditional") return Method::mode_conditional;
    if (name == "mode_marginal") return Method::mode_marginal;
    if (name == "bc_conditional") return Method::bc_conditional;
    if (name == "sd_conditional") return Method::sd_conditional;
    throw ContractViolation("method_from_name: unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (n_truths < 1 || n_reps < 1) {
        throw ContractViolation("ExperimentConfig: replicate counts must be >= 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ContractViolation("ExperimentConfig: alpha must lie strictly in (0, 1)");
    }
    if (methods.empty()) {
        throw ContractViolation("ExperimentConfig: at least one method required");
    }
    if (family == Family::rw || family == Family::rw_missing) {
        if (T < 2 || n < 1 || !(sigma_psi > 0.0) || !(sigma_eps > 0.0)) {
            throw ContractViolation("ExperimentConfig: invalid random-walk design");
        }
        for (int t : missing_times) {
            if (t < 0 || t >= T) {
                throw ContractViolation("ExperimentConfig: missing time index out of range");
            }
        }
        if (family == Family::rw && !missing_times.empty()) {
            throw ContractViolation("ExperimentConfig: family 'rw' cannot mask time points");
        }
    } else {
        if (K < 4) {
            throw ContractViolation("ExperimentConfig: K >= 4 required for the GAM design");
        }
    }
    if (gamma_c.fixed && !(gamma_c.value >= 0.0)) {
        throw ContractViolation("ExperimentConfig: fixed gamma_c must be non-negative");
    }
}

CoverageReport aggregate(const std::vector<WorkerOutput>& outputs, const ExperimentConfig& cfg,
                         int n_components) {
    if (outputs.empty()) {
        throw ContractViolation("aggregate: empty worker set");
    }
    std::vector<const WorkerOutput*> ordered;
    ordered.reserve(outputs.size());
    for (const auto& o : outputs) {
        ordered.push_back(&o);
    }
    std::sort(ordered.begin(), ordered.end(), [](const WorkerOutput* a, const WorkerOutput* b) {
        return a->begin_rep < b->begin_rep;
    });
    for (std::size_t k = 1; k < ordered.size(); ++k) {
        if (ordered[k]->begin_rep < ordered[k - 1]->end_rep) {
            throw ContractViolation("aggregate: overlapping replicate index ranges");
        }
    }

    // Merge partials per truth in replicate-index order.
    std::map<std::size_t, TruthPartial> merged;
    const std::size_t n_methods = cfg.methods.size();
    for (const WorkerOutput* out : ordered) {
        for (const TruthPartial& p : out->truths) {
            auto [it, fresh] = merged.try_emplace(p.truth_index, p);
            if (fresh) {
                continue;
            }
            TruthPartial& acc = it->second;
            acc.n_success += p.n_success;
            acc.n_fail += p.n_fail;
            acc.end_rep = std::max(acc.end_rep, p.end_rep);
            for (std::size_t m = 0; m < n_methods; ++m) {
                acc.hits[m] += p.hits[m];
                acc.bias_sum[m] += p.bias_sum[m];
            }
        }
    }

    CoverageReport report;
    report.methods = cfg.methods;
    report.n_components = n_components;
    const auto m_count = static_cast<Eigen::Index>(n_methods);
    report.coverage = Eigen::MatrixXd::Zero(m_count, n_components);
    report.coverage_se = Eigen::MatrixXd::Zero(m_count, n_components);
    report.q05 = Eigen::MatrixXd::Zero(m_count, n_components);
    report.q95 = Eigen::MatrixXd::Zero(m_count, n_components);
    report.squared_bias = Eigen::MatrixXd::Zero(m_count, n_components);
    report.across_function = Eigen::VectorXd::Zero(m_count);

    long total_success = 0;
    int total_fail = 0;
    for (const auto& [index, p] : merged) {
        total_success += p.n_success;
        total_fail += p.n_fail;
    }
    report.metadata.failures = total_fail;

    for (Eigen::Index m = 0; m < m_count; ++m) {
        for (int c = 0; c < n_components; ++c) {
            std::vector<double> per_truth;
            per_truth.reserve(merged.size());
            double cov_mean = 0.0;
            double bias_sq_mean = 0.0;
            int used = 0;
            for (const auto& [index, p] : merged) {
                if (p.n_success == 0) {
                    continue;
                }
                const double cov = p.hits[static_cast<std::size_t>(m)](c) / p.n_success;
                const double bias = p.bias_sum[static_cast<std::size_t>(m)](c) / p.n_success;
                per_truth.push_back(cov);
                cov_mean += cov;
                bias_sq_mean += bias * bias;
                ++used;
            }
            if (used == 0) {
                throw ContractViolation("aggregate: no successful replicates");
            }
            cov_mean /= used;
            bias_sq_mean /= used;
            report.coverage(m, c) = cov_mean;
            report.squared_bias(m, c) = bias_sq_mean;
            report.coverage_se(m, c) = std::sqrt(
                std::max(0.0, cov_mean * (1.0 - cov_mean) / static_cast<double>(total_success)));
            report.q05(m, c) = quantile_type7(per_truth, 0.05);
            report.q95(m, c) = quantile_type7(per_truth, 0.95);
        }
        report.across_function(m) = report.coverage.row(m).mean();
    }
    return report;
}

CoverageReport run_rw_experiment(const ExperimentConfig& cfg, int n_workers) {
    cfg.validate();
    if (cfg.family != ExperimentConfig::Family::rw &&
        cfg.family != ExperimentConfig::Family::rw_missing) {
        throw ContractViolation("run_rw_experiment: family must be rw or rw_missing");
    }
    const auto start_time = std::chrono::steady_clock::now();

    std::vector<bool> mask(static_cast<std::size_t>(cfg.T), false);
    for (int t : cfg.missing_times) {
        mask[static_cast<std::size_t>(t)] = true;
    }
    const bool any_masked = !cfg.missing_times.empty();
    const std::optional<double> gamma = gamma_override(cfg);
    const std::size_t n_methods = cfg.methods.size();

    std::vector<WorkerOutput> outputs(static_cast<std::size_t>(cfg.n_truths));
    parallel_blocks(static_cast<std::size_t>(cfg.n_truths), n_workers, [&](std::size_t i) {
        WorkerOutput out;
        out.begin_rep = i * static_cast<std::size_t>(cfg.n_reps);
        out.end_rep = out.begin_rep + static_cast<std::size_t>(cfg.n_reps);
        TruthPartial partial = make_partial(i, out.begin_rep, out.end_rep, n_methods, cfg.T);

        CounterRng truth_rng(cfg.seed, {kTruthDomain, i});
        const PsiVector psi_true = simulate_rw_truth(cfg.T, cfg.sigma_psi, truth_rng);

        for (int j = 0; j < cfg.n_reps; ++j) {
            CounterRng data_rng(cfg.seed, {kDataDomain, i, static_cast<std::uint64_t>(j)});
            RandomWalkData data = simulate_rw_data(psi_true, cfg.n, cfg.sigma_eps,
                                                   any_masked ? mask : std::vector<bool>{},
                                                   data_rng);
            try {
                const RandomWalkModel model(std::move(data));
                const OuterFit fit = maximize_laml(model, model.initial_theta());
                const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
                const PriorMean prior = model.prior(fit.theta_hat);
                // compute every method first so a failing one drops the whole
                // replicate, never a partially accumulated one
                std::vector<MethodResult> results;
                std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> intervals;
                results.reserve(n_methods);
                intervals.reserve(n_methods);
                for (std::size_t m = 0; m < n_methods; ++m) {
                    results.push_back(method_estimate(cfg.methods[m], fit, prior, sens, gamma));
                    intervals.push_back(wald_ci(results[m].est, results[m].mse, cfg.alpha));
                }
                for (std::size_t m = 0; m < n_methods; ++m) {
                    accumulate(partial, m, results[m].est, intervals[m].first,
                               intervals[m].second, psi_true.values);
                }
                ++partial.n_success;
            } catch (const Error&) {
                ++partial.n_fail;
            }
        }
        out.truths.push_back(std::move(partial));
        outputs[i] = std::move(out);
    });

    CoverageReport report = aggregate(outputs, cfg, cfg.T);
    const long total = static_cast<long>(cfg.n_truths) * cfg.n_reps;
    if (report.metadata.failures > kMaxFailureFraction * static_cast<double>(total)) {
        throw OptimizerFailure("run_rw_experiment: " + std::to_string(report.metadata.failures) +
                               " of " + std::to_string(total) +
                               " fits failed (more than 5%); check the design");
    }
    report.metadata.seed = cfg.seed;
    report.metadata.n_truths = cfg.n_truths;
    report.metadata.n_reps = cfg.n_reps;
    report.metadata.workers = n_workers;
    report.metadata.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return report;
}

CoverageReport run_gam_experiment(const ExperimentConfig& cfg, const SplineData& base,
                                  int n_workers) {
    cfg.validate();
    if (cfg.family != ExperimentConfig::Family::gam) {
        throw ContractViolation("run_gam_experiment: family must be gam");
    }
    const auto start_time = std::chrono::steady_clock::now();

    // Smoothing-parameter uncertainty is excluded from Cov(theta_hat).
    const std::vector<bool> lambda_mask = {false, false, true};

    const SplineModel base_model(base);
    ThetaVector theta_true;
    if (cfg.theta_truth.has_value()) {
        const Eigen::Vector3d& t = *cfg.theta_truth;
        theta_true = SplineModel::theta_from_natural(t(0), t(1), t(2));
    } else {
        const OuterFit base_fit =
            maximize_laml(base_model, base_model.initial_theta(), lambda_mask);
        theta_true = base_fit.theta_hat;
    }
    const InnerSolution base_inner = inner_newton(base_model, theta_true);
    const Eigen::VectorXd truth_curve = base_model.curve(theta_true, base_inner.psi_hat.values);
    const double sigma_true = theta_true.natural(1);

    const auto n_points = static_cast<int>(truth_curve.size());
    const std::size_t n_methods = cfg.methods.size();
    const std::optional<double> gamma = gamma_override(cfg);

    // Fixed replicate blocks keep the aggregation order independent of the
    // worker count.
    constexpr std::size_t kBlock = 25;
    const std::size_t n_blocks = (static_cast<std::size_t>(cfg.n_reps) + kBlock - 1) / kBlock;

    std::vector<WorkerOutput> outputs(n_blocks);
    parallel_blocks(n_blocks, n_workers, [&](std::size_t blk) {
        const std::size_t begin = blk * kBlock;
        const std::size_t end = std::min(begin + kBlock, static_cast<std::size_t>(cfg.n_reps));
        WorkerOutput out;
        out.begin_rep = begin;
        out.end_rep = end;
        TruthPartial partial = make_partial(0, begin, end, n_methods, n_points);

        for (std::size_t j = begin; j < end; ++j) {
            CounterRng rng(cfg.seed, {kDataDomain, 0, j});
            Eigen::VectorXd y_sim(truth_curve.size());
            for (Eigen::Index i = 0; i < y_sim.size(); ++i) {
                y_sim(i) = truth_curve(i) + sigma_true * rng.normal();
            }
            try {
                SplineData rep_data = base;
                rep_data.y = y_sim;
                const SplineModel model(std::move(rep_data));
                const OuterFit fit = maximize_laml(model, theta_true, lambda_mask);
                const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
                const PriorMean prior = model.prior(fit.theta_hat);
                const Eigen::MatrixXd& design = model.data().design;
                const double intercept = fit.theta_hat.natural(0);

                // compute every method before accumulating anything, as in
                // the rw loop
                std::vector<Eigen::VectorXd> curves(n_methods);
                std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> intervals(n_methods);
                for (std::size_t m = 0; m < n_methods; ++m) {
                    const MethodResult res =
                        method_estimate(cfg.methods[m], fit, prior, sens, gamma);
                    // Curve CI by the generalized delta method: the psi MSE
                    // propagated through the design matrix.
                    curves[m] = Eigen::VectorXd::Constant(n_points, intercept) + design * res.est;
                    const Eigen::MatrixXd curve_mse =
                        psd_clamp(design * res.mse * design.transpose());
                    intervals[m] = wald_ci(curves[m], curve_mse, cfg.alpha);
                }
                for (std::size_t m = 0; m < n_methods; ++m) {
                    accumulate(partial, m, curves[m], intervals[m].first, intervals[m].second,
                               truth_curve);
                }
                ++partial.n_success;
            } catch (const Error&) {
                ++partial.n_fail;
            }
        }
        out.truths.push_back(std::move(partial));
        outputs[blk] = std::move(out);
    });

    ExperimentConfig agg_cfg = cfg;
    agg_cfg.n_truths = 1;
    CoverageReport report = aggregate(outputs, agg_cfg, n_points);
    if (report.metadata.failures > kMaxFailureFraction * static_cast<double>(cfg.n_reps)) {
        throw OptimizerFailure("run_gam_experiment: " + std::to_string(report.metadata.failures) +
                               " of " + std::to_string(cfg.n_reps) +
                               " fits failed (more than 5%); check the design");
    }
    report.metadata.seed = cfg.seed;
    report.metadata.n_truths = 1;
    report.metadata.n_reps = cfg.n_reps;
    report.metadata.workers = n_workers;
    report.metadata.source = cfg.data_path;
    report.metadata.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return report;
}

} // namespace condinf
