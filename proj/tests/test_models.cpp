#include <doctest.h>

#include <cmath>
#include <vector>

#include "condinf/errors.hpp"
#include "condinf/fd.hpp"
#include "condinf/laplace.hpp"
#include "condinf/models/random_walk.hpp"
#include "condinf/models/spline.hpp"
#include "condinf/rng.hpp"
#include "condinf/stats.hpp"

#include "oracles.hpp"

using namespace condinf;

TEST_CASE("rw truth simulator: first two moments over many paths") {
    const int paths = 10000;
    const int T = 50;
    double sumsq = 0.0;
    long count = 0;
    double first_sum = 0.0;
    double last_sum = 0.0;
    for (int k = 0; k < paths; ++k) {
        CounterRng rng(77, {1, static_cast<std::uint64_t>(k)});
        const PsiVector psi = simulate_rw_truth(T, 1.0, rng);
        first_sum += psi.values(0);
        last_sum += psi.values(T - 1);
        for (int t = 1; t < T; ++t) {
            const double d = psi.values(t) - psi.values(t - 1);
            sumsq += d * d;
            ++count;
        }
    }
    CHECK(std::abs(sumsq / count - 1.0) < 0.03);
    // zero mean: psi_t has variance t+1, so the band scales accordingly
    CHECK(std::abs(first_sum / paths) < 3.0 / std::sqrt(static_cast<double>(paths)));
    CHECK(std::abs(last_sum / paths) < 3.0 * std::sqrt(static_cast<double>(T) / paths));
}

TEST_CASE("rw truth simulator: degenerate noise and determinism") {
    CounterRng tiny(3, {1});
    const PsiVector psi = simulate_rw_truth(2, 1e-12, tiny);
    CHECK(std::abs(psi.values(0)) < 1e-10);
    CHECK(std::abs(psi.values(1)) < 1e-10);

    CounterRng a(9, {1, 4});
    CounterRng b(9, {1, 4});
    const PsiVector pa = simulate_rw_truth(20, 1.0, a);
    const PsiVector pb = simulate_rw_truth(20, 1.0, b);
    CHECK((pa.values.array() == pb.values.array()).all());

    CounterRng bad(1, {1});
    CHECK_THROWS_AS(simulate_rw_truth(10, -1.0, bad), NumericDomainError);
}

TEST_CASE("rw data simulator: mean of replicated cells tracks the truth") {
    const int T = 50;
    const int n = 5;
    const int reps = 1000;
    CounterRng truth_rng(15, {1});
    const PsiVector psi = simulate_rw_truth(T, 1.0, truth_rng);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(T);
    for (int r = 0; r < reps; ++r) {
        CounterRng rng(15, {2, static_cast<std::uint64_t>(r)});
        const RandomWalkData data = simulate_rw_data(psi, n, 0.5, {}, rng);
        for (int t = 0; t < T; ++t) {
            mean(t) += data.y.row(t).mean();
        }
    }
    mean /= reps;
    const double se = 0.5 / std::sqrt(static_cast<double>(n) * reps);
    int within = 0;
    for (int t = 0; t < T; ++t) {
        CHECK(std::abs(mean(t) - psi.values(t)) < 5.0 * se);
        if (std::abs(mean(t) - psi.values(t)) < 3.0 * se) {
            ++within;
        }
    }
    CHECK(within >= 48); // 3-SE bands hold for nearly all of the 50 steps
}

TEST_CASE("rw data simulator: masking and degenerate noise") {
    CounterRng rng(8, {2});
    const PsiVector psi = simulate_rw_truth(50, 1.0, rng);

    std::vector<bool> mask(50, false);
    mask[47] = mask[48] = mask[49] = true;
    CounterRng rng2(8, {3});
    const RandomWalkData data = simulate_rw_data(psi, 5, 0.5, mask, rng2);
    for (int t = 0; t < 50; ++t) {
        for (int i = 0; i < 5; ++i) {
            CHECK(data.missing(t, i) == (t >= 47));
        }
    }

    CounterRng rng3(8, {4});
    const RandomWalkData tiny = simulate_rw_data(psi, 1, 1e-12, {}, rng3);
    CHECK((tiny.y.col(0) - psi.values).cwiseAbs().maxCoeff() < 1e-10);

    std::vector<bool> all_masked(50, true);
    CounterRng rng4(8, {5});
    CHECK_THROWS_AS(simulate_rw_data(psi, 5, 0.5, all_masked, rng4), ContractViolation);
}

TEST_CASE("rw model construction: units, hess_c entries, l_r at zero") {
    CounterRng rng(25, {1});
    const PsiVector psi = simulate_rw_truth(50, 1.0, rng);
    std::vector<bool> mask(50, false);
    mask[47] = mask[48] = mask[49] = true;
    CounterRng rng2(25, {2});
    const RandomWalkModel model(simulate_rw_data(psi, 5, 0.5, mask, rng2));

    int with_data = 0;
    for (bool b : model.unit_has_data()) {
        with_data += b ? 1 : 0;
    }
    CHECK(with_data == 47);
    CHECK(model.obs_units() == 50);

    const double sigma_psi = 1.0;
    const double sigma_eps = 0.5;
    const ThetaVector theta = RandomWalkModel::theta_from_sigmas(sigma_psi, sigma_eps);
    const JointEval ev = eval_joint(model, PsiVector(Eigen::VectorXd::Zero(50)), theta);
    CHECK(ev.hess_c()(0, 0) == doctest::Approx(-20.0)); // -n / sigma_eps^2
    CHECK(ev.hess_c()(49, 49) == doctest::Approx(0.0)); // masked row
    CHECK(ev.l_r ==
          doctest::Approx(-0.5 * 50.0 * std::log(2.0 * kPi * sigma_psi * sigma_psi)).epsilon(1e-12));
}

TEST_CASE("laml equals the dense-MVN marginal for the rw model") {
    for (std::uint64_t k = 0; k < 20; ++k) {
        CounterRng trng(100 + k, {1});
        const PsiVector psi = simulate_rw_truth(30, 1.0, trng);
        std::vector<bool> mask(30, false);
        if (k % 3 == 0) {
            mask[27] = mask[28] = mask[29] = true;
        }
        CounterRng drng(100 + k, {2});
        RandomWalkData data = simulate_rw_data(psi, 2, 0.5, mask, drng);

        CounterRng prng(100 + k, {3});
        const double sigma_psi = std::exp(0.4 * prng.normal());
        const double sigma_eps = 0.5 * std::exp(0.3 * prng.normal());
        const RandomWalkModel model(data);
        const double via_laplace =
            laml(model, RandomWalkModel::theta_from_sigmas(sigma_psi, sigma_eps));
        const double via_dense = oracles::rw_marginal_loglik(data, sigma_psi, sigma_eps);
        CHECK(std::abs(via_laplace - via_dense) < 1e-8);
    }
}

TEST_CASE("laml gradient agrees with the analytic dense-MVN score") {
    CounterRng trng(200, {1});
    const PsiVector psi = simulate_rw_truth(25, 1.0, trng);
    CounterRng drng(200, {2});
    RandomWalkData data = simulate_rw_data(psi, 3, 0.5, {}, drng);
    const RandomWalkModel model(data);

    const auto field = [&](const Eigen::VectorXd& v) { return laml(model, model.make_theta(v)); };
    Eigen::VectorXd at(2);
    at << std::log(0.9), std::log(0.55);
    const Eigen::VectorXd fd = fd_gradient(field, at);
    const Eigen::Vector2d analytic =
        oracles::rw_marginal_score(data, std::exp(at(0)), std::exp(at(1)));
    CHECK((fd - analytic).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, analytic.norm()));
}

TEST_CASE("cubic B-spline basis: partition of unity and penalty null space") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(161, 1850.0, 2010.0);
    const CubicSplineBasis basis = cubic_bspline_basis(x, 12);

    // raw rows sum to one everywhere
    const Eigen::VectorXd row_sums = basis.raw_design.rowwise().sum();
    CHECK((row_sums.array() - 1.0).abs().maxCoeff() < 1e-12);

    // raw penalty annihilates the coefficients of a linear fit
    Eigen::VectorXd target = 2.0 + 0.01 * x.array() - 18.5;
    const Eigen::VectorXd beta =
        basis.raw_design.colPivHouseholderQr().solve(target);
    CHECK((basis.raw_design * beta - target).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((basis.raw_penalty * beta).cwiseAbs().maxCoeff() <
          1e-8 * std::max(1.0, basis.raw_penalty.cwiseAbs().maxCoeff()));

    // the constrained penalty annihilates the reduced linear coefficients
    const Eigen::VectorXd beta_c = basis.design.colPivHouseholderQr().solve(target);
    CHECK((basis.penalty * beta_c).cwiseAbs().maxCoeff() <
          1e-8 * std::max(1.0, basis.penalty.cwiseAbs().maxCoeff()));

    // centered columns
    CHECK(basis.design.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);

    CHECK_THROWS_AS(cubic_bspline_basis(Eigen::VectorXd::LinSpaced(5, 0.0, 1.0), 12),
                    NumericDomainError);
}

TEST_CASE("penalty rank on the 1850-2010 grid with K = 50") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(161, 1850.0, 2010.0);
    const CubicSplineBasis basis = cubic_bspline_basis(x, 50);

    // rank by SVD: K - 2 both for the raw penalty and after the sum-to-zero
    // constraint absorbs one of the two null directions.
    Eigen::JacobiSVD<Eigen::MatrixXd> raw_svd(basis.raw_penalty);
    const Eigen::VectorXd raw_sv = raw_svd.singularValues();
    const int raw_rank = static_cast<int>((raw_sv.array() > 1e-10 * raw_sv(0)).count());
    CHECK(raw_rank == 48);
    CHECK(basis.penalty_rank == 48);
    CHECK(basis.design.cols() == 49);
}

TEST_CASE("spline model: hess_j, ridge identity, lambda limits") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(40, 0.0, 10.0);
    CounterRng rng(55, {1});
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        y(i) = 0.3 + std::sin(0.8 * x(i)) + 0.15 * rng.normal();
    }
    const SplineData data = SplineData::from_xy(x, y, 10);
    const SplineModel model(data);

    const double sigma = 0.2;
    const double lambda = 3.0;
    const ThetaVector theta = SplineModel::theta_from_natural(0.3, sigma, lambda);
    CounterRng prng(55, {2});
    Eigen::VectorXd psi(model.dim_psi());
    for (int i = 0; i < model.dim_psi(); ++i) {
        psi(i) = 0.5 * prng.normal();
    }
    const JointEval ev = eval_joint(model, PsiVector(psi), theta);

    const Eigen::MatrixXd expected_hess =
        -(data.design.transpose() * data.design) / (sigma * sigma) - lambda * data.penalty;
    CHECK((ev.hess_j - expected_hess).cwiseAbs().maxCoeff() <
          1e-9 * expected_hess.cwiseAbs().maxCoeff());

    // posterior mode equals the ridge solve
    const InnerSolution sol = inner_newton(model, theta);
    const Eigen::VectorXd ridge = oracles::spline_ridge_solve(data, 0.3, sigma, lambda);
    CHECK((sol.psi_hat.values - ridge).cwiseAbs().maxCoeff() < 1e-8);

    // lambda -> 0: unpenalized least squares
    const ThetaVector theta0 = SplineModel::theta_from_natural(0.3, sigma, 1e-10);
    const InnerSolution sol0 = inner_newton(model, theta0);
    const Eigen::VectorXd ls = data.design.colPivHouseholderQr().solve(
        y - Eigen::VectorXd::Constant(40, 0.3));
    CHECK((sol0.psi_hat.values - ls).cwiseAbs().maxCoeff() < 1e-6);

    // doubling lambda shifts l_r by rank/2 log 2 - lambda/2 psi'S psi
    const ThetaVector theta2 = SplineModel::theta_from_natural(0.3, sigma, 2.0 * lambda);
    const JointEval ev2 = eval_joint(model, PsiVector(psi), theta2);
    const double quad = psi.dot(data.penalty * psi);
    const double expected_shift = 0.5 * data.penalty_rank * std::log(2.0) - 0.5 * lambda * quad;
    CHECK(ev2.l_r - ev.l_r == doctest::Approx(expected_shift).epsilon(1e-10));
}

TEST_CASE("external design/penalty pair builds a model") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(25, 0.0, 5.0);
    const CubicSplineBasis basis = cubic_bspline_basis(x, 8);
    CounterRng rng(66, {1});
    Eigen::VectorXd y(25);
    for (int i = 0; i < 25; ++i) {
        y(i) = 0.1 * x(i) + 0.2 * rng.normal();
    }
    const SplineData data = SplineData::external(x, y, basis.design, basis.penalty);
    CHECK(data.penalty_rank == basis.penalty_rank);
    const SplineModel model(data);
    CHECK(model.dim_psi() == basis.design.cols());
    CHECK_NOTHROW(laml(model, SplineModel::theta_from_natural(0.0, 0.3, 1.0)));
}
