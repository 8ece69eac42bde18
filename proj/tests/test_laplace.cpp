#include <doctest.h>

#include <cmath>

#include "condinf/errors.hpp"
#include "condinf/laplace.hpp"
#include "condinf/models/random_walk.hpp"
#include "condinf/models/scalar_gaussian.hpp"
#include "condinf/rng.hpp"
#include "condinf/stats.hpp"

#include "oracles.hpp"

using namespace condinf;

namespace {

// Non-quadratic concave joint likelihood used to exercise multiple Newton
// steps: l_c = -(y - psi)^2 / 2, l_r = -psi^4 / 4 - psi^2 / 2.
class QuarticModel : public Model {
public:
    explicit QuarticModel(double y) : y_(y) {}
    int dim_psi() const override { return 1; }
    int dim_theta() const override { return 1; }
    JointEval eval(const PsiVector& psi, const ThetaVector&) const override {
        const double p = psi.values(0);
        JointEval ev;
        ev.l_c = -0.5 * (y_ - p) * (y_ - p);
        ev.l_r = -0.25 * p * p * p * p - 0.5 * p * p;
        ev.grad_psi = Eigen::VectorXd::Constant(1, (y_ - p) - p * p * p - p);
        ev.hess_j = Eigen::MatrixXd::Constant(1, 1, -1.0 - 3.0 * p * p - 1.0);
        ev.hess_r = Eigen::MatrixXd::Constant(1, 1, -3.0 * p * p - 1.0);
        ev.cross_theta = Eigen::MatrixXd::Zero(1, 1);
        return ev;
    }
    PriorMean prior(const ThetaVector&) const override {
        return {Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1)};
    }
    int obs_units() const override { return 1; }
    const std::vector<bool>& unit_has_data() const override { return has_data_; }
    ThetaVector make_theta(const Eigen::VectorXd& v) const override {
        return {v, {"unused"}, {Transform::identity}};
    }

private:
    double y_;
    std::vector<bool> has_data_{true};
};

// Model with no random effects at all.
class EmptyPsiModel : public Model {
public:
    int dim_psi() const override { return 0; }
    int dim_theta() const override { return 1; }
    JointEval eval(const PsiVector&, const ThetaVector& theta) const override {
        JointEval ev;
        ev.l_c = -0.5 * theta.values(0) * theta.values(0);
        ev.l_r = 0.0;
        ev.grad_psi = Eigen::VectorXd(0);
        ev.hess_j = Eigen::MatrixXd(0, 0);
        ev.hess_r = Eigen::MatrixXd(0, 0);
        ev.cross_theta = Eigen::MatrixXd(0, 1);
        return ev;
    }
    PriorMean prior(const ThetaVector&) const override {
        return {Eigen::VectorXd(0), Eigen::MatrixXd(0, 1)};
    }
    int obs_units() const override { return 1; }
    const std::vector<bool>& unit_has_data() const override { return has_data_; }
    ThetaVector make_theta(const Eigen::VectorXd& v) const override {
        return {v, {"t"}, {Transform::identity}};
    }

private:
    std::vector<bool> has_data_{true};
};

RandomWalkData small_rw(std::uint64_t seed, int T, int n) {
    CounterRng trng(seed, {1});
    const PsiVector psi = simulate_rw_truth(T, 1.0, trng);
    CounterRng drng(seed, {2});
    return simulate_rw_data(psi, n, 0.5, {}, drng);
}

} // namespace

TEST_CASE("scalar Gaussian mode is the precision-weighted mean") {
    const ModelHandle model = build_scalar_gaussian_model({Eigen::VectorXd::Constant(1, 1.0)});
    const ThetaVector theta = ScalarGaussianModel::theta_from_sigmas(1.0, 0.5);
    const InnerSolution sol = inner_newton(*model, theta);
    CHECK(sol.psi_hat.values(0) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("without data the mode is the prior mean and no steps are taken") {
    const ModelHandle model = build_scalar_gaussian_model({Eigen::VectorXd()});
    const ThetaVector theta = ScalarGaussianModel::theta_from_sigmas(1.0, 0.5);
    const InnerSolution sol = inner_newton(*model, theta);
    CHECK(sol.psi_hat.values(0) == doctest::Approx(0.0));
    CHECK(sol.iterations == 0);
}

TEST_CASE("rw inner problem converges in one Newton step from zero") {
    const RandomWalkModel model(small_rw(7, 25, 4));
    const ThetaVector theta = RandomWalkModel::theta_from_sigmas(1.0, 0.5);
    const InnerSolution sol =
        inner_newton(model, theta, PsiVector(Eigen::VectorXd::Zero(25)));
    CHECK(sol.iterations == 1);
    CHECK(sol.at_mode.grad_psi.lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("laml: scalar closed form, dense-MVN oracle, empty-psi edge") {
    const ModelHandle scalar = build_scalar_gaussian_model({Eigen::VectorXd::Constant(1, 1.0)});
    const ThetaVector theta = ScalarGaussianModel::theta_from_sigmas(1.0, 0.5);
    CHECK(laml(*scalar, theta) ==
          doctest::Approx(normal_logpdf(1.0, 0.0, std::sqrt(1.25))).epsilon(1e-14));

    RandomWalkData data = small_rw(17, 20, 2);
    const RandomWalkModel rw(data);
    const double via_laplace = laml(rw, RandomWalkModel::theta_from_sigmas(1.1, 0.45));
    CHECK(via_laplace == doctest::Approx(oracles::rw_marginal_loglik(data, 1.1, 0.45)).epsilon(1e-10));

    const EmptyPsiModel empty;
    const ThetaVector t0 = empty.make_theta(Eigen::VectorXd::Constant(1, 0.7));
    CHECK(laml(empty, t0) == doctest::Approx(-0.5 * 0.49));
}

TEST_CASE("laml is invariant to the inner starting point") {
    const RandomWalkModel model(small_rw(27, 15, 3));
    const ThetaVector theta = RandomWalkModel::theta_from_sigmas(0.9, 0.6);
    const double reference = inner_newton(model, theta).laml;
    CounterRng rng(28, {1});
    for (int k = 0; k < 5; ++k) {
        Eigen::VectorXd psi0(15);
        for (int i = 0; i < 15; ++i) {
            psi0(i) = 3.0 * rng.normal();
        }
        const InnerSolution sol = inner_newton(model, theta, PsiVector(psi0));
        CHECK(std::abs(sol.laml - reference) < 1e-10);
    }
}

TEST_CASE("newton handles a non-quadratic objective and never decreases l_j") {
    const QuarticModel model(2.5);
    const ThetaVector theta = model.make_theta(Eigen::VectorXd::Zero(1));
    const PsiVector start(Eigen::VectorXd::Constant(1, -3.0));
    const double l_start = eval_joint(model, start, theta).l_j();
    const InnerSolution sol = inner_newton(model, theta, start);
    CHECK(sol.iterations > 1);
    CHECK(sol.at_mode.l_j() >= l_start);
    CHECK(sol.at_mode.grad_psi.lpNorm<Eigen::Infinity>() <
          1e-8 * std::max(1.0, std::abs(sol.at_mode.l_j())));
    // mode solves y - p = p^3 + p
    const double p = sol.psi_hat.values(0);
    CHECK(2.5 - p == doctest::Approx(p * p * p + p).epsilon(1e-9));
}

TEST_CASE("dpsi_dtheta: scalar refit check and zero cross derivative") {
    const ModelHandle scalar = build_scalar_gaussian_model({Eigen::VectorXd::Constant(1, 1.0)});
    const ThetaVector theta = ScalarGaussianModel::theta_from_sigmas(1.0, 0.5);
    const InnerSolution sol = inner_newton(*scalar, theta);
    const Eigen::MatrixXd sens = dpsi_dtheta(sol);
    const Eigen::MatrixXd refit = oracles::refit_sensitivity(*scalar, theta);
    CHECK((sens - refit).cwiseAbs().maxCoeff() < 1e-5);
    // d psi_hat / d log sigma_eps = -2 y k c / (k + c)^2 = -0.32 at y = 1
    CHECK(sens(0, 1) == doctest::Approx(-0.32).epsilon(1e-9));

    const QuarticModel quartic(1.0);
    const InnerSolution qsol =
        inner_newton(quartic, quartic.make_theta(Eigen::VectorXd::Zero(1)));
    CHECK(dpsi_dtheta(qsol).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("dpsi_dtheta matches refit finite differences on the rw model") {
    for (std::uint64_t k = 0; k < 5; ++k) {
        const RandomWalkModel model(small_rw(40 + k, 20, 3));
        const ThetaVector theta = RandomWalkModel::theta_from_sigmas(1.0, 0.5);
        const InnerSolution sol = inner_newton(model, theta);
        const Eigen::MatrixXd sens = dpsi_dtheta(sol);
        const Eigen::MatrixXd refit = oracles::refit_sensitivity(model, theta);
        CHECK((sens - refit).cwiseAbs().maxCoeff() < 1e-4);
    }
}
