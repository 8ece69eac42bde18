#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace condinf {

// Map from the unconstrained working scale to the natural scale.
enum class Transform { identity, exp };

// Model parameters on an unconstrained scale (variance-type parameters are
// stored as logarithms; each component carries its back-transform).
struct ThetaVector {
    Eigen::VectorXd values;
    std::vector<std::string> labels;
    std::vector<Transform> transforms;

    int dim() const { return static_cast<int>(values.size()); }
    double natural(int i) const;
    ThetaVector with_values(const Eigen::VectorXd& v) const;
    void validate() const;
};

// Random effects / basis coefficients.
struct PsiVector {
    Eigen::VectorXd values;

    PsiVector() = default;
    explicit PsiVector(Eigen::VectorXd v) : values(std::move(v)) {}

    int dim() const { return static_cast<int>(values.size()); }
    void validate() const;
};

// Joint log-likelihood value and derivative blocks at one (psi, theta) point.
// l_j = l_c + l_r; hess_j and hess_r are second derivatives in psi;
// cross_theta is d^2 l_j / d psi d theta'.
struct JointEval {
    double l_c = 0.0;
    double l_r = 0.0;
    Eigen::VectorXd grad_psi;
    Eigen::MatrixXd hess_j;
    Eigen::MatrixXd hess_r;
    Eigen::MatrixXd cross_theta;

    double l_j() const { return l_c + l_r; }
    Eigen::MatrixXd hess_c() const { return hess_j - hess_r; }
};

// Prior mean E{Psi}(theta) and its Jacobian in theta.
struct PriorMean {
    Eigen::VectorXd mean;
    Eigen::MatrixXd jacobian_theta; // dim(psi) x dim(theta)
};

// Abstract joint model l_j(psi, theta) = l_c + l_r. Evaluation must be
// deterministic and side-effect-free; handles are safe to share across
// threads.
class Model {
public:
    virtual ~Model() = default;

    virtual int dim_psi() const = 0;
    virtual int dim_theta() const = 0;
    virtual JointEval eval(const PsiVector& psi, const ThetaVector& theta) const = 0;
    virtual PriorMean prior(const ThetaVector& theta) const = 0;

    // Observational units and which of them carry any data.
    virtual int obs_units() const = 0;
    virtual const std::vector<bool>& unit_has_data() const = 0;

    // Wrap an unconstrained vector with this model's labels and transforms.
    virtual ThetaVector make_theta(const Eigen::VectorXd& unconstrained) const = 0;
};

using ModelHandle = std::shared_ptr<const Model>;

// Validated evaluation: checks dimensions against the model, evaluates, and
// rejects non-finite results.
JointEval eval_joint(const Model& model, const PsiVector& psi, const ThetaVector& theta);

} // namespace condinf
