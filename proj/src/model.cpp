#include "condinf/model.hpp"

#include <cmath>

#include "condinf/errors.hpp"

namespace condinf {

double ThetaVector::natural(int i) const {
    switch (transforms.at(static_cast<std::size_t>(i))) {
        case Transform::identity:
            return values(i);
        case Transform::exp:
            return std::exp(values(i));
    }
    throw ContractViolation("ThetaVector: unknown transform");
}

ThetaVector ThetaVector::with_values(const Eigen::VectorXd& v) const {
    if (v.size() != values.size()) {
        throw ContractViolation("ThetaVector::with_values: dimension mismatch");
    }
    ThetaVector out = *this;
    out.values = v;
    return out;
}

void ThetaVector::validate() const {
    if (!values.allFinite()) {
        throw ContractViolation("ThetaVector: values must be finite");
    }
    if (labels.size() != static_cast<std::size_t>(values.size()) ||
        transforms.size() != static_cast<std::size_t>(values.size())) {
        throw ContractViolation("ThetaVector: labels/transforms length must equal values length");
    }
}

void PsiVector::validate() const {
    if (!values.allFinite()) {
        throw ContractViolation("PsiVector: values must be finite");
    }
}

JointEval eval_joint(const Model& model, const PsiVector& psi, const ThetaVector& theta) {
    psi.validate();
    theta.validate();
    if (psi.dim() != model.dim_psi()) {
        throw ContractViolation("eval_joint: psi dimension does not match model");
    }
    if (theta.dim() != model.dim_theta()) {
        throw ContractViolation("eval_joint: theta dimension does not match model");
    }

    JointEval ev = model.eval(psi, theta);

    const int p = model.dim_psi();
    const int q = model.dim_theta();
    if (ev.grad_psi.size() != p || ev.hess_j.rows() != p || ev.hess_j.cols() != p ||
        ev.hess_r.rows() != p || ev.hess_r.cols() != p || ev.cross_theta.rows() != p ||
        ev.cross_theta.cols() != q) {
        throw ContractViolation("eval_joint: model returned blocks of wrong dimension");
    }
    if (!std::isfinite(ev.l_c) || !std::isfinite(ev.l_r) || !ev.grad_psi.allFinite() ||
        !ev.hess_j.allFinite() || !ev.hess_r.allFinite() || !ev.cross_theta.allFinite()) {
        throw NumericDomainError("eval_joint: non-finite joint likelihood or derivatives");
    }
    return ev;
}

} // namespace condinf
