#include "hitab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "hitab/errors.hpp"

namespace hitab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_model(const LocalModel& model, const Eigen::VectorXd& center) {
    if (!std::isfinite(model.value) || !model.gradient.allFinite() ||
        !model.hessian.allFinite())
        throw NumericError("certificate: non-finite local model");
    if (model.center.size() != center.size() ||
        (model.center - center).lpNorm<Eigen::Infinity>() >
            1e-12 * (1.0 + center.lpNorm<Eigen::Infinity>()))
        throw InputError("certificate: local model was not evaluated at the region center");
}

}  // namespace

double lambda_max_scaled(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& radii) {
    if (hessian.rows() != hessian.cols())
        throw InputError("lambda_max_scaled: matrix must be square");
    if (radii.size() != hessian.rows())
        throw InputError("lambda_max_scaled: radii dimension mismatch");
    const double asym = (hessian - hessian.transpose()).norm();
    if (asym > 1e-8 * (1.0 + hessian.norm()))
        throw InputError("lambda_max_scaled: matrix is not symmetric");

    const Eigen::MatrixXd scaled = radii.asDiagonal() * hessian * radii.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scaled, Eigen::EigenvaluesOnly);
    double lam;
    if (solver.info() == Eigen::Success) {
        lam = solver.eigenvalues().maxCoeff();
    } else {
        // Coarse spectral fallback, still an upper bound.
        lam = scaled.norm();
    }
    return lam + 1e-9 * (1.0 + scaled.norm());
}

Certificate bound_ball(const LocalModel& model, const LipschitzBundle& bundle,
                       const BallSpec& spec) {
    if (!(spec.radius > 0.0))
        throw InputError("bound_ball: radius must be positive");
    check_model(model, spec.center);

    const double eps = spec.radius;
    const double grad_norm = model.gradient.norm();
    const double lam = lambda_max_scaled(
        model.hessian, Eigen::VectorXd::Ones(model.hessian.rows()));

    Certificate c;
    c.bound0 = model.value + bundle.lip_f * eps;
    c.bound1 = model.value + grad_norm * eps + 0.5 * bundle.lip_grad * eps * eps;
    c.bound2 = model.value + grad_norm * eps + 0.5 * std::max(lam, 0.0) * eps * eps
        + bundle.lip_hess * eps * eps * eps / 6.0;
    c.combined = std::min({c.bound0, c.bound1, c.bound2});
    c.lambda_max_term = lam;
    c.center = spec.center;
    c.radius = eps;
    return c;
}

Certificate bound_box(const LocalModel& model, const LipschitzBundle& bundle,
                      const BoxSpec& spec) {
    if (spec.radii.size() != spec.center.size())
        throw InputError("bound_box: radii dimension mismatch");
    if (!(spec.radii.minCoeff() > 0.0))
        throw InputError("bound_box: radii must be positive");
    check_model(model, spec.center);

    const double n = static_cast<double>(spec.radii.size());
    const double fro = spec.radii.norm();
    const double weighted_l1 = spec.radii.cwiseProduct(model.gradient).lpNorm<1>();
    const double lam = lambda_max_scaled(model.hessian, spec.radii);

    Certificate c;
    c.bound0 = model.value + bundle.lip_f * fro;
    c.bound1 = model.value + weighted_l1 + 0.5 * bundle.lip_grad * fro * fro;
    c.bound2 = model.value + weighted_l1 + 0.5 * n * std::max(lam, 0.0)
        + bundle.lip_hess * fro * fro * fro / 6.0;
    c.combined = std::min({c.bound0, c.bound1, c.bound2});
    c.lambda_max_term = lam;
    c.center = spec.center;
    c.radii = spec.radii;
    return c;
}

CrossoverThresholds crossover_thresholds(const LocalModel& model,
                                         const LipschitzBundle& bundle) {
    if (!std::isfinite(model.value) || !model.gradient.allFinite() ||
        !model.hessian.allFinite())
        throw NumericError("crossover_thresholds: non-finite local model");
    const double grad_norm = model.gradient.norm();
    const double lam_plus = std::max(
        lambda_max_scaled(model.hessian, Eigen::VectorXd::Ones(model.hessian.rows())),
        0.0);

    CrossoverThresholds t;
    t.eps01 = bundle.lip_grad > 0.0
        ? std::max(2.0 * (bundle.lip_f - grad_norm) / bundle.lip_grad, 0.0)
        : kInf;
    t.eps12 = bundle.lip_hess > 0.0
        ? std::max(3.0 * (bundle.lip_grad - lam_plus) / bundle.lip_hess, 0.0)
        : kInf;
    return t;
}

}  // namespace hitab
