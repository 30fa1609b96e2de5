#include "hitab/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "hitab/errors.hpp"

namespace hitab {

namespace {

// Always-valid coarse bound: sqrt(|m|_1 |m|_inf) and the Frobenius norm both
// dominate the spectral norm.
double coarse_norm_cap(const Eigen::MatrixXd& m) {
    const double col_sums = m.cwiseAbs().colwise().sum().maxCoeff();
    const double row_sums = m.cwiseAbs().rowwise().sum().maxCoeff();
    return std::min(std::sqrt(col_sums * row_sums), m.norm());
}

}  // namespace

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    if (std::max(m.rows(), m.cols()) <= 512) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return svd.singularValues()(0);
    }
    // Power iteration on the gram operator approaches the top singular value
    // from below, and plain iterate differences understate the remaining
    // error when the spectrum is clustered. Extrapolate the geometric tail to
    // bound that error, add a safety margin, and never exceed the coarse cap.
    const double cap = coarse_norm_cap(m);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
    v.normalize();
    double sigma = 0.0;
    double prev_delta = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100000; ++it) {
        Eigen::VectorXd w = m.transpose() * (m * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = std::sqrt(norm);
        v = w / norm;
        const double delta = std::abs(next - sigma);
        sigma = next;
        if (it >= 2 && delta < prev_delta) {
            const double ratio = prev_delta > 0.0 ? delta / prev_delta : 0.0;
            const double tail = ratio < 1.0
                ? delta * ratio / (1.0 - ratio)
                : std::numeric_limits<double>::infinity();
            if (tail <= 1e-8 * sigma)
                return std::min(sigma + tail + 1e-6, cap);
        }
        prev_delta = delta;
    }
    return cap;
}

LayerConstants input_constants(Eigen::Index dim) {
    LayerConstants c;
    c.lip_value = 1.0;
    c.lip_jac = 0.0;
    c.lip_jac_rows = Eigen::VectorXd::Zero(dim);
    c.lip_hess_rows = Eigen::VectorXd::Zero(dim);
    return c;
}

LayerLocalConstants layer_local_constants(const Layer& layer, Eigen::Index j) {
    if (j < 0 || j >= layer.weights.rows())
        throw InputError("layer_local_constants: neuron index out of range");
    const ActivationProfile& p = layer.activation;
    const Eigen::VectorXd abs_row = layer.weights.row(j).cwiseAbs().transpose();
    const double row_norm = layer.weights.row(j).norm();

    LayerLocalConstants out;
    out.sup_partial = p.lip_value * abs_row;
    out.lip_partial = (p.lip_deriv1 * row_norm) * abs_row;
    out.lip_grad = p.lip_deriv1 * row_norm * row_norm;
    out.lip_hess = p.lip_deriv2 * row_norm * row_norm * row_norm;
    return out;
}

LayerConstants propagate_layer(const LayerConstants& prev, const Layer& layer,
                               std::optional<double> value_override) {
    if (layer.weights.cols() != prev.lip_jac_rows.size())
        throw InputError("propagate_layer: layer input width does not match previous constants");
    const ActivationProfile& p = layer.activation;
    const Eigen::Index m = layer.weights.rows();
    const double wnorm = spectral_norm(layer.weights);
    const double lv = prev.lip_value;
    const double lj = prev.lip_jac;

    LayerConstants out;
    out.lip_value = value_override ? *value_override : p.lip_value * wnorm * lv;
    // Composition rule for the Jacobian: new-layer Jacobian Lipschitz scaled
    // by the squared inner constant, plus the carried Jacobian term.
    out.lip_jac = p.lip_deriv1 * wnorm * wnorm * lv * lv + p.lip_value * wnorm * lj;
    out.lip_jac_rows.resize(m);
    out.lip_hess_rows.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const LayerLocalConstants local = layer_local_constants(layer, j);
        const double row_norm = layer.weights.row(j).norm();
        out.lip_jac_rows(j) = local.lip_grad * lv * lv + p.lip_value * row_norm * lj;
        out.lip_hess_rows(j) = local.lip_hess * lv * lv * lv
            + 2.0 * lj * lv * local.lip_grad
            + lv * local.lip_partial.dot(prev.lip_jac_rows)
            + local.sup_partial.dot(prev.lip_hess_rows);
    }
    return out;
}

TailCoupling tail_constants(const Network& net) {
    const auto& layers = net.layers();
    const Layer& penultimate = layers[layers.size() - 2];
    const Layer& final_affine = layers.back();
    const ActivationProfile& p = penultimate.activation;

    const Eigen::VectorXd folded_out = final_affine.weights.transpose() * net.out_vector();

    TailCoupling t;
    t.matrix_a = penultimate.weights.transpose() * folded_out.asDiagonal();
    const Eigen::Index hidden = t.matrix_a.cols();
    Eigen::VectorXd row_norms(hidden);
    for (Eigen::Index j = 0; j < hidden; ++j)
        row_norms(j) = penultimate.weights.row(j).norm();

    const Eigen::MatrixXd abs_a = t.matrix_a.cwiseAbs();
    t.sup_partials = p.lip_value * abs_a.rowwise().sum();
    t.lip_partials = p.lip_deriv1 * (abs_a * row_norms);
    const double a_norm = spectral_norm(t.matrix_a);
    const double w_norm = spectral_norm(penultimate.weights);
    t.lip_grad_tail = p.lip_deriv1 * a_norm * w_norm;
    t.lip_hess_tail = p.lip_deriv2 * a_norm * w_norm * row_norms.maxCoeff();
    return t;
}

LipschitzBundle bundle(const Network& net, const BundleOptions& opts) {
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();
    if (opts.value_overrides && opts.value_overrides->size() != depth - 1)
        throw InputError("bundle: value_overrides needs one entry per nonlinear layer");

    LipschitzBundle b;
    b.per_layer.push_back(input_constants(net.input_dim()));
    for (std::size_t i = 0; i + 2 < depth; ++i) {
        std::optional<double> ov;
        if (opts.value_overrides) ov = (*opts.value_overrides)[i];
        b.per_layer.push_back(propagate_layer(b.per_layer.back(), layers[i], ov));
    }
    const LayerConstants& inner = b.per_layer.back();

    // Constants through every nonlinear layer, for the read-out-folded route.
    std::optional<double> ov_last;
    if (opts.value_overrides) ov_last = opts.value_overrides->back();
    const LayerConstants full = propagate_layer(inner, layers[depth - 2], ov_last);

    const TailCoupling tail = tail_constants(net);
    const Eigen::VectorXd folded_out =
        layers.back().weights.transpose() * net.out_vector();

    b.lip_f = folded_out.norm() * full.lip_value;

    // Gradient constant via the merged tail map. The per-coordinate suprema
    // give a pointwise bound on the tail gradient norm.
    const double sup_grad_tail = tail.sup_partials.norm();
    const double lv = inner.lip_value;
    b.lip_grad = tail.lip_grad_tail * lv * lv + sup_grad_tail * inner.lip_jac;

    // Hessian constant: merged-tail recursion versus folding the read-out
    // into the final affine layer; both are valid, keep the smaller.
    const double tail_route = tail.lip_hess_tail * lv * lv * lv
        + 2.0 * inner.lip_jac * lv * tail.lip_grad_tail
        + lv * tail.lip_partials.dot(inner.lip_jac_rows)
        + tail.sup_partials.dot(inner.lip_hess_rows);
    const double folded_route = folded_out.cwiseAbs().dot(full.lip_hess_rows);
    b.lip_hess = std::min(tail_route, folded_route);
    return b;
}

}  // namespace hitab
