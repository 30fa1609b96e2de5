#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hitab/network.hpp"

namespace hitab {

/// Certified upper bound on the spectral norm. Dense SVD for matrices up to
/// 512 on a side; power iteration with a +1e-6 safety margin beyond that.
double spectral_norm(const Eigen::MatrixXd& m);

/// Lipschitz data of the map from the network input to a layer's
/// post-activation vector: the map itself, its Jacobian, and the
/// per-coordinate gradients and Hessians.
struct LayerConstants {
    double lip_value = 1.0;
    double lip_jac = 0.0;
    Eigen::VectorXd lip_jac_rows;
    Eigen::VectorXd lip_hess_rows;
};

/// Base case: the input map a(x) = x.
LayerConstants input_constants(Eigen::Index dim);

/// Single-layer constants for one neuron j of x -> sigma(Wx + b):
/// sup_partial(i) bounds |d_i of neuron j|, lip_partial(i) is the Lipschitz
/// constant of that partial, lip_grad of the neuron's gradient, lip_hess of
/// its Hessian.
struct LayerLocalConstants {
    Eigen::VectorXd sup_partial;
    Eigen::VectorXd lip_partial;
    double lip_grad = 0.0;
    double lip_hess = 0.0;
};

LayerLocalConstants layer_local_constants(const Layer& layer, Eigen::Index j);

/// Push constants through one more layer. `value_override` substitutes an
/// externally certified constant for the post-activation map in place of the
/// built-in spectral product (any valid constant is admissible).
LayerConstants propagate_layer(const LayerConstants& prev, const Layer& layer,
                               std::optional<double> value_override = {});

/// Constants of the scalar map obtained by merging the last nonlinear layer
/// with the affine read-out. matrix_a couples the read-out weights back into
/// the penultimate layer.
struct TailCoupling {
    Eigen::MatrixXd matrix_a;
    Eigen::VectorXd sup_partials;
    Eigen::VectorXd lip_partials;
    double lip_grad_tail = 0.0;
    double lip_hess_tail = 0.0;
};

TailCoupling tail_constants(const Network& net);

/// End-to-end certified constants for f, its gradient, and its Hessian,
/// plus the per-layer intermediates (index 0 is the input map).
struct LipschitzBundle {
    std::vector<LayerConstants> per_layer;
    double lip_f = 0.0;
    double lip_grad = 0.0;
    double lip_hess = 0.0;
};

struct BundleOptions {
    // One externally certified post-activation constant per nonlinear layer,
    // replacing the spectral product at that depth.
    std::optional<std::vector<double>> value_overrides;
};

LipschitzBundle bundle(const Network& net, const BundleOptions& opts = {});

}  // namespace hitab
