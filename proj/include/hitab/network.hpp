#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hitab/activation.hpp"

namespace hitab {

struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    ActivationProfile activation;
};

/// Fully connected network with a scalar read-out: f(x) = out_vector . z(x),
/// where z is the final layer's affine output. The last layer must carry the
/// identity activation and at least one nonlinear layer must precede it.
class Network {
public:
    Network(std::vector<Layer> layers, Eigen::VectorXd out_vector);

    const std::vector<Layer>& layers() const { return layers_; }
    const Eigen::VectorXd& out_vector() const { return out_vector_; }
    Eigen::Index input_dim() const { return layers_.front().weights.cols(); }
    Eigen::Index output_dim() const { return layers_.back().weights.rows(); }

    /// Scalar output out_vector . z(x).
    double eval(const Eigen::VectorXd& x) const;

    /// Final-layer output z(x) before the read-out contraction.
    Eigen::VectorXd eval_vector(const Eigen::VectorXd& x) const;

    /// Copy of this network with a different read-out vector.
    Network with_out_vector(Eigen::VectorXd out_vector) const;

private:
    std::vector<Layer> layers_;
    Eigen::VectorXd out_vector_;
};

/// Exact local expansion of f at a center point.
struct LocalModel {
    Eigen::VectorXd center;
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// Analytic value, gradient, and Hessian of the scalar output at `center`,
/// accumulated layer by layer through the chain rule.
LocalModel local_model(const Network& net, const Eigen::VectorXd& center);

/// Network g with g(y) = f(shift + linear*y), realized by rewriting the first
/// layer (weights become W*linear, bias absorbs W*shift).
Network fold_input_map(const Network& net, const Eigen::VectorXd& shift,
                       const Eigen::MatrixXd& linear);

}  // namespace hitab
