#include "hitab/network.hpp"

#include <string>
#include <utility>

#include "hitab/errors.hpp"

namespace hitab {

Network::Network(std::vector<Layer> layers, Eigen::VectorXd out_vector)
    : layers_(std::move(layers)), out_vector_(std::move(out_vector)) {
    if (layers_.size() < 2)
        throw InputError("network needs at least one nonlinear layer before the final affine layer");
    if (layers_.back().activation.kind != ActivationKind::Identity)
        throw InputError("final layer activation must be \"identity\"");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        const std::string where = "layer " + std::to_string(i);
        if (l.weights.size() == 0)
            throw InputError(where + ": empty weights");
        if (l.bias.size() != l.weights.rows())
            throw InputError(where + ": bias length must equal the weight row count");
        if (!l.weights.allFinite() || !l.bias.allFinite())
            throw InputError(where + ": non-finite entries");
        if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows())
            throw InputError(where + ": input width does not chain with the previous layer");
    }
    if (out_vector_.size() != layers_.back().weights.rows())
        throw InputError("out_vector length must equal the final layer width");
    if (!out_vector_.allFinite())
        throw InputError("out_vector: non-finite entries");
}

Eigen::VectorXd Network::eval_vector(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim())
        throw InputError("eval: input dimension mismatch");
    Eigen::VectorXd a = x;
    for (const Layer& l : layers_) {
        Eigen::VectorXd z = l.weights * a + l.bias;
        a.resize(z.size());
        for (Eigen::Index j = 0; j < z.size(); ++j)
            a(j) = activation_value(l.activation.kind, z(j));
    }
    return a;  // final activation is the identity, so this is the affine output
}

double Network::eval(const Eigen::VectorXd& x) const {
    return out_vector_.dot(eval_vector(x));
}

Network Network::with_out_vector(Eigen::VectorXd out_vector) const {
    return Network(layers_, std::move(out_vector));
}

LocalModel local_model(const Network& net, const Eigen::VectorXd& center) {
    const Eigen::Index n = net.input_dim();
    if (center.size() != n)
        throw InputError("local_model: center dimension mismatch");

    Eigen::VectorXd a = center;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::MatrixXd> hess(static_cast<std::size_t>(n),
                                      Eigen::MatrixXd::Zero(n, n));

    for (const Layer& l : net.layers()) {
        const Eigen::Index m = l.weights.rows();
        const Eigen::VectorXd z = l.weights * a + l.bias;
        if (!z.allFinite())
            throw NumericError("local_model: non-finite pre-activation");
        const Eigen::MatrixXd jz = l.weights * jac;

        Eigen::VectorXd a_next(m);
        Eigen::MatrixXd jac_next(m, n);
        std::vector<Eigen::MatrixXd> hess_next(static_cast<std::size_t>(m));
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::MatrixXd hz = Eigen::MatrixXd::Zero(n, n);
            for (Eigen::Index i = 0; i < l.weights.cols(); ++i) {
                const double w = l.weights(j, i);
                if (w != 0.0) hz += w * hess[static_cast<std::size_t>(i)];
            }
            const double s1 = activation_deriv1(l.activation.kind, z(j));
            const double s2 = activation_deriv2(l.activation.kind, z(j));
            const Eigen::VectorXd g = jz.row(j).transpose();
            hess_next[static_cast<std::size_t>(j)] = s2 * (g * g.transpose()) + s1 * hz;
            jac_next.row(j) = s1 * jz.row(j);
            a_next(j) = activation_value(l.activation.kind, z(j));
        }
        a = std::move(a_next);
        jac = std::move(jac_next);
        hess = std::move(hess_next);
    }

    LocalModel model;
    model.center = center;
    model.value = net.out_vector().dot(a);
    model.gradient = jac.transpose() * net.out_vector();
    model.hessian = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < net.out_vector().size(); ++j) {
        const double c = net.out_vector()(j);
        if (c != 0.0) model.hessian += c * hess[static_cast<std::size_t>(j)];
    }
    if (!std::isfinite(model.value) || !model.gradient.allFinite() || !model.hessian.allFinite())
        throw NumericError("local_model: non-finite derivatives");
    return model;
}

Network fold_input_map(const Network& net, const Eigen::VectorXd& shift,
                       const Eigen::MatrixXd& linear) {
    if (shift.size() != net.input_dim())
        throw InputError("fold_input_map: shift dimension mismatch");
    if (linear.rows() != net.input_dim())
        throw InputError("fold_input_map: linear row count must equal the network input width");
    std::vector<Layer> layers = net.layers();
    const Eigen::MatrixXd w1 = layers.front().weights;
    layers.front().bias += w1 * shift;
    layers.front().weights = w1 * linear;
    return Network(std::move(layers), net.out_vector());
}

}  // namespace hitab
