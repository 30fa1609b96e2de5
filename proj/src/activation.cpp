#include "hitab/activation.hpp"

#include <cmath>

namespace hitab {

ActivationProfile ActivationProfile::make(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Tanh:
            // sup|tanh'| = 1, sup|tanh''| = 4/(3*sqrt(3)), sup|tanh'''| = 2.
            return {kind, 1.0, 4.0 / (3.0 * std::sqrt(3.0)), 2.0};
        case ActivationKind::Sigmoid:
            // sup|s'| = 1/4 analytically; the derivative bounds are the exact
            // values 1/(6*sqrt(3)) and 1/8 rounded up at the sixth decimal.
            return {kind, 0.25, 0.096226, 0.125};
        case ActivationKind::Identity:
            return {kind, 1.0, 0.0, 0.0};
    }
    throw InputError("unknown activation kind");
}

double activation_value(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::Tanh: return std::tanh(x);
        case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case ActivationKind::Identity: return x;
    }
    throw InputError("unknown activation kind");
}

double activation_deriv1(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case ActivationKind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case ActivationKind::Identity: return 1.0;
    }
    throw InputError("unknown activation kind");
}

double activation_deriv2(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::Tanh: {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
        }
        case ActivationKind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case ActivationKind::Identity: return 0.0;
    }
    throw InputError("unknown activation kind");
}

ActivationKind activation_from_name(const std::string& name) {
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "identity") return ActivationKind::Identity;
    throw InputError("unknown activation \"" + name + "\" (expected tanh, sigmoid, or identity)");
}

const char* activation_name(ActivationKind k) {
    switch (k) {
        case ActivationKind::Tanh: return "tanh";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Identity: return "identity";
    }
    return "?";
}

}  // namespace hitab
