#pragma once

#include <string>

#include "hitab/errors.hpp"

namespace hitab {

enum class ActivationKind { Tanh, Sigmoid, Identity };

// Certified smoothness constants of an elementwise activation:
// lip_value bounds |sigma'|, lip_deriv1 bounds |sigma''|, lip_deriv2 bounds
// |sigma'''| over the whole real line.
struct ActivationProfile {
    ActivationKind kind = ActivationKind::Identity;
    double lip_value = 1.0;
    double lip_deriv1 = 0.0;
    double lip_deriv2 = 0.0;

    static ActivationProfile make(ActivationKind kind);
};

double activation_value(ActivationKind k, double x);
double activation_deriv1(ActivationKind k, double x);
double activation_deriv2(ActivationKind k, double x);

ActivationKind activation_from_name(const std::string& name);
const char* activation_name(ActivationKind k);

}  // namespace hitab
