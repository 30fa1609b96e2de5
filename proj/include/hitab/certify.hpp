#pragma once

#include <Eigen/Dense>

#include "hitab/lipschitz.hpp"
#include "hitab/network.hpp"

namespace hitab {

struct BallSpec {
    Eigen::VectorXd center;
    double radius = 0.0;
};

// Axis-aligned box {center + delta : |delta_i| <= radii_i}.
struct BoxSpec {
    Eigen::VectorXd center;
    Eigen::VectorXd radii;
};

/// The certificate hierarchy over one region. bound0/1/2 use value-only,
/// gradient, and curvature information respectively; combined is their
/// minimum and the certified upper bound on max f over the region.
struct Certificate {
    double bound0 = 0.0;
    double bound1 = 0.0;
    double bound2 = 0.0;
    double combined = 0.0;
    double lambda_max_term = 0.0;
    Eigen::VectorXd center;
    double radius = 0.0;        // set for ball regions
    Eigen::VectorXd radii;      // set for box regions
};

Certificate bound_ball(const LocalModel& model, const LipschitzBundle& bundle,
                       const BallSpec& spec);

Certificate bound_box(const LocalModel& model, const LipschitzBundle& bundle,
                      const BoxSpec& spec);

/// Radii below which the next certificate in the hierarchy is provably at
/// least as tight: below eps01 bound1 <= bound0, below eps12 bound2 <= bound1.
/// Infinite when the corresponding curvature constant vanishes.
struct CrossoverThresholds {
    double eps01 = 0.0;
    double eps12 = 0.0;
};

CrossoverThresholds crossover_thresholds(const LocalModel& model,
                                         const LipschitzBundle& bundle);

/// Largest eigenvalue of diag(radii) * hessian * diag(radii) by dense
/// symmetric eigendecomposition, nudged up by a small margin so the result
/// stays an upper bound under floating-point error.
double lambda_max_scaled(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& radii);

}  // namespace hitab
