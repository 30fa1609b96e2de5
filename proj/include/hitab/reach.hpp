#pragma once

#include <vector>

#include "hitab/bab.hpp"

namespace hitab {

// Discrete-time dynamics x+ = A x + B u + d with u produced by a network.
struct LtiSystem {
    Eigen::MatrixXd a_matrix;
    Eigen::MatrixXd b_matrix;
    Eigen::VectorXd d_vector;
};

/// Box in a rotated frame: x is a member iff
/// |row_k(rotation) . (x - center)| <= radii_k for every k.
struct RotatedRect {
    Eigen::MatrixXd rotation;
    Eigen::VectorXd center;
    Eigen::VectorXd radii;

    bool contains(const Eigen::VectorXd& x, double slack = 1e-9) const;
    void validate() const;
};

struct Obstacle {
    Eigen::VectorXd center;
    double radius = 0.0;
};

struct ReachConfig {
    int steps = 1;
    BabConfig bab;
    int sample_count = 1000;
    std::uint64_t seed = 0;
};

/// Objective c.(A x + B net(x) + d) assembled as an affine-augmented network:
/// the read-out becomes B^T c, the affine part contributes gradient A^T c and
/// constant c.d.
AffineObjective closed_loop_objective(const LtiSystem& sys, const Network& net,
                                      const Eigen::VectorXd& c);

struct DirectionReport {
    double upper = 0.0;
    double gap = 0.0;
    std::uint64_t nodes = 0;
    BabStatus status = BabStatus::Converged;
};

struct StepResult {
    RotatedRect set;
    // 2n entries ordered +row0, -row0, +row1, -row1, ...
    std::vector<DirectionReport> directions;
    double elapsed = 0.0;

    bool converged() const;
    std::uint64_t total_nodes() const;
    double max_gap() const;
};

/// One-step image overapproximation: the input parameterization is folded
/// into the controller so branch and bound runs over the unit box, a fresh
/// rotation is fitted from propagated samples, and each template direction is
/// bounded independently. The result contains every one-step successor.
StepResult step_reach(const LtiSystem& sys, const Network& net,
                      const RotatedRect& input, const ReachConfig& cfg);

std::vector<StepResult> multi_step(const LtiSystem& sys, const Network& net,
                                   const RotatedRect& init, const ReachConfig& cfg);

/// Exact successor of a single state.
Eigen::VectorXd simulate_step(const LtiSystem& sys, const Network& net,
                              const Eigen::VectorXd& x);

/// Euclidean distance from a point to the rectangle (zero inside).
double rect_distance(const RotatedRect& rect, const Eigen::VectorXd& point);

/// True when the rectangle provably misses the ball obstacle.
bool rect_avoids(const RotatedRect& rect, const Obstacle& obstacle);

/// 6-state planar-position/attitude-rate benchmark plant: positions integrate
/// velocities, the control channels enter the velocity rows scaled by g (last
/// channel unscaled), and gravity drifts the vertical velocity.
LtiSystem quadrotor_system(double dt, double g = 9.81);

/// Deterministic 6x32x32x3 tanh controller used by the bundled examples and
/// the long-horizon test problem. Identical on every platform.
Network reference_controller();

}  // namespace hitab
