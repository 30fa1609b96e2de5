#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "hitab/certify.hpp"

namespace hitab {

enum class BabStatus { Converged, NodeBudget, TimeBudget };

// Hierarchy uses the full certificate minimum per node; FirstOrder forces the
// gradient-only bound (useful for ablation of the curvature terms).
enum class BoundMode { Hierarchy, FirstOrder };

struct BabConfig {
    double tolerance = 1e-3;
    std::uint64_t max_nodes = 10'000'000;
    double max_seconds = 600.0;
    int threads = 1;
    BoundMode bound_mode = BoundMode::Hierarchy;
};

struct BabNode {
    BoxSpec region;
    double upper = 0.0;
    double lower_witness = 0.0;
};

struct BabProgress {
    std::uint64_t iteration = 0;
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    std::size_t frontier_size = 0;
};

struct BabResult {
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    std::uint64_t nodes_expanded = 0;
    double elapsed = 0.0;
    BabStatus status = BabStatus::Converged;
};

/// Scalar objective of the form network part plus an affine correction:
/// x -> net(x) + linear.x + constant. A plain network is the special case
/// linear = 0, constant = 0.
struct AffineObjective {
    Network net;
    Eigen::VectorXd linear;
    double constant = 0.0;

    static AffineObjective from_network(const Network& net);

    double eval(const Eigen::VectorXd& x) const;
    LocalModel local_model_at(const Eigen::VectorXd& x) const;
    LipschitzBundle lipschitz_bundle(const BundleOptions& opts = {}) const;
};

/// Bisect along the coordinate with the largest radius (ties go to the lowest
/// index). The children partition the parent region; their bounds are reset.
std::pair<BabNode, BabNode> split(const BabNode& node);

using ProgressSink = std::function<void(const BabProgress&)>;

/// Best-first branch and bound over the root box: certified constants are
/// computed once up front, the frontier is keyed by node upper bound, and the
/// loop refines until gap <= tolerance or a budget trips. The returned upper
/// bound is valid regardless of the termination status.
BabResult run(const AffineObjective& objective, const BoxSpec& root,
              const BabConfig& config, const ProgressSink& progress = {});

BabResult run(const Network& net, const BoxSpec& root, const BabConfig& config,
              const ProgressSink& progress = {});

const char* bab_status_name(BabStatus s);

}  // namespace hitab
