#include "hitab/bab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <thread>
#include <vector>

#include "hitab/errors.hpp"

namespace hitab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinBoxRadius = 1e-9;

struct HeapEntry {
    BabNode node;
    std::uint64_t seq = 0;
};

struct EntryOrder {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.node.upper != b.node.upper) return a.node.upper < b.node.upper;
        return a.seq > b.seq;  // older nodes win ties
    }
};

struct NodeBound {
    double upper = 0.0;
    double witness = 0.0;
};

std::string describe_center(const BoxSpec& region) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < region.center.size(); ++i)
        os << (i ? ", " : "") << region.center(i);
    os << "]";
    return os.str();
}

NodeBound bound_region(const AffineObjective& obj, const LipschitzBundle& lips,
                       const BoxSpec& region, BoundMode mode) {
    try {
        const LocalModel model = obj.local_model_at(region.center);
        const Certificate cert = bound_box(model, lips, region);
        NodeBound nb;
        nb.upper = mode == BoundMode::FirstOrder ? cert.bound1 : cert.combined;

        // Feasible witnesses: the center and the corner suggested by the
        // local gradient (exact maximizer when the objective is affine).
        Eigen::VectorXd corner = region.center;
        for (Eigen::Index i = 0; i < corner.size(); ++i)
            corner(i) += model.gradient(i) >= 0.0 ? region.radii(i) : -region.radii(i);
        nb.witness = std::max(model.value, obj.eval(corner));
        if (!std::isfinite(nb.upper) || !std::isfinite(nb.witness))
            throw NumericError("non-finite node bound");
        return nb;
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at node center " + describe_center(region));
    }
}

}  // namespace

AffineObjective AffineObjective::from_network(const Network& net) {
    return {net, Eigen::VectorXd::Zero(net.input_dim()), 0.0};
}

double AffineObjective::eval(const Eigen::VectorXd& x) const {
    return net.eval(x) + linear.dot(x) + constant;
}

LocalModel AffineObjective::local_model_at(const Eigen::VectorXd& x) const {
    LocalModel m = local_model(net, x);
    m.value += linear.dot(x) + constant;
    m.gradient += linear;
    return m;
}

LipschitzBundle AffineObjective::lipschitz_bundle(const BundleOptions& opts) const {
    LipschitzBundle b = bundle(net, opts);
    b.lip_f += linear.norm();  // the affine part has zero higher derivatives
    return b;
}

std::pair<BabNode, BabNode> split(const BabNode& node) {
    const Eigen::VectorXd& radii = node.region.radii;
    if (radii.size() == 0 || !(radii.minCoeff() > 0.0))
        throw InputError("split: radii must be positive");
    Eigen::Index axis = 0;
    radii.maxCoeff(&axis);  // first maximum, so ties go to the lowest index

    BabNode left = node;
    BabNode right = node;
    left.region.radii(axis) *= 0.5;
    right.region.radii(axis) *= 0.5;
    left.region.center(axis) -= left.region.radii(axis);
    right.region.center(axis) += right.region.radii(axis);
    left.lower_witness = -kInf;
    right.lower_witness = -kInf;
    return {left, right};
}

BabResult run(const AffineObjective& objective, const BoxSpec& root,
              const BabConfig& config, const ProgressSink& progress) {
    if (root.radii.size() != root.center.size())
        throw InputError("run: root radii dimension mismatch");
    if (root.radii.size() == 0 || !(root.radii.minCoeff() > 0.0))
        throw InputError("run: root radii must be positive");
    if (!(config.tolerance > 0.0))
        throw InputError("run: tolerance must be positive");
    if (objective.linear.size() != objective.net.input_dim())
        throw InputError("run: objective linear term dimension mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // Constants are global over the root, computed once before the loop.
    const LipschitzBundle lips = objective.lipschitz_bundle();

    std::priority_queue<HeapEntry, std::vector<HeapEntry>, EntryOrder> frontier;
    std::uint64_t seq = 0;
    std::uint64_t expanded = 0;
    std::uint64_t iteration = 0;
    double lower = -kInf;
    double retired_max = -kInf;

    {
        const NodeBound nb = bound_region(objective, lips, root, config.bound_mode);
        lower = nb.witness;
        frontier.push({BabNode{root, nb.upper, nb.witness}, seq++});
    }

    const auto current_upper = [&] {
        const double front = frontier.empty() ? -kInf : frontier.top().node.upper;
        return std::max(front, retired_max);
    };

    BabStatus status = BabStatus::Converged;
    while (true) {
        const double upper = current_upper();
        if (upper - lower <= config.tolerance) {
            status = BabStatus::Converged;
            break;
        }
        if (expanded >= config.max_nodes) {
            status = BabStatus::NodeBudget;
            break;
        }
        if (elapsed() > config.max_seconds) {
            status = BabStatus::TimeBudget;
            break;
        }
        if (frontier.empty()) {
            // Everything left was retired at the refinement floor.
            status = BabStatus::NodeBudget;
            break;
        }

        const std::size_t batch_target =
            static_cast<std::size_t>(std::max(config.threads, 1));
        std::vector<BabNode> batch;
        while (batch.size() < batch_target && !frontier.empty()) {
            BabNode node = frontier.top().node;
            frontier.pop();
            if (node.upper <= lower + config.tolerance ||
                node.region.radii.maxCoeff() <= kMinBoxRadius) {
                retired_max = std::max(retired_max, node.upper);
                continue;
            }
            batch.push_back(std::move(node));
        }
        if (batch.empty()) continue;

        struct Child {
            BoxSpec region;
            NodeBound bound;
            double cap = kInf;  // parent upper bound, still valid on the child
        };
        std::vector<Child> children(2 * batch.size());
        std::exception_ptr failure;
        const auto process = [&](std::size_t bi) {
            try {
                const auto [left, right] = split(batch[bi]);
                children[2 * bi] = {left.region,
                                    bound_region(objective, lips, left.region, config.bound_mode),
                                    batch[bi].upper};
                children[2 * bi + 1] = {right.region,
                                        bound_region(objective, lips, right.region, config.bound_mode),
                                        batch[bi].upper};
            } catch (...) {
                failure = std::current_exception();
            }
        };
        if (batch.size() == 1) {
            process(0);
        } else {
            std::vector<std::thread> workers;
            workers.reserve(batch.size());
            for (std::size_t bi = 0; bi < batch.size(); ++bi)
                workers.emplace_back(process, bi);
            for (auto& w : workers) w.join();
        }
        if (failure) std::rethrow_exception(failure);

        // Merge in a fixed order so runs with the same thread count match.
        for (Child& child : children) {
            lower = std::max(lower, child.bound.witness);
            const double upper_capped = std::min(child.bound.upper, child.cap);
            frontier.push({BabNode{std::move(child.region), upper_capped,
                                   child.bound.witness},
                           seq++});
        }
        expanded += batch.size();
        ++iteration;

        if (progress) {
            const double up = current_upper();
            progress({iteration, up, lower, up - lower, frontier.size()});
        }
    }

    BabResult result;
    result.upper = current_upper();
    result.lower = lower;
    result.gap = result.upper - result.lower;
    result.nodes_expanded = expanded;
    result.elapsed = elapsed();
    result.status = status;
    return result;
}

BabResult run(const Network& net, const BoxSpec& root, const BabConfig& config,
              const ProgressSink& progress) {
    return run(AffineObjective::from_network(net), root, config, progress);
}

const char* bab_status_name(BabStatus s) {
    switch (s) {
        case BabStatus::Converged: return "Converged";
        case BabStatus::NodeBudget: return "NodeBudget";
        case BabStatus::TimeBudget: return "TimeBudget";
    }
    return "?";
}

}  // namespace hitab
