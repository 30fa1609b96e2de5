#include "hitab/reach.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <Eigen/Eigenvalues>

#include "hitab/errors.hpp"
#include "hitab/rng.hpp"

namespace hitab {

namespace {

constexpr double kMinRectRadius = 1e-12;

void check_system(const LtiSystem& sys, const Network& net) {
    const Eigen::Index n = sys.a_matrix.rows();
    if (sys.a_matrix.cols() != n)
        throw InputError("system: state matrix must be square");
    if (sys.b_matrix.rows() != n)
        throw InputError("system: control matrix row count must equal the state dimension");
    if (sys.d_vector.size() != n)
        throw InputError("system: drift vector dimension mismatch");
    if (net.input_dim() != n)
        throw InputError("system: controller input width must equal the state dimension");
    if (net.output_dim() != sys.b_matrix.cols())
        throw InputError("system: controller output width must equal the control matrix column count");
}

// Principal axes of the propagated sample cloud; identity when the covariance
// is near-singular. Row signs are normalized for determinism.
Eigen::MatrixXd fit_rotation(const std::vector<Eigen::VectorXd>& samples, Eigen::Index n) {
    if (samples.size() < 2) return Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : samples) {
        const Eigen::VectorXd d = s - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(samples.size() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) return Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd evals = solver.eigenvalues();
    if (!(evals.minCoeff() > 0.0) || evals.maxCoeff() / evals.minCoeff() > 1e12)
        return Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd rot = solver.eigenvectors().transpose();
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index imax = 0;
        rot.row(k).cwiseAbs().maxCoeff(&imax);
        if (rot(k, imax) < 0.0) rot.row(k) *= -1.0;
    }
    return rot;
}

}  // namespace

bool RotatedRect::contains(const Eigen::VectorXd& x, double slack) const {
    const Eigen::VectorXd local =
        (rotation * (x - center)).cwiseQuotient(radii);
    return local.lpNorm<Eigen::Infinity>() <= 1.0 + slack;
}

void RotatedRect::validate() const {
    const Eigen::Index n = rotation.rows();
    if (rotation.cols() != n)
        throw InputError("rotated rect: rotation must be square");
    if (center.size() != n || radii.size() != n)
        throw InputError("rotated rect: dimension mismatch");
    if (!(radii.minCoeff() > 0.0))
        throw InputError("rotated rect: radii must be positive");
    const Eigen::MatrixXd gram = rotation.transpose() * rotation;
    if ((gram - Eigen::MatrixXd::Identity(n, n)).norm() > 1e-8)
        throw InputError("rotated rect: rotation is not orthogonal");
}

AffineObjective closed_loop_objective(const LtiSystem& sys, const Network& net,
                                      const Eigen::VectorXd& c) {
    check_system(sys, net);
    if (c.size() != sys.a_matrix.rows())
        throw InputError("closed_loop_objective: direction dimension mismatch");
    return {net.with_out_vector(sys.b_matrix.transpose() * c),
            sys.a_matrix.transpose() * c,
            c.dot(sys.d_vector)};
}

bool StepResult::converged() const {
    return std::all_of(directions.begin(), directions.end(), [](const DirectionReport& d) {
        return d.status == BabStatus::Converged;
    });
}

std::uint64_t StepResult::total_nodes() const {
    std::uint64_t total = 0;
    for (const auto& d : directions) total += d.nodes;
    return total;
}

double StepResult::max_gap() const {
    double g = 0.0;
    for (const auto& d : directions) g = std::max(g, d.gap);
    return g;
}

StepResult step_reach(const LtiSystem& sys, const Network& net,
                      const RotatedRect& input, const ReachConfig& cfg) {
    check_system(sys, net);
    input.validate();
    if (cfg.sample_count < 2)
        throw InputError("step_reach: sample_count must be at least 2");
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::Index n = sys.a_matrix.rows();

    // Unit-box parameterization of the input rect.
    const Eigen::MatrixXd basis = input.rotation.transpose() * input.radii.asDiagonal();
    const Network folded = fold_input_map(net, input.center, basis);

    // Fit the output template from propagated samples.
    Rng rng(cfg.seed);
    std::vector<Eigen::VectorXd> successors;
    successors.reserve(static_cast<std::size_t>(cfg.sample_count));
    for (int s = 0; s < cfg.sample_count; ++s) {
        const Eigen::VectorXd nu = rng.uniform_vector(n, -1.0, 1.0);
        const Eigen::VectorXd x = input.center + basis * nu;
        successors.push_back(simulate_step(sys, net, x));
    }
    const Eigen::MatrixXd out_rot = fit_rotation(successors, n);

    // Bound each template direction and its negation over the unit box.
    const BoxSpec root{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
    const Eigen::VectorXd affine_base = sys.a_matrix * input.center + sys.d_vector;
    std::vector<BabResult> results(static_cast<std::size_t>(2 * n));
    std::exception_ptr failure;

    const auto bound_direction = [&](Eigen::Index k, int sign, std::size_t slot) {
        try {
            const Eigen::VectorXd c = sign * out_rot.row(k).transpose();
            BabConfig bab_cfg = cfg.bab;
            bab_cfg.threads = 1;
            const AffineObjective objective{
                folded.with_out_vector(sys.b_matrix.transpose() * c),
                basis.transpose() * (sys.a_matrix.transpose() * c),
                c.dot(affine_base)};
            results[slot] = run(objective, root, bab_cfg);
        } catch (...) {
            failure = std::current_exception();
        }
    };

    const int workers = std::max(cfg.bab.threads, 1);
    if (workers <= 1) {
        for (Eigen::Index k = 0; k < n; ++k) {
            bound_direction(k, +1, static_cast<std::size_t>(2 * k));
            bound_direction(k, -1, static_cast<std::size_t>(2 * k + 1));
        }
    } else {
        // Direction problems are independent; spread them over the workers.
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const std::size_t total = static_cast<std::size_t>(2 * n);
        for (int w = 0; w < std::min<int>(workers, static_cast<int>(total)); ++w) {
            pool.emplace_back([&] {
                for (std::size_t slot = next.fetch_add(1); slot < total;
                     slot = next.fetch_add(1)) {
                    const Eigen::Index k = static_cast<Eigen::Index>(slot / 2);
                    bound_direction(k, slot % 2 == 0 ? +1 : -1, slot);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    StepResult out;
    out.directions.reserve(results.size());
    Eigen::VectorXd local_center(n);
    Eigen::VectorXd local_radii(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const BabResult& plus = results[static_cast<std::size_t>(2 * k)];
        const BabResult& minus = results[static_cast<std::size_t>(2 * k + 1)];
        local_center(k) = 0.5 * (plus.upper - minus.upper);
        local_radii(k) = std::max(0.5 * (plus.upper + minus.upper), kMinRectRadius);
        out.directions.push_back({plus.upper, plus.gap, plus.nodes_expanded, plus.status});
        out.directions.push_back({minus.upper, minus.gap, minus.nodes_expanded, minus.status});
    }
    out.set = RotatedRect{out_rot, out_rot.transpose() * local_center, local_radii};
    out.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<StepResult> multi_step(const LtiSystem& sys, const Network& net,
                                   const RotatedRect& init, const ReachConfig& cfg) {
    if (cfg.steps < 1)
        throw InputError("multi_step: steps must be at least 1");
    std::vector<StepResult> out;
    out.reserve(static_cast<std::size_t>(cfg.steps));
    RotatedRect current = init;
    for (int k = 0; k < cfg.steps; ++k) {
        ReachConfig step_cfg = cfg;
        step_cfg.seed = cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1);
        out.push_back(step_reach(sys, net, current, step_cfg));
        current = out.back().set;
    }
    return out;
}

Eigen::VectorXd simulate_step(const LtiSystem& sys, const Network& net,
                              const Eigen::VectorXd& x) {
    return sys.a_matrix * x + sys.b_matrix * net.eval_vector(x) + sys.d_vector;
}

double rect_distance(const RotatedRect& rect, const Eigen::VectorXd& point) {
    if (point.size() != rect.center.size())
        throw InputError("rect_distance: point dimension mismatch");
    const Eigen::VectorXd local = rect.rotation * (point - rect.center);
    double sq = 0.0;
    for (Eigen::Index k = 0; k < local.size(); ++k) {
        const double excess = std::max(std::abs(local(k)) - rect.radii(k), 0.0);
        sq += excess * excess;
    }
    return std::sqrt(sq);
}

bool rect_avoids(const RotatedRect& rect, const Obstacle& obstacle) {
    return rect_distance(rect, obstacle.center) > obstacle.radius;
}

LtiSystem quadrotor_system(double dt, double g) {
    if (!(dt > 0.0))
        throw InputError("quadrotor_system: dt must be positive");
    if (!(g > 0.0))
        throw InputError("quadrotor_system: g must be positive");
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(6, 6);
    a(0, 3) = dt;
    a(1, 4) = dt;
    a(2, 5) = dt;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
    b(3, 0) = dt * g;
    b(4, 1) = -dt * g;
    b(5, 2) = dt;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(6);
    d(5) = -dt * g;
    return {a, b, d};
}

Network reference_controller() {
    // Smooth stand-in for a controller trained to steer the benchmark plant
    // toward the origin: the hidden layers compress the state into the
    // near-linear range of tanh, and the read-out layer expands back onto a
    // pole-placement feedback with a gravity feedforward on the vertical
    // channel. Every quantity is generated deterministically.
    Rng rng(0x68697461625f6374ULL);

    const auto orthonormal = [&rng](Eigen::Index n) {
        const Eigen::MatrixXd g = rng.normal_matrix(n, n);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ();
        const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < n; ++j)
            if (r(j, j) < 0.0) q.col(j) *= -1.0;
        return q;
    };

    const double inner_scale = 0.12;
    const double mid_scale = 0.4;
    Eigen::MatrixXd w1 = inner_scale * orthonormal(32).leftCols(6);
    Eigen::MatrixXd w2 = mid_scale * orthonormal(32);
    // Mild perturbation so the layers are not exactly orthogonal.
    w1 += 0.01 * inner_scale * rng.normal_matrix(32, 6);
    w2 += 0.01 * mid_scale * rng.normal_matrix(32, 32);

    // Per-axis gains placing the closed-loop poles of the dt = 0.1 plant near
    // 0.8 (the horizontal channels act through g, the vertical one directly).
    const double g = 9.81;
    const double k_xy = 0.4 / (0.1 * g);
    const double k_z = 0.4 / 0.1;
    Eigen::MatrixXd gains = Eigen::MatrixXd::Zero(3, 6);
    gains(0, 0) = -k_xy;
    gains(0, 3) = -k_xy;
    gains(1, 1) = k_xy;
    gains(1, 4) = k_xy;
    gains(2, 2) = -k_z;
    gains(2, 5) = -k_z;

    const Eigen::MatrixXd composite = w2 * w1;  // linearization of the hidden stack at 0
    const Eigen::MatrixXd w3 =
        gains * composite.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd b3 = Eigen::VectorXd::Zero(3);
    b3(2) = g;  // gravity feedforward

    std::vector<Layer> layers;
    layers.push_back({std::move(w1), Eigen::VectorXd::Zero(32),
                      ActivationProfile::make(ActivationKind::Tanh)});
    layers.push_back({std::move(w2), Eigen::VectorXd::Zero(32),
                      ActivationProfile::make(ActivationKind::Tanh)});
    layers.push_back({w3, std::move(b3), ActivationProfile::make(ActivationKind::Identity)});
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3);
    out(0) = 1.0;  // placeholder read-out; reach queries replace it per direction
    return Network(std::move(layers), std::move(out));
}

}  // namespace hitab
