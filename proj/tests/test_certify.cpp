#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "hitab/certify.hpp"
#include "hitab/errors.hpp"
#include "test_helpers.hpp"

using namespace hitab;
using namespace testutil;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LocalModel make_model(Eigen::VectorXd center, double value, Eigen::VectorXd gradient,
                      Eigen::MatrixXd hessian) {
    LocalModel m;
    m.center = std::move(center);
    m.value = value;
    m.gradient = std::move(gradient);
    m.hessian = std::move(hessian);
    return m;
}

LipschitzBundle make_bundle(double lip_f, double lip_grad, double lip_hess) {
    LipschitzBundle b;
    b.lip_f = lip_f;
    b.lip_grad = lip_grad;
    b.lip_hess = lip_hess;
    return b;
}

// Synthetic model/bundle pair satisfying the consistency relations that hold
// for any real network: lip_f >= |grad|, lip_grad >= positive curvature.
struct Tuple {
    LocalModel model;
    LipschitzBundle bundle;
};

Tuple random_tuple(Rng& rng, Eigen::Index n) {
    const Eigen::VectorXd center = rng.uniform_vector(n, -1.0, 1.0);
    const Eigen::VectorXd grad = rng.normal_vector(n);
    Eigen::MatrixXd h = rng.normal_matrix(n, n);
    h = 0.5 * (h + h.transpose()).eval();
    const double lam_plus = std::max(
        lambda_max_scaled(h, Eigen::VectorXd::Ones(n)), 0.0);
    LipschitzBundle b = make_bundle(grad.norm() + rng.uniform(0.0, 2.0),
                                    lam_plus + rng.uniform(0.0, 2.0),
                                    rng.uniform(0.01, 5.0));
    return {make_model(center, rng.uniform(-1.0, 1.0), grad, h), b};
}

}  // namespace

TEST_CASE("negative curvature is clipped in the second-order ball bound") {
    const LocalModel m = make_model(Eigen::VectorXd::Zero(1), 0.0,
                                    Eigen::VectorXd::Zero(1),
                                    Eigen::MatrixXd::Constant(1, 1, -2.0));
    const Certificate c = bound_ball(m, make_bundle(1.0, 1.0, 0.0), {m.center, 1.0});
    CHECK(c.bound2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.lambda_max_term < 0.0);
}

TEST_CASE("second-order ball bound arithmetic") {
    const LocalModel m = make_model(Eigen::VectorXd::Zero(1), 1.0,
                                    Eigen::VectorXd::Constant(1, 2.0),
                                    Eigen::MatrixXd::Constant(1, 1, 1.0));
    const Certificate c = bound_ball(m, make_bundle(10.0, 10.0, 6.0), {m.center, 0.5});
    CHECK(c.bound2 == doctest::Approx(2.25).epsilon(1e-8));
}

TEST_CASE("ball certificate hierarchy on the scalar demo") {
    const ScalarChain chain{2.0, 0.0, 1.0, 0.0, 1.0};
    const Network net = chain.to_network();
    const LocalModel m = local_model(net, Eigen::VectorXd::Zero(1));
    const LipschitzBundle b = bundle(net);
    const Certificate c = bound_ball(m, b, {Eigen::VectorXd::Zero(1), 0.1});

    CHECK(c.bound0 == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(c.bound1 == doctest::Approx(0.2153960).epsilon(1e-6));
    CHECK(c.bound2 == doctest::Approx(0.2026667).epsilon(1e-6));
    CHECK(c.combined == doctest::Approx(0.2).epsilon(1e-12));

    // Soundness against the closed-form maximum tanh(0.2).
    const double truth = 0.19737532022490400;
    CHECK(c.bound0 >= truth);
    CHECK(c.bound1 >= truth);
    CHECK(c.bound2 >= truth);
}

TEST_CASE("box bound pieces") {
    Eigen::VectorXd radii(2);
    radii << 0.1, 0.2;

    const LocalModel m0 = make_model(Eigen::VectorXd::Zero(2), 0.3,
                                     Eigen::VectorXd::Zero(2),
                                     Eigen::MatrixXd::Zero(2, 2));
    const Certificate c0 = bound_box(m0, make_bundle(2.0, 0.0, 0.0), {m0.center, radii});
    CHECK(c0.bound0 == doctest::Approx(0.3 + 0.2236068 * 2.0).epsilon(1e-6));

    Eigen::VectorXd grad(2);
    grad << 1.0, -1.0;
    const LocalModel m1 = make_model(Eigen::VectorXd::Zero(2), 0.0, grad,
                                     Eigen::MatrixXd::Zero(2, 2));
    const Certificate c1 = bound_box(m1, make_bundle(5.0, 0.0, 0.0), {m1.center, radii});
    // weighted l1 term: 0.1*|1| + 0.2*|-1| = 0.3
    CHECK(c1.bound1 == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("quadratic toy: box bound overapproximates the exact maximum by 2") {
    Eigen::MatrixXd h(2, 2);
    h << 1.0, 0.0, 0.0, -1.0;
    const double eps = 0.3;
    const LocalModel m = make_model(Eigen::VectorXd::Zero(2), 0.0,
                                    Eigen::VectorXd::Zero(2), h);
    const Certificate c = bound_box(m, make_bundle(10.0, 10.0, 0.0),
                                    {m.center, Eigen::VectorXd::Constant(2, eps)});
    CHECK(c.bound2 == doctest::Approx(eps * eps).epsilon(1e-6));

    // Exact box maximum of the quadratic model 0.5*x'Hx over |x|_inf <= eps.
    const double exact = 0.5 * eps * eps;
    CHECK(c.bound2 >= exact);
    CHECK(c.bound2 == doctest::Approx(2.0 * exact).epsilon(1e-6));
}

TEST_CASE("crossover thresholds") {
    const ScalarChain chain{2.0, 0.0, 1.0, 0.0, 1.0};
    const Network net = chain.to_network();
    const LocalModel m = local_model(net, Eigen::VectorXd::Zero(1));
    const LipschitzBundle b = bundle(net);
    const CrossoverThresholds t = crossover_thresholds(m, b);
    CHECK(t.eps01 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t.eps12 == doctest::Approx(0.5773503).epsilon(1e-6));

    // Vanishing curvature constant pushes the threshold to infinity.
    const CrossoverThresholds t2 = crossover_thresholds(m, make_bundle(2.0, 3.0, 0.0));
    CHECK(t2.eps12 == kInf);

    const LocalModel flat = make_model(Eigen::VectorXd::Zero(2), 0.0,
                                       Eigen::VectorXd::Zero(2),
                                       Eigen::MatrixXd::Zero(2, 2));
    const CrossoverThresholds t3 = crossover_thresholds(flat, make_bundle(1.0, 2.0, 1.0));
    CHECK(t3.eps01 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("lambda_max_scaled") {
    Eigen::MatrixXd diag(2, 2);
    diag << 3.0, 0.0, 0.0, -1.0;
    CHECK(lambda_max_scaled(diag, Eigen::VectorXd::Ones(2)) ==
          doctest::Approx(3.0).epsilon(1e-8));

    Eigen::MatrixXd swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    CHECK(lambda_max_scaled(swap, Eigen::VectorXd::Constant(2, 2.0)) ==
          doctest::Approx(4.0).epsilon(1e-8));

    Eigen::MatrixXd bad(2, 2);
    bad << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(lambda_max_scaled(bad, Eigen::VectorXd::Ones(2)), InputError);

    // Rayleigh-quotient oracle on a random symmetric matrix.
    Rng rng(17);
    Eigen::MatrixXd h = rng.normal_matrix(6, 6);
    h = 0.5 * (h + h.transpose()).eval();
    const Eigen::VectorXd radii = rng.uniform_vector(6, 0.2, 2.0);
    const double lam = lambda_max_scaled(h, radii);
    const Eigen::MatrixXd scaled = radii.asDiagonal() * h * radii.asDiagonal();
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd v = rng.normal_vector(6).normalized();
        CHECK(lam >= v.dot(scaled * v));
    }
}

TEST_CASE("combined bound dominates every member of the hierarchy") {
    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const Tuple t = random_tuple(rng, 3);
        const double eps = rng.uniform(0.01, 2.0);
        const Certificate c = bound_ball(t.model, t.bundle, {t.model.center, eps});
        CHECK(c.combined <= c.bound0);
        CHECK(c.combined <= c.bound1);
        CHECK(c.combined <= c.bound2);
        CHECK(c.combined >= t.model.value);  // added terms are nonnegative
    }
}

TEST_CASE("hierarchy orderings below the crossover radii") {
    Rng rng(29);
    int checked12 = 0;
    int checked01 = 0;
    for (int i = 0; i < 1000; ++i) {
        const Tuple t = random_tuple(rng, 3);
        const CrossoverThresholds cross = crossover_thresholds(t.model, t.bundle);

        const double cap12 = std::isfinite(cross.eps12) ? cross.eps12 : 10.0;
        if (cap12 > 0.0) {
            const double eps = rng.uniform(1e-6, 0.999) * cap12;
            const Certificate c = bound_ball(t.model, t.bundle, {t.model.center, eps});
            CHECK(c.bound2 <= c.bound1);
            ++checked12;
        }
        const double cap01 = std::isfinite(cross.eps01) ? cross.eps01 : 10.0;
        if (cap01 > 0.0) {
            const double eps = rng.uniform(1e-6, 0.999) * cap01;
            const Certificate c = bound_ball(t.model, t.bundle, {t.model.center, eps});
            CHECK(c.bound1 <= c.bound0);
            ++checked01;
        }
    }
    CHECK(checked12 > 900);  // the generator rarely produces degenerate tuples
    CHECK(checked01 > 500);
}

TEST_CASE("bounds are nondecreasing in the radius") {
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        const Tuple t = random_tuple(rng, 3);
        double prev0 = -kInf, prev1 = -kInf, prev2 = -kInf;
        for (double eps = 0.05; eps < 1.0; eps += 0.05) {
            const Certificate c = bound_ball(t.model, t.bundle, {t.model.center, eps});
            CHECK(c.bound0 >= prev0);
            CHECK(c.bound1 >= prev1);
            CHECK(c.bound2 >= prev2);
            prev0 = c.bound0;
            prev1 = c.bound1;
            prev2 = c.bound2;
        }

        // Same per-coordinate monotonicity for boxes.
        Eigen::VectorXd radii = rng.uniform_vector(3, 0.2, 0.5);
        const Certificate small = bound_box(t.model, t.bundle, {t.model.center, radii});
        Eigen::VectorXd bigger = radii;
        bigger(static_cast<Eigen::Index>(i % 3)) *= 2.0;
        const Certificate big = bound_box(t.model, t.bundle, {t.model.center, bigger});
        CHECK(big.bound0 >= small.bound0 - 1e-12);
        CHECK(big.bound1 >= small.bound1 - 1e-12);
        CHECK(big.bound2 >= small.bound2 - 1e-12);
    }
}

TEST_CASE("bounds collapse to the value as the region shrinks") {
    Rng rng(37);
    for (int i = 0; i < 20; ++i) {
        const Tuple t = random_tuple(rng, 4);
        const Certificate c = bound_ball(t.model, t.bundle, {t.model.center, 1e-8});
        const double slack = 1e-6 * (1.0 + t.bundle.lip_f);
        CHECK(std::abs(c.bound0 - t.model.value) <= slack);
        CHECK(std::abs(c.bound1 - t.model.value) <= slack);
        CHECK(std::abs(c.bound2 - t.model.value) <= slack);
    }
}

TEST_CASE("certificates dominate sampled maxima on real networks") {
    Rng rng(41);
    for (int trial = 0; trial < 6; ++trial) {
        const Network net = random_net(rng, {3, 5, 1});
        const LipschitzBundle b = bundle(net);
        const Eigen::VectorXd center = rng.uniform_vector(3, -0.5, 0.5);
        const LocalModel m = local_model(net, center);

        const double eps = rng.uniform(0.1, 1.0);
        const Certificate ball = bound_ball(m, b, {center, eps});
        double best_ball = -kInf;
        for (int s = 0; s < 3000; ++s) {
            Eigen::VectorXd dir = rng.normal_vector(3);
            dir.normalize();
            const double r = eps * std::pow(rng.uniform(), 1.0 / 3.0);
            best_ball = std::max(best_ball, net.eval(center + r * dir));
        }
        CHECK(ball.combined >= best_ball);

        const Eigen::VectorXd radii = rng.uniform_vector(3, 0.1, 0.8);
        const Certificate box = bound_box(m, b, {center, radii});
        double best_box = -kInf;
        for (int s = 0; s < 3000; ++s) {
            const Eigen::VectorXd nu = rng.uniform_vector(3, -1.0, 1.0);
            best_box = std::max(best_box, net.eval(center + radii.cwiseProduct(nu)));
        }
        CHECK(box.combined >= best_box);
    }
}

TEST_CASE("certificate input validation") {
    const Tuple t{make_model(Eigen::VectorXd::Zero(2), 0.0, Eigen::VectorXd::Zero(2),
                             Eigen::MatrixXd::Zero(2, 2)),
                  make_bundle(1.0, 1.0, 1.0)};
    CHECK_THROWS_AS(bound_ball(t.model, t.bundle, {t.model.center, 0.0}), InputError);
    CHECK_THROWS_AS(bound_ball(t.model, t.bundle, {t.model.center, -1.0}), InputError);
    Eigen::VectorXd bad_radii(2);
    bad_radii << 0.5, 0.0;
    CHECK_THROWS_AS(bound_box(t.model, t.bundle, {t.model.center, bad_radii}), InputError);
    CHECK_THROWS_AS(bound_box(t.model, t.bundle, {t.model.center, Eigen::VectorXd::Ones(3)}),
                    InputError);

    LocalModel nan_model = t.model;
    nan_model.value = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bound_ball(nan_model, t.bundle, {t.model.center, 1.0}), NumericError);
}
