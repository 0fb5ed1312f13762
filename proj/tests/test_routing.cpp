#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "saddleflow/routing.hpp"

#include <cmath>
#include <numbers>

using namespace saddleflow;
using testutil::vec;

namespace {

// Two sources, two routes each, every route over two private links.
RoutingNetwork two_by_two(double capacity) {
    RoutingNetwork net;
    net.H = Matrix::Zero(2, 4);
    net.H << 1, 1, 0, 0, 0, 0, 1, 1;
    net.L = Matrix::Zero(8, 4);
    for (int k = 0; k < 8; ++k) net.L(k, k / 2) = 1.0;
    net.C = Vector::Constant(8, capacity);
    net.utilities = {log_utility(), saturating_utility()};
    net.kappas = Vector::Ones(4);
    return net;
}

RoutingNetwork four_and_three() {
    RoutingNetwork net;
    net.H = Matrix::Ones(1, 2);
    net.L = Matrix::Zero(7, 2);
    for (int k = 0; k < 7; ++k) net.L(k, k < 4 ? 0 : 1) = 1.0;
    net.C = Vector::Constant(7, 0.5);
    net.utilities = {log_utility()};
    net.kappas = Vector::Ones(2);
    return net;
}

// Saddle of two_by_two: every link saturated, prices split the marginal utility.
Vector two_by_two_saddle(double c) {
    Vector z(12);
    z.head(4).setConstant(c);
    const double m1 = 1.0 / (1.0 + 2 * c);
    const double m2 = std::exp(-2 * c);
    z.segment(4, 4).setConstant(m1 / 2);
    z.tail(4).setConstant(m2 / 2);
    return z;
}

}  // namespace

TEST_CASE("utilities and their derivatives") {
    const Utility u = log_utility();
    const Utility v = saturating_utility();
    for (double s : {0.0, 0.5, 3.0}) {
        CHECK(u.value(s) == doctest::Approx(std::log(1 + s)));
        CHECK(u.d1(s) == doctest::Approx((u.value(s + 1e-6) - u.value(s - 1e-6)) / 2e-6));
        CHECK(v.value(s) == doctest::Approx(1 - std::exp(-s)));
        CHECK(v.d2(s) == doctest::Approx((v.d1(s + 1e-6) - v.d1(s - 1e-6)) / 2e-6));
    }
}

TEST_CASE("network validation") {
    CHECK_NOTHROW(two_by_two(1).validate());
    auto bad = two_by_two(1);
    bad.H(0, 2) = 1.0;  // route with two sources
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = two_by_two(1);
    bad.L.col(3).setZero();
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = two_by_two(1);
    bad.C(0) = 0.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = two_by_two(1);
    bad.kappas(1) = -1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = two_by_two(1);
    bad.utilities[0] = Utility{"convex", [](double s) { return s * s; }, [](double s) { return 2 * s; },
                               [](double) { return 2.0; }};
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = two_by_two(1);
    bad.L(0, 0) = 0.5;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("routing Lagrangian derivatives match finite differences") {
    const SaddleProblem p = routing_problem(two_by_two(1));
    std::mt19937_64 rng(41);
    std::vector<Vector> samples;
    for (int k = 0; k < 20; ++k) samples.push_back(testutil::random_vector(rng, 12, 0.1, 3.0));
    const auto rep = validate_derivatives(p, samples);
    CHECK(rep.grad_error <= 1e-5);
    CHECK(rep.hess_error <= 1e-5);
    CHECK(rep.ok());
}

TEST_CASE("closed-form saddle of the two-source network") {
    const RoutingNetwork net = two_by_two(1);
    const SaddleProblem p = routing_problem(net);
    CHECK(is_restricted_saddle(p, routing_domain(net), two_by_two_saddle(1)));
    // phi_xy = -L'
    CHECK((p.hess_xy(Vector::Ones(4), Vector::Ones(8)) + net.L.transpose()).norm() == 0.0);
}

TEST_CASE("instability condition") {
    SUBCASE("one route per source: none") {
        RoutingNetwork net;
        net.H = Matrix::Identity(2, 2);
        net.L = Matrix::Ones(1, 2);
        net.C = Vector::Ones(1);
        net.utilities = {log_utility(), log_utility()};
        net.kappas = Vector::Ones(2);
        CHECK_FALSE(routing_instability(net));
    }
    SUBCASE("two-source network: lambda = 2") {
        const RoutingNetwork net = two_by_two(1);
        CHECK((net.L.transpose() * net.L - 2 * Matrix::Identity(4, 4)).norm() == 0.0);
        const auto inst = routing_instability(net);
        REQUIRE(inst);
        CHECK(std::abs(inst->lambda - 2.0) <= 1e-10);
        CHECK(inst->u.norm() == doctest::Approx(1.0));
        CHECK((net.H * inst->u).norm() <= 1e-10);
        CHECK((net.L.transpose() * net.L * inst->u - inst->lambda * inst->u).norm() <= 1e-10);
    }
    SUBCASE("routes of four and three links: none") {
        const RoutingNetwork net = four_and_three();
        Matrix expected = Matrix::Zero(2, 2);
        expected.diagonal() = vec({4.0, 3.0});
        CHECK((net.L.transpose() * net.L - expected).norm() == 0.0);
        CHECK_FALSE(routing_instability(net));
    }
}

TEST_CASE("matrix exponential agrees with its power series at t = 1") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix G = Matrix::Random(6, 6);
        const Matrix A = G - G.transpose();
        Matrix series = Matrix::Identity(6, 6);
        Matrix term = Matrix::Identity(6, 6);
        for (int k = 1; k < 80; ++k) {
            term = term * A / static_cast<double>(k);
            series += term;
        }
        CHECK((matrix_exponential(A, 1.0) - series).cwiseAbs().maxCoeff() <= 1e-10);
        // Skew generator: orthogonal exponential.
        const Matrix E = matrix_exponential(A, 0.7);
        CHECK((E.transpose() * E - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(matrix_exponential(Matrix::Zero(2, 3), 1.0), InputError);
}

TEST_CASE("explicit oscillation solves the routing dynamics") {
    const RoutingNetwork net = two_by_two(1);
    const SaddleProblem p = routing_problem(net);
    const Vector saddle = two_by_two_saddle(1);
    const auto inst = routing_instability(net);
    REQUIRE(inst);
    std::vector<double> times;
    for (int k = 0; k <= 2000; ++k) times.push_back(0.01 * k);
    const Trajectory orbit = explicit_oscillation(p, saddle, inst->u, times);
    const Matrix A = matrix_A(p, saddle);
    Vector v(12);
    v << inst->u, -net.L * inst->u;
    const double d0 = (orbit.states.front() - saddle).norm();
    CHECK(d0 > 0.0);
    for (std::size_t k = 0; k < orbit.size(); ++k) {
        const Vector& z = orbit.states[k];
        CHECK((z.array() > 0.0).all());
        // z' = A (z - saddle) for the closed form; it must equal the field.
        CHECK((gradient_field(p, z) - A * (z - saddle)).norm() <= 1e-6);
        CHECK(std::abs((z - saddle).norm() - d0) <= 1e-10);
    }
    // Period 2 pi / sqrt(lambda).
    const double period = 2 * std::numbers::pi / std::sqrt(inst->lambda);
    const Trajectory shifted = explicit_oscillation(p, saddle, inst->u, {0.0, period}, (orbit.states[0] - saddle).norm() / v.norm());
    CHECK((shifted.states[1] - shifted.states[0]).norm() <= 1e-10);

    const Trajectory still = explicit_oscillation(p, saddle, inst->u, times, 0.0);
    for (const auto& z : still.states) CHECK(z == saddle);

    Vector boundary = saddle;
    boundary(0) = 0.0;
    CHECK_THROWS_AS(explicit_oscillation(p, boundary, inst->u, times), StateError);
    CHECK_THROWS_AS(explicit_oscillation(p, saddle, inst->u, times, 10.0), StateError);
}
