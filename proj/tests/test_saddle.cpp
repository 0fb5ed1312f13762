#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "saddleflow/saddle.hpp"

#include <cmath>

using namespace saddleflow;
using testutil::inf;
using testutil::vec;

namespace {

SaddleProblem example1() {
    Matrix P = Matrix::Zero(2, 2);
    P(0, 0) = -1.0;
    return QuadraticSaddle(P, Matrix::Zero(1, 1), Matrix::Ones(2, 1)).to_problem();
}

// max -x1^2 - x2^2 + x1 s.t. 1 - x1 - x2 >= 0, x1 - x2 = 0.
ConcaveProgram small_program() {
    ConcaveProgram cp;
    cp.n = 2;
    cp.objective.value = [](const Vector& x) { return -x.squaredNorm() + x(0); };
    cp.objective.grad = [](const Vector& x) -> Vector { return -2.0 * x + vec({1.0, 0.0}); };
    cp.objective.hess = [](const Vector&) -> Matrix { return -2.0 * Matrix::Identity(2, 2); };
    cp.constraints = {affine_function(vec({-1.0, -1.0}), 1.0), affine_function(vec({1.0, -1.0}), 0.0)};
    cp.equality = {false, true};
    return cp;
}

}  // namespace

TEST_CASE("quadratic construction checks shapes and symmetry") {
    CHECK_THROWS_AS(QuadraticSaddle(Matrix::Zero(2, 2), Matrix::Zero(1, 1), Matrix::Zero(1, 1)), InputError);
    Matrix skew = Matrix::Zero(2, 2);
    skew(0, 1) = 1.0;
    CHECK_THROWS_AS(QuadraticSaddle(skew, Matrix::Zero(1, 1), Matrix::Zero(2, 1)), InputError);
}

TEST_CASE("Example 1 field and Jacobian blocks") {
    const SaddleProblem p = example1();
    const Vector z = vec({0.3, -0.7, 1.1});
    // f = [phi_x1, phi_x2, -phi_y] = [-x1 + y, y, -(x1 + x2)]
    const Vector f = gradient_field(p, z);
    CHECK(f(0) == doctest::Approx(-0.3 + 1.1));
    CHECK(f(1) == doctest::Approx(1.1));
    CHECK(f(2) == doctest::Approx(0.4));

    Matrix A(3, 3), B = Matrix::Zero(3, 3), J(3, 3);
    A << 0, 0, 1, 0, 0, 1, -1, -1, 0;
    B(0, 0) = -1.0;
    J << -1, 0, 1, 0, 0, 1, -1, -1, 0;
    CHECK((matrix_A(p, z) - A).norm() == 0.0);
    CHECK((matrix_B(p, z) - B).norm() == 0.0);
    CHECK((field_jacobian(p, z) - J).norm() == 0.0);
}

TEST_CASE("A is skew and B symmetric on random quadratics") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
        Matrix G = Matrix::Random(3, 3);
        Matrix H = Matrix::Random(2, 2);
        const QuadraticSaddle q(-(G * G.transpose()), H * H.transpose(), Matrix::Random(3, 2),
                                testutil::random_vector(rng, 3, -1, 1), testutil::random_vector(rng, 2, -1, 1));
        const SaddleProblem p = q.to_problem();
        const Vector z = testutil::random_vector(rng, 5, -2, 2);
        const Matrix A = matrix_A(p, z);
        const Matrix B = matrix_B(p, z);
        CHECK((A + A.transpose()).norm() == 0.0);
        CHECK((B - B.transpose()).norm() <= 1e-14);
        // Central differences of the field reproduce A + B.
        Matrix fd(5, 5);
        for (int i = 0; i < 5; ++i) {
            Vector e = Vector::Zero(5);
            e(i) = 1e-6;
            fd.col(i) = (gradient_field(p, z + e) - gradient_field(p, z - e)) / 2e-6;
        }
        CHECK((fd - A - B).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("Lagrangian of a concave program") {
    const ConcaveProgram cp = small_program();
    const SaddleProblem p = build_lagrangian(cp);
    CHECK(p.n == 2);
    CHECK(p.m == 2);
    const Vector x = vec({0.2, 0.5});
    const Vector y = vec({0.7, -0.3});
    const double U = -(0.04 + 0.25) + 0.2;
    const double g1 = 1.0 - 0.7;
    const double g2 = 0.2 - 0.5;
    CHECK(p.value(x, y) == doctest::Approx(U + 0.7 * g1 - 0.3 * g2));
    CHECK((p.grad_y(x, y) - vec({g1, g2})).norm() <= 1e-15);
    Matrix hxy(2, 2);
    hxy << -1, 1, -1, -1;
    CHECK((p.hess_xy(x, y) - hxy).norm() == 0.0);

    const BoxDomain d = lagrangian_domain(cp);
    CHECK(d.lower()(2) == 0.0);
    CHECK(d.upper()(2) == inf);
    CHECK(d.lower()(3) == -inf);
    CHECK(d.lower()(0) == -inf);
    ConcaveProgram bad = cp;
    bad.x_domain = BoxDomain::orthant(3);
    CHECK_THROWS_AS(lagrangian_domain(bad), InputError);
    CHECK_THROWS_AS(build_lagrangian(ConcaveProgram{}), InputError);
}

TEST_CASE("restricted saddle test on Example 1") {
    const SaddleProblem p = example1();
    const BoxDomain K(vec({1.0, -inf, -inf}), vec({inf, inf, inf}));
    CHECK(is_restricted_saddle(p, K, vec({1.0, -1.0, 0.0})));
    CHECK_FALSE(is_restricted_saddle(p, K, vec({1.0, 0.0, 0.0})));
    CHECK_FALSE(is_restricted_saddle(p, K, vec({2.0, -2.0, 0.0})));
    CHECK_THROWS_AS(is_restricted_saddle(p, K, vec({0.0, 0.0, 0.0})), StateError);
    CHECK_THROWS_AS(is_restricted_saddle(p, BoxDomain::unbounded(2), vec({0.0, 0.0})), InputError);
    const BoxDomain R3 = BoxDomain::unbounded(3);
    CHECK(is_restricted_saddle(p, R3, Vector::Zero(3)));
}

TEST_CASE("derivative audit catches wrong callbacks") {
    std::mt19937_64 rng(10);
    std::vector<Vector> samples;
    for (int k = 0; k < 10; ++k) samples.push_back(testutil::random_vector(rng, 3, -2, 2));
    SaddleProblem p = example1();
    CHECK(validate_derivatives(p, samples).ok());

    SaddleProblem wrong_grad = p;
    wrong_grad.grad_x = [](const Vector& x, const Vector& y) -> Vector { return vec({-x(0) + 2 * y(0), y(0)}); };
    CHECK_FALSE(validate_derivatives(wrong_grad, samples).ok());

    SaddleProblem convex_x = p;
    convex_x.value = [](const Vector& x, const Vector& y) { return 0.5 * x(0) * x(0) + (x(0) + x(1)) * y(0); };
    convex_x.grad_x = [](const Vector& x, const Vector& y) -> Vector { return vec({x(0) + y(0), y(0)}); };
    convex_x.hess_xx = [](const Vector&, const Vector&) -> Matrix {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 1.0;
        return h;
    };
    const auto rep = validate_derivatives(convex_x, samples);
    CHECK(rep.grad_error <= 1e-5);
    CHECK(rep.max_eig_xx == doctest::Approx(1.0));
    CHECK_FALSE(rep.ok());
}

TEST_CASE("callback failures surface as evaluation errors") {
    SaddleProblem p = example1();
    p.grad_x = [](const Vector&, const Vector&) -> Vector { throw std::domain_error("log of negative"); };
    CHECK_THROWS_AS(gradient_field(p, Vector::Zero(3)), EvaluationError);
    CHECK_THROWS_AS(gradient_field(p, Vector::Zero(2)), InputError);
}

TEST_CASE("working-region samples stay in the domain and are reproducible") {
    const BoxDomain d(vec({0.0, -inf, 5.0, 1.0}), vec({inf, -20.0, 5.0, 2.0}));
    const auto a = sample_working_region(d, 50, 42);
    const auto b = sample_working_region(d, 50, 42);
    REQUIRE(a.size() == 50);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(d.contains(a[k]));
        CHECK(a[k] == b[k]);
        CHECK(a[k](0) <= 10.0);
        CHECK(a[k](1) == -20.0);  // clip interval empty, falls back to the bound
    }
    CHECK(sample_working_region(d, 1, 43).front() != a.front());
}
