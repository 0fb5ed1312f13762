#pragma once

// Concave-convex functions phi(x, y), Lagrangians of concave programs, and
// the skew/symmetric split of the gradient field's Jacobian.

#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace saddleflow {

/// A C2 function concave in x (length n) and convex in y (length m).
/// Callbacks must be pure; they may be called concurrently.
struct SaddleProblem {
    int n = 0;
    int m = 0;
    std::function<double(const Vector& x, const Vector& y)> value;
    std::function<Vector(const Vector& x, const Vector& y)> grad_x;
    std::function<Vector(const Vector& x, const Vector& y)> grad_y;
    std::function<Matrix(const Vector& x, const Vector& y)> hess_xx;
    std::function<Matrix(const Vector& x, const Vector& y)> hess_xy;  // n x m
    std::function<Matrix(const Vector& x, const Vector& y)> hess_yy;
    /// Hessian blocks do not depend on the point.
    bool constant_hessians = false;

    int dim() const noexcept { return n + m; }
    Vector x_part(const Vector& z) const { return z.head(n); }
    Vector y_part(const Vector& z) const { return z.tail(m); }
};

/// phi(x,y) = 1/2 x'Px + 1/2 y'Qy + x'Ry + p'x + q'y with P <= 0 and Q >= 0.
struct QuadraticSaddle {
    Matrix P;
    Matrix Q;
    Matrix R;
    Vector p;
    Vector q;

    QuadraticSaddle(Matrix P, Matrix Q, Matrix R, Vector p, Vector q);
    QuadraticSaddle(Matrix P, Matrix Q, Matrix R);

    SaddleProblem to_problem() const;
};

/// Real function on R^n with two derivatives.
struct ScalarFunction {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> grad;
    std::function<Matrix(const Vector&)> hess;
};

/// max U(x) subject to g_j(x) >= 0 (or == 0 when flagged), x in x_domain.
struct ConcaveProgram {
    int n = 0;
    ScalarFunction objective;
    std::vector<ScalarFunction> constraints;
    /// Per-constraint flag; an equality constraint gets a sign-free multiplier.
    std::vector<bool> equality;
    std::optional<BoxDomain> x_domain;

    int m() const noexcept { return static_cast<int>(constraints.size()); }
    bool is_equality(int j) const { return j < static_cast<int>(equality.size()) && equality[j]; }
};

/// Affine constraint a'x + b as a ScalarFunction.
ScalarFunction affine_function(Vector a, double b);

/// [phi_x, -phi_y] at z.
Vector gradient_field(const SaddleProblem& p, const Vector& z);

/// [[0, phi_xy], [-phi_yx, 0]].
Matrix matrix_A(const SaddleProblem& p, const Vector& z);
/// [[phi_xx, 0], [0, -phi_yy]].
Matrix matrix_B(const SaddleProblem& p, const Vector& z);
/// Jacobian of gradient_field, A(z) + B(z).
Matrix field_jacobian(const SaddleProblem& p, const Vector& z);

/// phi(x,y) = U(x) + y'g(x).
SaddleProblem build_lagrangian(const ConcaveProgram& cp);
/// K_x x K_y with K_y = R_+ for inequalities and R for equalities.
BoxDomain lagrangian_domain(const ConcaveProgram& cp);

/// The gradient field lies in the normal cone of the box at z, within tol.
bool is_restricted_saddle(const SaddleProblem& p, const BoxDomain& domain, const Vector& z, double tol = 1e-8);

struct DerivativeReport {
    double grad_error = 0.0;      // max relative error vs central differences
    double hess_error = 0.0;      // max relative error vs gradient differences
    double max_eig_xx = -1e300;   // should be <= 0
    double min_eig_yy = 1e300;    // should be >= 0
    std::vector<std::string> failures;

    bool ok() const noexcept { return failures.empty(); }
};

/// Finite-difference audit of the callbacks of `p` at the sample points.
DerivativeReport validate_derivatives(const SaddleProblem& p, const std::vector<Vector>& samples,
                                      double tol = 1e-5, double eig_tol = 1e-8);

/// Uniform samples of the domain clipped to [-10, 10]^d.
std::vector<Vector> sample_working_region(const BoxDomain& domain, int count, std::uint64_t seed,
                                          double radius = 10.0);

}  // namespace saddleflow
