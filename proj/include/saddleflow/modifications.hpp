#pragma once

// Transformed problems with the same saddle points (in x) whose subgradient
// dynamics converge: auxiliary variables, penalty terms, and concave
// reshaping of the constraints.

#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"
#include "saddleflow/saddle.hpp"

#include <optional>
#include <vector>

namespace saddleflow {

/// psi(u) = -1/2 sum_k kappa_k u_k^2.
ScalarFunction quadratic_gain_psi(const Vector& kappas);

struct AuxiliaryProblem {
    SaddleProblem problem;  // primal variables ordered (x', x)
    BoxDomain domain;       // R^{n'} x K
    Matrix M;

    /// (Mx, x, y) for a point (x, y) of the base problem.
    Vector lift(const Vector& z) const;
    /// Drops the auxiliary block.
    Vector project_down(const Vector& z) const;
};

/// phi'(x', x, y) = phi(x, y) + psi(Mx - x') with psi(u) = -1/2 sum kappa u^2.
/// Throws SpecError unless ker(M) and ker(phi_xx) at `reference_saddle`
/// intersect trivially.
AuxiliaryProblem auxiliary_variables(const SaddleProblem& p, const BoxDomain& domain, const Matrix& M,
                                     const Vector& kappas, const Vector& reference_saddle);

/// Same with a caller-supplied psi on R^{n'}. psi must vanish at 0, be
/// non-positive and strictly concave on samples; otherwise SpecError.
AuxiliaryProblem auxiliary_variables(const SaddleProblem& p, const BoxDomain& domain, const Matrix& M,
                                     const ScalarFunction& psi, const Vector& reference_saddle);

/// psi(u) = -1/2 sum min(u_j, 0)^2. Its Hessian is taken as 0 at u_j = 0.
ScalarFunction hinge_penalty(int m);

/// phi'(x, y) = phi(x, y) + psi(g(x)); psi must vanish exactly on u >= 0
/// (checked on samples, SpecError otherwise).
SaddleProblem penalty_method(const ConcaveProgram& cp, const std::optional<ScalarFunction>& psi = std::nullopt);

/// Scalar function with two derivatives.
struct ScalarCurve {
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
};

/// 1 - exp(-s)
ScalarCurve saturating_curve();

/// phi'(x, y) = U(x) + sum_j y_j psi_j(g_j(x)). Components must satisfy
/// psi(0) = 0, psi' >= 0, psi'' < 0 on samples (SpecError) and every
/// constraint must be an inequality (SpecError). An empty list selects
/// saturating_curve for every constraint.
SaddleProblem constraint_modification(const ConcaveProgram& cp, const std::vector<ScalarCurve>& psi = {});

/// Variant for a domain given by its affine span: DomainError unless the
/// projector splits into an x block and a y block.
SaddleProblem constraint_modification(const ConcaveProgram& cp, const AffineSubspace& domain_span,
                                      const std::vector<ScalarCurve>& psi = {});

}  // namespace saddleflow
