#include "saddleflow/modifications.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace saddleflow {

ScalarFunction quadratic_gain_psi(const Vector& kappas) {
    if (!(kappas.array() > 0.0).all()) throw SpecError("quadratic_gain_psi: gains must be positive");
    ScalarFunction f;
    f.value = [kappas](const Vector& u) { return -0.5 * (kappas.array() * u.array().square()).sum(); };
    f.grad = [kappas](const Vector& u) -> Vector { return -(kappas.array() * u.array()).matrix(); };
    f.hess = [kappas](const Vector&) -> Matrix { return Matrix((-kappas).asDiagonal()); };
    return f;
}

Vector AuxiliaryProblem::lift(const Vector& z) const {
    const int n = static_cast<int>(M.cols());
    const int naux = static_cast<int>(M.rows());
    require_dim(z, problem.dim() - naux, "AuxiliaryProblem::lift");
    Vector out(z.size() + naux);
    out.head(naux) = M * z.head(n);
    out.tail(z.size()) = z;
    return out;
}

Vector AuxiliaryProblem::project_down(const Vector& z) const {
    require_dim(z, problem.dim(), "AuxiliaryProblem::project_down");
    return z.tail(z.size() - M.rows());
}

namespace {

void check_aux_psi(const ScalarFunction& psi, int naux) {
    const Vector zero = Vector::Zero(naux);
    if (std::abs(psi.value(zero)) > 1e-12) throw SpecError("auxiliary psi must vanish at 0");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int s = 0; s < 50; ++s) {
        Vector u(naux);
        for (int i = 0; i < naux; ++i) u(i) = dist(rng);
        if (psi.value(u) > 1e-12) throw SpecError("auxiliary psi must be non-positive");
        Eigen::SelfAdjointEigenSolver<Matrix> es(psi.hess(u));
        if (!(es.eigenvalues().maxCoeff() < 0.0)) throw SpecError("auxiliary psi must be strictly concave");
    }
}

AuxiliaryProblem assemble_aux(const SaddleProblem& p, const BoxDomain& domain, const Matrix& M, const ScalarFunction& psi,
                              const Vector& reference_saddle, bool quadratic_psi) {
    if (domain.dim() != p.dim()) throw InputError("auxiliary_variables: domain/problem dimension mismatch");
    if (M.cols() != p.n || M.rows() == 0) throw InputError("auxiliary_variables: M must have n columns");
    require_dim(reference_saddle, p.dim(), "auxiliary_variables");
    const int n = p.n;
    const int naux = static_cast<int>(M.rows());

    Matrix stacked(naux + n, n);
    stacked.topRows(naux) = M;
    stacked.bottomRows(n) = p.hess_xx(p.x_part(reference_saddle), p.y_part(reference_saddle));
    if (null_space(stacked, 1e-10).cols() > 0) {
        throw SpecError("auxiliary_variables: ker(M) and ker(phi_xx) intersect nontrivially at the reference saddle");
    }
    check_aux_psi(psi, naux);

    SaddleProblem q;
    q.n = naux + n;
    q.m = p.m;
    q.constant_hessians = p.constant_hessians && quadratic_psi;
    auto split = [naux, n](const Vector& xx) { return std::pair<Vector, Vector>(xx.head(naux), xx.segment(naux, n)); };
    q.value = [p, M, psi, split](const Vector& xx, const Vector& y) {
        const auto [xa, x] = split(xx);
        return p.value(x, y) + psi.value(M * x - xa);
    };
    q.grad_x = [p, M, psi, split, naux, n](const Vector& xx, const Vector& y) -> Vector {
        const auto [xa, x] = split(xx);
        const Vector du = psi.grad(M * x - xa);
        Vector g(naux + n);
        g.head(naux) = -du;
        g.tail(n) = p.grad_x(x, y) + M.transpose() * du;
        return g;
    };
    q.grad_y = [p, split](const Vector& xx, const Vector& y) -> Vector {
        const auto [xa, x] = split(xx);
        (void)xa;
        return p.grad_y(x, y);
    };
    q.hess_xx = [p, M, psi, split, naux, n](const Vector& xx, const Vector& y) -> Matrix {
        const auto [xa, x] = split(xx);
        const Matrix h = psi.hess(M * x - xa);
        Matrix out(naux + n, naux + n);
        out.topLeftCorner(naux, naux) = h;
        out.topRightCorner(naux, n) = -h * M;
        out.bottomLeftCorner(n, naux) = -(h * M).transpose();
        out.bottomRightCorner(n, n) = p.hess_xx(x, y) + M.transpose() * h * M;
        return out;
    };
    q.hess_xy = [p, split, naux, n](const Vector& xx, const Vector& y) -> Matrix {
        const auto [xa, x] = split(xx);
        (void)xa;
        Matrix out = Matrix::Zero(naux + n, p.m);
        out.bottomRows(n) = p.hess_xy(x, y);
        return out;
    };
    q.hess_yy = [p, split](const Vector& xx, const Vector& y) -> Matrix {
        const auto [xa, x] = split(xx);
        (void)xa;
        return p.hess_yy(x, y);
    };

    BoxDomain dom = BoxDomain::unbounded(naux).product(domain);
    return AuxiliaryProblem{std::move(q), std::move(dom), M};
}

}  // namespace

AuxiliaryProblem auxiliary_variables(const SaddleProblem& p, const BoxDomain& domain, const Matrix& M,
                                     const Vector& kappas, const Vector& reference_saddle) {
    if (kappas.size() != M.rows()) throw InputError("auxiliary_variables: one gain per auxiliary variable required");
    return assemble_aux(p, domain, M, quadratic_gain_psi(kappas), reference_saddle, true);
}

AuxiliaryProblem auxiliary_variables(const SaddleProblem& p, const BoxDomain& domain, const Matrix& M,
                                     const ScalarFunction& psi, const Vector& reference_saddle) {
    return assemble_aux(p, domain, M, psi, reference_saddle, false);
}

ScalarFunction hinge_penalty(int m) {
    ScalarFunction f;
    f.value = [](const Vector& u) { return -0.5 * u.cwiseMin(0.0).squaredNorm(); };
    f.grad = [](const Vector& u) -> Vector { return -u.cwiseMin(0.0); };
    f.hess = [m](const Vector& u) -> Matrix {
        Vector d(m);
        for (int j = 0; j < m; ++j) d(j) = u(j) < 0.0 ? -1.0 : 0.0;
        return Matrix(d.asDiagonal());
    };
    return f;
}

namespace {

void check_penalty(const ScalarFunction& psi, int m) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int s = 0; s < 200; ++s) {
        Vector u(m);
        for (int j = 0; j < m; ++j) u(j) = dist(rng);
        // Every other sample is pushed onto the feasible side.
        if (s % 2 == 0) u = u.cwiseAbs();
        const bool feasible = (u.array() >= 0.0).all();
        const bool vanishes = std::abs(psi.value(u)) <= 1e-14;
        if (feasible != vanishes) throw SpecError("penalty psi must vanish exactly on u >= 0");
    }
}

Matrix constraint_jacobian_t(const ConcaveProgram& cp, const Vector& x) {
    Matrix g(cp.n, cp.m());
    for (int j = 0; j < cp.m(); ++j) g.col(j) = cp.constraints[j].grad(x);
    return g;
}

Vector constraint_values(const ConcaveProgram& cp, const Vector& x) {
    Vector g(cp.m());
    for (int j = 0; j < cp.m(); ++j) g(j) = cp.constraints[j].value(x);
    return g;
}

}  // namespace

SaddleProblem penalty_method(const ConcaveProgram& cp, const std::optional<ScalarFunction>& psi_opt) {
    const ScalarFunction psi = psi_opt ? *psi_opt : hinge_penalty(cp.m());
    check_penalty(psi, cp.m());
    SaddleProblem q = build_lagrangian(cp);
    const SaddleProblem base = q;
    const ConcaveProgram prog = cp;
    q.value = [base, prog, psi](const Vector& x, const Vector& y) {
        return base.value(x, y) + psi.value(constraint_values(prog, x));
    };
    q.grad_x = [base, prog, psi](const Vector& x, const Vector& y) -> Vector {
        return base.grad_x(x, y) + constraint_jacobian_t(prog, x) * psi.grad(constraint_values(prog, x));
    };
    q.hess_xx = [base, prog, psi](const Vector& x, const Vector& y) -> Matrix {
        const Vector u = constraint_values(prog, x);
        const Vector du = psi.grad(u);
        const Matrix g = constraint_jacobian_t(prog, x);
        Matrix h = base.hess_xx(x, y) + g * psi.hess(u) * g.transpose();
        for (int j = 0; j < prog.m(); ++j) h += du(j) * prog.constraints[j].hess(x);
        return h;
    };
    q.constant_hessians = false;
    return q;
}

ScalarCurve saturating_curve() {
    return ScalarCurve{[](double s) { return -std::expm1(-s); }, [](double s) { return std::exp(-s); },
                       [](double s) { return -std::exp(-s); }};
}

SaddleProblem constraint_modification(const ConcaveProgram& cp, const std::vector<ScalarCurve>& psi_in) {
    for (int j = 0; j < cp.m(); ++j) {
        if (cp.is_equality(j)) throw SpecError("constraint_modification: equality constraints are not supported");
    }
    std::vector<ScalarCurve> psi = psi_in;
    if (psi.empty()) psi.assign(static_cast<std::size_t>(cp.m()), saturating_curve());
    if (static_cast<int>(psi.size()) != cp.m()) throw InputError("constraint_modification: one psi per constraint required");
    for (const auto& c : psi) {
        if (std::abs(c.value(0.0)) > 1e-12) throw SpecError("constraint_modification: psi(0) must be 0");
        for (int k = 0; k <= 60; ++k) {
            const double s = -1.0 + 0.1 * k;
            if (c.d1(s) < 0.0 || !(c.d2(s) < 0.0)) {
                throw SpecError("constraint_modification: psi must be non-decreasing and strictly concave");
            }
        }
    }

    const ConcaveProgram prog = cp;
    SaddleProblem q;
    q.n = cp.n;
    q.m = cp.m();
    q.value = [prog, psi](const Vector& x, const Vector& y) {
        double v = prog.objective.value(x);
        for (int j = 0; j < prog.m(); ++j) v += y(j) * psi[j].value(prog.constraints[j].value(x));
        return v;
    };
    q.grad_x = [prog, psi](const Vector& x, const Vector& y) -> Vector {
        Vector g = prog.objective.grad(x);
        for (int j = 0; j < prog.m(); ++j) {
            g += y(j) * psi[j].d1(prog.constraints[j].value(x)) * prog.constraints[j].grad(x);
        }
        return g;
    };
    q.grad_y = [prog, psi](const Vector& x, const Vector&) -> Vector {
        Vector g(prog.m());
        for (int j = 0; j < prog.m(); ++j) g(j) = psi[j].value(prog.constraints[j].value(x));
        return g;
    };
    q.hess_xx = [prog, psi](const Vector& x, const Vector& y) -> Matrix {
        Matrix h = prog.objective.hess(x);
        for (int j = 0; j < prog.m(); ++j) {
            const double s = prog.constraints[j].value(x);
            const Vector dg = prog.constraints[j].grad(x);
            h += y(j) * (psi[j].d2(s) * dg * dg.transpose() + psi[j].d1(s) * prog.constraints[j].hess(x));
        }
        return h;
    };
    q.hess_xy = [prog, psi](const Vector& x, const Vector&) -> Matrix {
        Matrix h(prog.n, prog.m());
        for (int j = 0; j < prog.m(); ++j) {
            h.col(j) = psi[j].d1(prog.constraints[j].value(x)) * prog.constraints[j].grad(x);
        }
        return h;
    };
    q.hess_yy = [m = q.m](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(m, m); };
    return q;
}

SaddleProblem constraint_modification(const ConcaveProgram& cp, const AffineSubspace& domain_span,
                                      const std::vector<ScalarCurve>& psi) {
    const int n = cp.n;
    const int m = cp.m();
    if (domain_span.projector.rows() != n + m) throw InputError("constraint_modification: domain dimension mismatch");
    const double coupling = std::max(domain_span.projector.topRightCorner(n, m).cwiseAbs().maxCoeff(),
                                     domain_span.projector.bottomLeftCorner(m, n).cwiseAbs().maxCoeff());
    if (m > 0 && coupling > 1e-12) throw DomainError("constraint_modification: domain is not a product K_x x K_y");
    return constraint_modification(cp, psi);
}

}  // namespace saddleflow
