#include "saddleflow/saddle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

namespace saddleflow {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw EvaluationError(std::string(what) + ": callback failed: " + e.what());
    }
}

void check_split(const SaddleProblem& p, const Vector& z, const char* what) {
    require_dim(z, p.dim(), what);
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

QuadraticSaddle::QuadraticSaddle(Matrix P_, Matrix Q_, Matrix R_, Vector p_, Vector q_)
    : P(std::move(P_)), Q(std::move(Q_)), R(std::move(R_)), p(std::move(p_)), q(std::move(q_)) {
    const auto n = P.rows();
    const auto m = Q.rows();
    if (P.cols() != n || Q.cols() != m || R.rows() != n || R.cols() != m || p.size() != n || q.size() != m) {
        throw InputError("QuadraticSaddle: inconsistent block shapes");
    }
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
        (m > 0 && (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12)) {
        throw InputError("QuadraticSaddle: P and Q must be symmetric");
    }
}

QuadraticSaddle::QuadraticSaddle(Matrix P_, Matrix Q_, Matrix R_)
    : QuadraticSaddle(P_, Q_, R_, Vector::Zero(P_.rows()), Vector::Zero(Q_.rows())) {}

SaddleProblem QuadraticSaddle::to_problem() const {
    SaddleProblem s;
    s.n = static_cast<int>(P.rows());
    s.m = static_cast<int>(Q.rows());
    s.constant_hessians = true;
    const QuadraticSaddle self = *this;
    s.value = [self](const Vector& x, const Vector& y) {
        return 0.5 * x.dot(self.P * x) + 0.5 * y.dot(self.Q * y) + x.dot(self.R * y) + self.p.dot(x) + self.q.dot(y);
    };
    s.grad_x = [self](const Vector& x, const Vector& y) -> Vector { return self.P * x + self.R * y + self.p; };
    s.grad_y = [self](const Vector& x, const Vector& y) -> Vector {
        return self.Q * y + self.R.transpose() * x + self.q;
    };
    s.hess_xx = [P = P](const Vector&, const Vector&) { return P; };
    s.hess_xy = [R = R](const Vector&, const Vector&) { return R; };
    s.hess_yy = [Q = Q](const Vector&, const Vector&) { return Q; };
    return s;
}

ScalarFunction affine_function(Vector a, double b) {
    ScalarFunction f;
    const auto n = a.size();
    f.value = [a, b](const Vector& x) { return a.dot(x) + b; };
    f.grad = [a](const Vector&) { return a; };
    f.hess = [n](const Vector&) -> Matrix { return Matrix::Zero(n, n); };
    return f;
}

Vector gradient_field(const SaddleProblem& p, const Vector& z) {
    check_split(p, z, "gradient_field");
    const Vector x = p.x_part(z);
    const Vector y = p.y_part(z);
    Vector f(p.dim());
    guarded("gradient_field", [&] {
        f.head(p.n) = p.grad_x(x, y);
        f.tail(p.m) = -p.grad_y(x, y);
        return 0;
    });
    return f;
}

Matrix matrix_A(const SaddleProblem& p, const Vector& z) {
    check_split(p, z, "matrix_A");
    const Matrix xy = guarded("matrix_A", [&] { return p.hess_xy(p.x_part(z), p.y_part(z)); });
    Matrix a = Matrix::Zero(p.dim(), p.dim());
    a.topRightCorner(p.n, p.m) = xy;
    a.bottomLeftCorner(p.m, p.n) = -xy.transpose();
    return a;
}

Matrix matrix_B(const SaddleProblem& p, const Vector& z) {
    check_split(p, z, "matrix_B");
    const Vector x = p.x_part(z);
    const Vector y = p.y_part(z);
    Matrix b = Matrix::Zero(p.dim(), p.dim());
    guarded("matrix_B", [&] {
        b.topLeftCorner(p.n, p.n) = p.hess_xx(x, y);
        if (p.m > 0) b.bottomRightCorner(p.m, p.m) = -p.hess_yy(x, y);
        return 0;
    });
    return b;
}

Matrix field_jacobian(const SaddleProblem& p, const Vector& z) { return matrix_A(p, z) + matrix_B(p, z); }

SaddleProblem build_lagrangian(const ConcaveProgram& cp) {
    if (cp.n <= 0) throw InputError("build_lagrangian: program has no variables");
    SaddleProblem s;
    s.n = cp.n;
    s.m = cp.m();
    const ConcaveProgram prog = cp;
    s.value = [prog](const Vector& x, const Vector& y) {
        double v = prog.objective.value(x);
        for (int j = 0; j < prog.m(); ++j) v += y(j) * prog.constraints[j].value(x);
        return v;
    };
    s.grad_x = [prog](const Vector& x, const Vector& y) -> Vector {
        Vector g = prog.objective.grad(x);
        for (int j = 0; j < prog.m(); ++j) g += y(j) * prog.constraints[j].grad(x);
        return g;
    };
    s.grad_y = [prog](const Vector& x, const Vector&) -> Vector {
        Vector g(prog.m());
        for (int j = 0; j < prog.m(); ++j) g(j) = prog.constraints[j].value(x);
        return g;
    };
    s.hess_xx = [prog](const Vector& x, const Vector& y) -> Matrix {
        Matrix h = prog.objective.hess(x);
        for (int j = 0; j < prog.m(); ++j) h += y(j) * prog.constraints[j].hess(x);
        return h;
    };
    s.hess_xy = [prog](const Vector& x, const Vector&) -> Matrix {
        Matrix h(prog.n, prog.m());
        for (int j = 0; j < prog.m(); ++j) h.col(j) = prog.constraints[j].grad(x);
        return h;
    };
    s.hess_yy = [m = s.m](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(m, m); };
    return s;
}

BoxDomain lagrangian_domain(const ConcaveProgram& cp) {
    const BoxDomain kx = cp.x_domain.value_or(BoxDomain::unbounded(cp.n));
    if (kx.dim() != cp.n) throw InputError("lagrangian_domain: x_domain dimension mismatch");
    if (cp.m() == 0) return kx;
    Vector lo(cp.m());
    Vector hi = Vector::Constant(cp.m(), std::numeric_limits<double>::infinity());
    for (int j = 0; j < cp.m(); ++j) lo(j) = cp.is_equality(j) ? -std::numeric_limits<double>::infinity() : 0.0;
    return kx.product(BoxDomain(lo, hi));
}

bool is_restricted_saddle(const SaddleProblem& p, const BoxDomain& domain, const Vector& z, double tol) {
    require_dim(z, domain.dim(), "is_restricted_saddle");
    if (domain.dim() != p.dim()) throw InputError("is_restricted_saddle: domain/problem dimension mismatch");
    if (domain.violation(z) > kBoundTol) throw StateError("is_restricted_saddle: point lies outside the domain");
    const Vector f = gradient_field(p, z);
    for (int i = 0; i < domain.dim(); ++i) {
        if (!std::isfinite(f(i))) return false;
        const bool lo = domain.at_lower(z, i);
        const bool hi = domain.at_upper(z, i);
        if (lo && hi) continue;
        if (lo && f(i) <= tol) continue;
        if (hi && f(i) >= -tol) continue;
        if (std::abs(f(i)) <= tol) continue;
        return false;
    }
    return true;
}

DerivativeReport validate_derivatives(const SaddleProblem& p, const std::vector<Vector>& samples, double tol,
                                      double eig_tol) {
    constexpr double h = 1e-5;
    DerivativeReport rep;
    const int d = p.dim();
    for (const auto& z : samples) {
        require_dim(z, d, "validate_derivatives");
        auto val = [&](const Vector& w) { return p.value(p.x_part(w), p.y_part(w)); };
        auto grad = [&](const Vector& w) {
            Vector g(d);
            g.head(p.n) = p.grad_x(p.x_part(w), p.y_part(w));
            g.tail(p.m) = p.grad_y(p.x_part(w), p.y_part(w));
            return g;
        };
        Matrix hess(d, d);
        hess.topLeftCorner(p.n, p.n) = p.hess_xx(p.x_part(z), p.y_part(z));
        hess.topRightCorner(p.n, p.m) = p.hess_xy(p.x_part(z), p.y_part(z));
        hess.bottomLeftCorner(p.m, p.n) = hess.topRightCorner(p.n, p.m).transpose();
        hess.bottomRightCorner(p.m, p.m) = p.hess_yy(p.x_part(z), p.y_part(z));

        const Vector g = grad(z);
        for (int i = 0; i < d; ++i) {
            Vector zp = z, zm = z;
            zp(i) += h;
            zm(i) -= h;
            const double fd = (val(zp) - val(zm)) / (2 * h);
            rep.grad_error = std::max(rep.grad_error, rel_err(g(i), fd));
            const Vector gd = (grad(zp) - grad(zm)) / (2 * h);
            for (int k = 0; k < d; ++k) rep.hess_error = std::max(rep.hess_error, rel_err(hess(k, i), gd(k)));
        }
        if (p.n > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> ex(hess.topLeftCorner(p.n, p.n));
            rep.max_eig_xx = std::max(rep.max_eig_xx, ex.eigenvalues().maxCoeff());
        }
        if (p.m > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> ey(hess.bottomRightCorner(p.m, p.m));
            rep.min_eig_yy = std::min(rep.min_eig_yy, ey.eigenvalues().minCoeff());
        }
    }
    if (!(rep.grad_error <= tol)) rep.failures.push_back("gradient mismatch " + format_double(rep.grad_error));
    if (!(rep.hess_error <= tol)) rep.failures.push_back("hessian mismatch " + format_double(rep.hess_error));
    if (rep.max_eig_xx > eig_tol) rep.failures.push_back("phi_xx not negative semidefinite");
    if (rep.min_eig_yy < -eig_tol) rep.failures.push_back("phi_yy not positive semidefinite");
    return rep;
}

std::vector<Vector> sample_working_region(const BoxDomain& domain, int count, std::uint64_t seed, double radius) {
    std::mt19937_64 rng(seed);
    std::vector<Vector> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Vector z(domain.dim());
        for (int i = 0; i < domain.dim(); ++i) {
            const double lo = std::max(domain.lower()(i), -radius);
            const double hi = std::min(domain.upper()(i), radius);
            if (lo < hi) z(i) = std::uniform_real_distribution<double>(lo, hi)(rng);
            else z(i) = domain.has_lower(i) ? domain.lower()(i) : domain.upper()(i);
        }
        out.push_back(std::move(z));
    }
    return out;
}

}  // namespace saddleflow
