#include "saddleflow/routing.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace saddleflow {

Utility log_utility() {
    return Utility{"log1p", [](double s) { return std::log1p(s); }, [](double s) { return 1.0 / (1.0 + s); },
                   [](double s) { return -1.0 / ((1.0 + s) * (1.0 + s)); }};
}

Utility saturating_utility() {
    return Utility{"one_minus_exp", [](double s) { return -std::expm1(-s); }, [](double s) { return std::exp(-s); },
                   [](double s) { return -std::exp(-s); }};
}

void RoutingNetwork::validate() const {
    const auto n = H.cols();
    if (H.rows() == 0 || n == 0) throw InputError("routing: H must be non-empty");
    if (L.cols() != n || L.rows() == 0) throw InputError("routing: L must have one column per route");
    if (C.size() != L.rows()) throw InputError("routing: one capacity per link required");
    if (static_cast<Eigen::Index>(utilities.size()) != H.rows()) throw InputError("routing: one utility per source required");
    if (kappas.size() != n) throw InputError("routing: one gain per route required");
    auto binary = [](const Matrix& m) {
        return ((m.array() == 0.0) || (m.array() == 1.0)).all();
    };
    if (!binary(H) || !binary(L)) throw InputError("routing: incidence matrices must be 0/1");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (H.col(j).sum() != 1.0) throw InputError("routing: route " + std::to_string(j) + " must have exactly one source");
        if (L.col(j).sum() < 1.0) throw InputError("routing: route " + std::to_string(j) + " uses no link");
        if (!(kappas(j) > 0.0)) throw InputError("routing: gains must be positive");
    }
    if (!(C.array() > 0.0).all()) throw InputError("routing: capacities must be positive");
    for (const auto& u : utilities) {
        if (!u.value || !u.d1 || !u.d2) throw InputError("routing: utility '" + u.name + "' is incomplete");
        for (int k = 0; k <= 20; ++k) {
            const double s = 0.5 * k;
            if (!(u.d1(s) > 0.0) || !(u.d2(s) < 0.0)) {
                throw InputError("routing: utility '" + u.name + "' is not strictly increasing and concave");
            }
        }
    }
}

ConcaveProgram routing_program(const RoutingNetwork& net) {
    net.validate();
    ConcaveProgram cp;
    cp.n = net.routes();
    const Matrix H = net.H;
    const auto utils = net.utilities;
    cp.objective.value = [H, utils](const Vector& x) {
        const Vector s = H * x;
        double v = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) v += utils[i].value(s(i));
        return v;
    };
    cp.objective.grad = [H, utils](const Vector& x) -> Vector {
        const Vector s = H * x;
        Vector d(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) d(i) = utils[i].d1(s(i));
        return H.transpose() * d;
    };
    cp.objective.hess = [H, utils](const Vector& x) -> Matrix {
        const Vector s = H * x;
        Vector d(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) d(i) = utils[i].d2(s(i));
        return H.transpose() * d.asDiagonal() * H;
    };
    for (int k = 0; k < net.links(); ++k) {
        cp.constraints.push_back(affine_function(-net.L.row(k).transpose(), net.C(k)));
        cp.equality.push_back(false);
    }
    cp.x_domain = BoxDomain::orthant(cp.n);
    return cp;
}

SaddleProblem routing_problem(const RoutingNetwork& net) { return build_lagrangian(routing_program(net)); }

BoxDomain routing_domain(const RoutingNetwork& net) {
    net.validate();
    return BoxDomain::orthant(net.routes() + net.links());
}

std::optional<RoutingInstability> routing_instability(const RoutingNetwork& net, double tol) {
    net.validate();
    const Matrix ltl = net.L.transpose() * net.L;
    Eigen::SelfAdjointEigenSolver<Matrix> es(ltl);
    const Vector& ev = es.eigenvalues();
    const Matrix& vec = es.eigenvectors();
    const Eigen::Index n = ev.size();
    // Eigenvalues are sorted; group numerically equal ones into eigenspaces.
    for (Eigen::Index start = 0; start < n;) {
        Eigen::Index end = start + 1;
        while (end < n && std::abs(ev(end) - ev(start)) <= 1e-9 * std::max(1.0, std::abs(ev(start)))) ++end;
        const double lambda = ev.segment(start, end - start).mean();
        if (lambda > tol) {
            const Matrix e = vec.middleCols(start, end - start);
            const Matrix coef = null_space(net.H * e, tol);
            if (coef.cols() > 0) {
                Vector u = e * coef.col(0);
                u.normalize();
                return RoutingInstability{u, lambda};
            }
        }
        start = end;
    }
    return std::nullopt;
}

Matrix matrix_exponential(const Matrix& a, double t) {
    if (a.rows() != a.cols()) throw InputError("matrix_exponential: matrix must be square");
    const Matrix scaled = t * a;
    return scaled.exp();
}

Trajectory explicit_oscillation(const SaddleProblem& p, const Vector& saddle, const Vector& u,
                                const std::vector<double>& times, std::optional<double> c) {
    require_dim(saddle, p.dim(), "explicit_oscillation");
    require_dim(u, p.n, "explicit_oscillation");
    if (times.empty()) throw InputError("explicit_oscillation: empty time grid");
    if (!(saddle.array() > 0.0).all()) throw StateError("explicit_oscillation: saddle must be strictly positive");

    const Matrix a = matrix_A(p, saddle);
    // phi_xy = -L' for the routing Lagrangian.
    const Matrix link_route = -p.hess_xy(p.x_part(saddle), p.y_part(saddle)).transpose();
    Vector v(p.dim());
    v.head(p.n) = u;
    v.tail(p.m) = -link_route * u;

    std::vector<Vector> dirs;
    dirs.reserve(times.size());
    for (double t : times) dirs.push_back(matrix_exponential(a, t) * v);

    auto inside = [&](double cc) {
        for (const auto& d : dirs) {
            if (!((saddle + cc * d).array() > 0.0).all()) return false;
        }
        return true;
    };
    double amp = 0.0;
    if (c) {
        amp = *c;
        if (!inside(amp)) throw StateError("explicit_oscillation: orbit leaves the orthant for the given c");
    } else {
        amp = saddle.minCoeff() / (2.0 * v.norm());
        int halvings = 0;
        while (!inside(amp)) {
            if (++halvings > 60) throw StateError("explicit_oscillation: no admissible amplitude");
            amp *= 0.5;
        }
    }

    Trajectory traj(BoxDomain::orthant(p.dim()));
    traj.step = times.size() > 1 ? times[1] - times[0] : 0.0;
    traj.stride = 1;
    for (std::size_t k = 0; k < times.size(); ++k) {
        traj.times.push_back(times[k]);
        traj.states.push_back(saddle + amp * dirs[k]);
    }
    return traj;
}

}  // namespace saddleflow
