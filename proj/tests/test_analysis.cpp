#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "saddleflow/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace saddleflow;
using testutil::inf;
using testutil::vec;

namespace {

SaddleProblem example1() {
    Matrix P = Matrix::Zero(2, 2);
    P(0, 0) = -1.0;
    return QuadraticSaddle(P, Matrix::Zero(1, 1), Matrix::Ones(2, 1)).to_problem();
}

SaddleProblem example2() {
    Matrix P = Matrix::Zero(2, 2);
    P(1, 1) = -1.0;
    return QuadraticSaddle(P, Matrix::Zero(1, 1), vec({1.0, 0.0})).to_problem();
}

BoxDomain K(double a) { return BoxDomain(vec({a, -inf, -inf}), vec({inf, inf, inf})); }

Vector example1_saddle(double a) { return a > 0 ? vec({a, -a, 0.0}) : Vector(Vector::Zero(3)); }

// Subspace residuals of a basis W against M and PBP.
void check_invariant(const Matrix& W, const Matrix& M, const Matrix& PBP) {
    if (W.cols() == 0) return;
    const Matrix MW = M * W;
    CHECK((MW - W * (W.transpose() * MW)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((PBP * W).cwiseAbs().maxCoeff() <= 1e-10);
}

}  // namespace

TEST_CASE("limiting system of Example 1 on the face x1 = a") {
    const LimitingSystem ls = limiting_linear_system(example1(), K(1), {vec({1.0, -1.0, 0.0})});
    CHECK(ls.face.pinned.size() == 1);
    CHECK(ls.projector.diagonal() == vec({0.0, 1.0, 1.0}));
    Eigen::EigenSolver<Matrix> es(ls.limit_matrix);
    std::vector<double> im;
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(es.eigenvalues()(i).real()) <= 1e-12);
        im.push_back(es.eigenvalues()(i).imag());
    }
    std::sort(im.begin(), im.end());
    CHECK(im[0] == doctest::Approx(-1.0));
    CHECK(std::abs(im[1]) <= 1e-12);
    CHECK(im[2] == doctest::Approx(1.0));
}

TEST_CASE("limiting system for an interior saddle is the full coupling block") {
    const LimitingSystem ls = limiting_linear_system(example1(), K(-1), {Vector::Zero(3)});
    CHECK(ls.face.pinned.empty());
    CHECK(ls.projector == Matrix::Identity(3, 3));
    CHECK(ls.limit_matrix == matrix_A(example1(), Vector::Zero(3)));
    CHECK_THROWS_AS(limiting_linear_system(example1(), K(-1), {}), InputError);
}

TEST_CASE("limiting system for the Example 2 saddle ray") {
    const LimitingSystem ls = limiting_linear_system(example2(), K(0), {Vector::Zero(3), vec({0.0, 0.0, -1.0})});
    CHECK(ls.face.pinned.size() == 1);
    CHECK(ls.face.pinned.count(0) == 1);
    CHECK(ls.projector.diagonal() == vec({0.0, 1.0, 1.0}));
    CHECK(ls.limit_matrix.norm() == 0.0);
    CHECK((ls.origin - vec({0.0, 0.0, -0.5})).norm() <= 1e-15);  // centroid is itself a saddle
}

TEST_CASE("kernel invariant subspace examples") {
    const std::vector<double> grid{0.0, 0.5, 1.0};
    SUBCASE("Example 1 interior: only the trivial subspace survives") {
        const Matrix W = kernel_invariant_subspace(example1(), Matrix::Identity(3, 3), Vector::Zero(3), grid);
        CHECK(W.cols() == 0);
    }
    SUBCASE("Example 1 on the face: span{x2, y}") {
        const Matrix P = vec({0.0, 1.0, 1.0}).asDiagonal();
        const Vector s = vec({1.0, -1.0, 0.0});
        const Matrix W = kernel_invariant_subspace(example1(), P, s, grid);
        REQUIRE(W.cols() == 2);
        CHECK(W.row(0).norm() <= 1e-12);
        check_invariant(W, P * matrix_A(example1(), s) * P, P * matrix_B(example1(), s) * P);
    }
    SUBCASE("B = 0 with constant A returns the whole space") {
        const SaddleProblem p = QuadraticSaddle(Matrix::Zero(2, 2), Matrix::Zero(1, 1), vec({1.0, 2.0})).to_problem();
        CHECK(kernel_invariant_subspace(p, Matrix::Identity(3, 3), Vector::Zero(3), grid).cols() == 3);
    }
    SUBCASE("non-quadratic curvature away from the saddle removes directions") {
        // phi = x y - x^4/12 : B(0) = 0 but B(r e_x) != 0.
        SaddleProblem p = QuadraticSaddle(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1)).to_problem();
        p.constant_hessians = false;
        p.value = [](const Vector& x, const Vector& y) { return x(0) * y(0) - std::pow(x(0), 4) / 12; };
        p.grad_x = [](const Vector& x, const Vector& y) -> Vector { return vec({y(0) - std::pow(x(0), 3) / 3}); };
        p.hess_xx = [](const Vector& x, const Vector&) -> Matrix { return Matrix::Constant(1, 1, -x(0) * x(0)); };
        CHECK(kernel_invariant_subspace(p, Matrix::Identity(2, 2), Vector::Zero(2), CertificateOptions{}.r_grid).cols() == 0);
        CHECK(kernel_invariant_subspace(p, Matrix::Identity(2, 2), Vector::Zero(2), {0.0}).cols() == 2);
    }
}

TEST_CASE("limit matrix is skew on the face with imaginary spectrum (random quadratics)") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 40; ++trial) {
        const Matrix G = Matrix::Random(2, 2);
        const Matrix H = Matrix::Random(2, 2);
        const QuadraticSaddle q(-(G * G.transpose()), H * H.transpose(), Matrix::Random(2, 2),
                                testutil::random_vector(rng, 2, -1, 1), testutil::random_vector(rng, 2, -1, 1));
        const SaddleProblem p = q.to_problem();
        Vector lo(4), hi(4);
        for (int i = 0; i < 4; ++i) {
            lo(i) = coin(rng) ? -0.5 : -inf;
            hi(i) = coin(rng) ? 0.5 : inf;
        }
        const BoxDomain d(lo, hi);
        const auto saddles = locate_saddles(p, d);
        if (saddles.empty()) continue;
        const LimitingSystem ls = limiting_linear_system(p, d, saddles);
        CHECK((ls.limit_matrix + ls.limit_matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::EigenSolver<Matrix> es(ls.limit_matrix);
        CHECK(es.eigenvalues().real().cwiseAbs().maxCoeff() <= 1e-8);
        const Matrix W = kernel_invariant_subspace(p, ls.projector, ls.origin, CertificateOptions{}.r_grid);
        check_invariant(W, ls.limit_matrix, ls.projector * matrix_B(p, ls.origin) * ls.projector);
    }
}

TEST_CASE("certificate verdicts for Example 1") {
    for (double a : {-1.0, -0.1, 0.0}) {
        const auto rep = convergence_certificate(example1(), K(a), {example1_saddle(a)});
        CHECK(rep.verdict == Verdict::ProvedConvergent);
        CHECK_FALSE(rep.witness);
    }
    for (double a : {0.1, 1.0}) {
        const auto rep = convergence_certificate(example1(), K(a), {example1_saddle(a)});
        REQUIRE(rep.verdict == Verdict::OscillationWitness);
        REQUIRE(rep.witness);
        CHECK(rep.witness->frequency == doctest::Approx(1.0));
        CHECK(rep.candidate_subspace_dim == 2);
    }
    CHECK_THROWS_AS(convergence_certificate(example1(), K(1), {vec({2.0, 0.0, 0.0})}), InputError);
}

TEST_CASE("certificate verdicts for Example 2") {
    const auto osc = convergence_certificate(example2(), K(-1), {Vector::Zero(3)});
    REQUIRE(osc.verdict == Verdict::OscillationWitness);
    CHECK(osc.witness->frequency == doctest::Approx(1.0));
    // Full spectrum of the Jacobian is {-1, +-i}.
    Eigen::EigenSolver<Matrix> es(field_jacobian(example2(), Vector::Zero(3)));
    std::vector<double> re;
    for (int i = 0; i < 3; ++i) re.push_back(es.eigenvalues()(i).real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-1.0));
    const auto ray = convergence_certificate(example2(), K(0), {Vector::Zero(3), vec({0.0, 0.0, -1.0})});
    CHECK(ray.verdict == Verdict::ProvedConvergent);
}

TEST_CASE("strictly concave-convex quadratics are certified convergent") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> eig(0.5, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::HouseholderQR<Matrix> qr(Matrix::Random(2, 2));
        const Matrix U = qr.householderQ();
        const Matrix P = -(U * vec({eig(rng), eig(rng)}).asDiagonal() * U.transpose());
        const Matrix Q = U.transpose() * vec({eig(rng), eig(rng)}).asDiagonal() * U;
        const QuadraticSaddle q(Matrix(0.5 * (P + P.transpose())), Matrix(0.5 * (Q + Q.transpose())), Matrix::Random(2, 2),
                                testutil::random_vector(rng, 2, -1, 1), testutil::random_vector(rng, 2, -1, 1));
        const SaddleProblem p = q.to_problem();
        const auto saddles = locate_saddles(p, BoxDomain::unbounded(4));
        REQUIRE(saddles.size() == 1);
        // Oracle: stationarity of the unconstrained quadratic.
        Matrix Kkt(4, 4);
        Kkt << q.P, q.R, q.R.transpose(), q.Q;
        Vector rhs(4);
        rhs << -q.p, -q.q;
        CHECK((saddles.front() - Kkt.lu().solve(rhs)).norm() <= 1e-8);
        CHECK(convergence_certificate(p, BoxDomain::unbounded(4), saddles).verdict == Verdict::ProvedConvergent);
    }
}

TEST_CASE("witness trajectories keep a constant distance to every saddle") {
    struct Case {
        SaddleProblem p;
        BoxDomain d;
        std::vector<Vector> saddles;
    };
    const std::vector<Case> cases{{example1(), K(1), {vec({1.0, -1.0, 0.0})}}, {example2(), K(-1), {Vector::Zero(3)}}};
    for (const auto& c : cases) {
        const auto rep = convergence_certificate(c.p, c.d, c.saddles);
        REQUIRE(rep.witness);
        const auto& w = *rep.witness;
        IntegratorConfig cfg;
        cfg.method = Method::ProjectedHeun;
        cfg.step = 1e-3;
        cfg.horizon = 20 * 2 * std::numbers::pi / w.frequency;
        cfg.stride = 10;
        const Trajectory t = simulate(c.p, c.d, rep.reference_saddle + w.amplitude * w.basis[0], cfg);
        Eigen::Index coord = 0;
        w.basis[0].cwiseAbs().maxCoeff(&coord);
        const auto m = oscillation_metrics(t, 0, t.times.back(), static_cast<int>(coord));
        REQUIRE(m);
        CHECK(m->amplitude_trend >= 0.95);
        for (const auto& s : c.saddles) {
            const double d0 = (t.states.front() - s).norm();
            for (const auto& z : t.states) CHECK(std::abs((z - s).norm() - d0) <= 1e-3);
        }
    }
}

TEST_CASE("witness starts tolerate round-off in the saddle centroid") {
    // Saddle line in y2; the centroid of three saddles lands 1e-17 above the
    // pinned bound x2 = 0.1.
    Matrix R = Matrix::Zero(2, 2);
    R(0, 0) = 1.0;
    const SaddleProblem p = QuadraticSaddle(Matrix::Zero(2, 2), Matrix::Zero(2, 2), R, vec({0.0, 1.0}), Vector::Zero(2))
                                .to_problem();
    const BoxDomain d(vec({-inf, -inf, -inf, -inf}), vec({inf, 0.1, inf, inf}));
    std::vector<Vector> saddles;
    for (double t : {0.0, 1.0, 2.0}) saddles.push_back(vec({0.0, 0.1, 0.0, t}));
    const ConvergenceReport rep = convergence_certificate(p, d, saddles);
    CHECK(rep.reference_saddle(1) > 0.1);
    CHECK(rep.verdict == Verdict::OscillationWitness);
    REQUIRE(rep.witness);
    CHECK(rep.witness->frequency == doctest::Approx(1.0));
}

TEST_CASE("saddle search") {
    SaddleSearchOptions opts;
    const auto s1 = locate_saddles(example1(), K(1), opts);
    REQUIRE(s1.size() == 1);
    CHECK((s1.front() - vec({1.0, -1.0, 0.0})).norm() <= 1e-8);
    opts.max_iter = 20000;
    CHECK(locate_saddles(example2(), K(1), opts).empty());
    const auto again = locate_saddles(example1(), K(1));
    CHECK(again.front() == s1.front());
}

TEST_CASE("face criterion scan") {
    SUBCASE("Example 1, a = 0: oscillation on the face but not in the domain") {
        const auto r = face_criterion_scan(example1(), K(0), std::vector<Vector>{Vector::Zero(3)});
        REQUIRE(r.faces.size() == 2);
        int osc = 0, conv = 0;
        for (const auto& f : r.faces) {
            REQUIRE(f.report);
            if (f.face.pinned.empty()) conv += f.report->verdict == Verdict::ProvedConvergent;
            else osc += f.report->verdict == Verdict::OscillationWitness;
        }
        CHECK(osc == 1);
        CHECK(conv == 1);
        REQUIRE(r.full_report);
        CHECK(r.overall == Verdict::ProvedConvergent);
    }
    SUBCASE("strictly concave-convex problem on the orthant") {
        const QuadraticSaddle q(-Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                vec({1.0, -1.0}), vec({0.5, -0.5}));
        const auto r = face_criterion_scan(q.to_problem(), BoxDomain::orthant(4));
        REQUIRE_FALSE(r.saddles.empty());
        for (const auto& f : r.faces) {
            if (f.report) CHECK(f.report->verdict == Verdict::ProvedConvergent);
        }
        CHECK(r.overall == Verdict::ProvedConvergent);
        CHECK_FALSE(r.full_report);
    }
    SUBCASE("no finite bounds: a single face") {
        const auto r = face_criterion_scan(example1(), BoxDomain::unbounded(3));
        CHECK(r.faces.size() == 1);
        CHECK(r.overall == Verdict::ProvedConvergent);
    }
    SUBCASE("capacity guard") {
        const QuadraticSaddle q(-Matrix::Identity(11, 11), Matrix::Identity(11, 11), Matrix::Zero(11, 11));
        CHECK_THROWS_AS(face_criterion_scan(q.to_problem(), BoxDomain::orthant(22)), CapacityError);
    }
    SUBCASE("no saddle") {
        SaddleSearchOptions opts;
        opts.max_iter = 20000;
        const auto r = face_criterion_scan(example2(), K(1), std::nullopt, opts);
        CHECK(r.no_saddle);
    }
}

TEST_CASE("bifurcation scans") {
    auto ex1 = [](double a) {
        return FamilyMember{example1(), K(a), [a] { return std::vector<Vector>{example1_saddle(a)}; }};
    };
    const auto e1 = bifurcation_scan(ex1, {-1, -0.1, 0, 0.1, 1});
    std::string codes;
    for (const auto& e : e1) codes += short_code(e.outcome);
    CHECK(codes == "CCCOO");
    const auto tr = transitions(e1);
    REQUIRE(tr.size() == 1);
    CHECK(tr.front() == std::make_pair(0.0, 0.1));

    auto ex2 = [](double a) {
        std::vector<Vector> s;
        if (a < 0) s = {Vector::Zero(3)};
        if (a == 0) s = {Vector::Zero(3), vec({0.0, 0.0, -1.0})};
        return FamilyMember{example2(), K(a), [s] { return s; }};
    };
    const auto e2 = bifurcation_scan(ex2, {-1, 0, 1});
    REQUIRE(e2.size() == 3);
    CHECK(e2[0].outcome == ScanOutcome::Oscillating);
    CHECK(e2[1].outcome == ScanOutcome::Convergent);
    CHECK(e2[2].outcome == ScanOutcome::NoSaddle);

    auto constant = [](double) { return FamilyMember{example1(), K(-1), [] { return std::vector<Vector>{Vector::Zero(3)}; }}; };
    const auto c = bifurcation_scan(constant, {0, 1, 2});
    CHECK(transitions(c).empty());

    auto failing = [](double a) -> FamilyMember {
        if (a > 0) throw InputError("bad member");
        return FamilyMember{example1(), K(a), [a] { return std::vector<Vector>{example1_saddle(a)}; }};
    };
    const auto f = bifurcation_scan(failing, {-1, 1});
    CHECK(f[1].outcome == ScanOutcome::Failed);
    CHECK(f[1].message == "bad member");
    CHECK(bifurcation_scan(ex1, {}).empty());
}

TEST_CASE("verdict names round trip") {
    for (Verdict v : {Verdict::ProvedConvergent, Verdict::OscillationWitness, Verdict::Inconclusive}) {
        CHECK(verdict_from_string(to_string(v)) == v);
    }
    CHECK_THROWS_AS(verdict_from_string("maybe"), InputError);
}
