#include "saddleflow/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace saddleflow {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::ProvedConvergent: return "ProvedConvergent";
        case Verdict::OscillationWitness: return "OscillationWitness";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "ProvedConvergent") return Verdict::ProvedConvergent;
    if (s == "OscillationWitness") return Verdict::OscillationWitness;
    if (s == "Inconclusive") return Verdict::Inconclusive;
    throw InputError("unknown verdict '" + s + "'");
}

std::string to_string(ScanOutcome o) {
    switch (o) {
        case ScanOutcome::Convergent: return "Convergent";
        case ScanOutcome::Oscillating: return "Oscillating";
        case ScanOutcome::Inconclusive: return "Inconclusive";
        case ScanOutcome::NoSaddle: return "NoSaddle";
        case ScanOutcome::Failed: return "Failed";
    }
    return "Failed";
}

std::string short_code(ScanOutcome o) {
    switch (o) {
        case ScanOutcome::Convergent: return "C";
        case ScanOutcome::Oscillating: return "O";
        case ScanOutcome::Inconclusive: return "I";
        case ScanOutcome::NoSaddle: return "NoSaddle";
        case ScanOutcome::Failed: return "F";
    }
    return "F";
}

namespace {

std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& m) {
    std::vector<std::complex<double>> out;
    if (m.rows() == 0) return out;
    Eigen::EigenSolver<Matrix> es(m, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.imag() != b.imag()) return a.imag() > b.imag();
        return a.real() > b.real();
    });
    return out;
}

/// Largest M-invariant subspace of span(w).
Matrix invariant_part(Matrix w, const Matrix& m, double tol) {
    while (w.cols() > 0) {
        const Matrix mw = m * w;
        const Matrix resid = mw - w * (w.transpose() * mw);
        const Matrix keep = null_space(resid, tol);
        if (keep.cols() == w.cols()) break;
        w = orthonormal_columns(w * keep, tol);
    }
    return w;
}

double spectral_radius(const Matrix& m) {
    double r = 0.0;
    for (const auto& e : sorted_eigenvalues(m)) r = std::max(r, std::abs(e));
    return r;
}

int dominant_coordinate(const Vector& w) {
    Eigen::Index idx = 0;
    w.cwiseAbs().maxCoeff(&idx);
    return static_cast<int>(idx);
}

}  // namespace

Vector reference_saddle(const SaddleProblem& p, const BoxDomain& domain, const std::vector<Vector>& saddles) {
    if (saddles.empty()) throw InputError("reference_saddle: empty saddle list");
    Vector mean = Vector::Zero(saddles.front().size());
    for (const auto& s : saddles) mean += s;
    mean /= static_cast<double>(saddles.size());
    if (saddles.size() > 1 && domain.contains(mean) && is_restricted_saddle(p, domain, mean, 1e-7)) return mean;
    return saddles.front();
}

LimitingSystem limiting_linear_system(const SaddleProblem& p, const BoxDomain& domain, const std::vector<Vector>& saddles) {
    if (saddles.empty()) throw InputError("limiting_linear_system: empty saddle list");
    FaceDescriptor face = minimal_face_containing(domain, saddles);
    const AffineSubspace span = affine_span_projector(face);
    Vector origin = reference_saddle(p, domain, saddles);
    Matrix m = span.projector * matrix_A(p, origin) * span.projector;
    return LimitingSystem{std::move(face), span.projector, std::move(m), std::move(origin)};
}

Matrix kernel_invariant_subspace(const SaddleProblem& p, const Matrix& projector, const Vector& saddle,
                                 const std::vector<double>& r_grid, double subspace_tol, double kernel_tol) {
    const Matrix range = orthonormal_columns(projector, subspace_tol);
    const Matrix a0 = matrix_A(p, saddle);
    const Matrix m = projector * a0 * projector;
    Matrix w;
    if (range.cols() == 0) {
        w = Matrix(projector.rows(), 0);
    } else {
        const Matrix pbp = projector * matrix_B(p, saddle) * projector;
        w = orthonormal_columns(range * null_space(pbp * range, subspace_tol), subspace_tol);
    }
    while (true) {
        w = invariant_part(std::move(w), m, subspace_tol);
        if (p.constant_hessians || w.cols() == 0) break;

        const Eigen::Index d = projector.rows();
        std::vector<Matrix> blocks;
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (double r : r_grid) {
                if (r == 0.0) continue;  // B(saddle) already imposed, A - A(saddle) vanishes
                // Orbits of a skew system pass through both +w and -w.
                for (double sign : {1.0, -1.0}) {
                    const Vector z = saddle + sign * r * w.col(j);
                    blocks.push_back(projector * matrix_B(p, z) * projector);
                    blocks.push_back(projector * (matrix_A(p, z) - a0) * projector);
                }
            }
        }
        if (blocks.empty()) break;
        Matrix stacked(static_cast<Eigen::Index>(blocks.size()) * d, d);
        for (std::size_t b = 0; b < blocks.size(); ++b) stacked.middleRows(static_cast<Eigen::Index>(b) * d, d) = blocks[b];
        const Matrix keep = null_space(stacked * w, kernel_tol);
        if (keep.cols() == w.cols()) break;
        w = orthonormal_columns(w * keep, subspace_tol);
    }
    return w;
}

ConvergenceReport convergence_certificate(const SaddleProblem& p, const BoxDomain& domain,
                                          const std::vector<Vector>& saddles, const CertificateOptions& opts) {
    if (saddles.empty()) throw InputError("convergence_certificate: empty saddle list");
    for (const auto& s : saddles) {
        if (!is_restricted_saddle(p, domain, s, 1e-7)) {
            throw InputError("convergence_certificate: supplied point is not a restricted saddle");
        }
    }
    LimitingSystem ls = limiting_linear_system(p, domain, saddles);
    ConvergenceReport rep(ls.face);
    rep.projector = ls.projector;
    rep.limit_matrix = ls.limit_matrix;
    rep.reference_saddle = ls.origin;
    rep.options = opts;
    rep.eigenvalues = sorted_eigenvalues(ls.limit_matrix);
    const Matrix range = orthonormal_columns(ls.projector, opts.subspace_tol);
    rep.face_eigenvalues = sorted_eigenvalues(range.transpose() * ls.limit_matrix * range);

    const Matrix& m = ls.limit_matrix;
    const Matrix w = kernel_invariant_subspace(p, ls.projector, ls.origin, opts.r_grid, opts.subspace_tol, opts.kernel_tol);
    rep.candidate_subspace_dim = static_cast<int>(w.cols());

    // Non-constant candidates live in the range of M restricted to w.
    Matrix osc = w.cols() > 0 ? Matrix(w * orthonormal_columns(w.transpose() * m * w, opts.subspace_tol))
                              : Matrix(m.rows(), 0);

    // A pinned coordinate whose field component vanishes at every saddle
    // admits no oscillation in its normal direction: the bracket would
    // release the coordinate on one half of the cycle.
    std::vector<int> zero_margin;
    for (const auto& [i, side] : ls.face.pinned) {
        (void)side;
        if (domain.is_fixed(i)) continue;
        bool all_zero = true;
        for (const auto& s : saddles) all_zero = all_zero && std::abs(gradient_field(p, s)(i)) <= opts.sign_tol;
        if (all_zero) zero_margin.push_back(i);
    }
    if (!zero_margin.empty() && osc.cols() > 0) {
        const Matrix jac = field_jacobian(p, ls.origin);
        Matrix rows(static_cast<Eigen::Index>(zero_margin.size()), jac.cols());
        for (std::size_t k = 0; k < zero_margin.size(); ++k) rows.row(static_cast<Eigen::Index>(k)) = jac.row(zero_margin[k]);
        while (osc.cols() > 0) {
            const Matrix keep = null_space(rows * osc, opts.subspace_tol);
            if (keep.cols() == osc.cols()) break;
            osc = invariant_part(orthonormal_columns(osc * keep, opts.subspace_tol), m, opts.subspace_tol);
        }
        if (static_cast<int>(osc.cols()) < rep.candidate_subspace_dim) {
            rep.note = "modes normal to zero-margin pinned coordinates removed";
        }
    }
    rep.oscillating_subspace_dim = static_cast<int>(osc.cols());

    const Matrix m_osc = osc.transpose() * m * osc;
    if (osc.cols() == 0 || spectral_radius(m_osc) <= opts.spectral_tol) {
        rep.verdict = Verdict::ProvedConvergent;
        return rep;
    }

    // Candidate oscillation: simulate it on the actual domain.
    Eigen::EigenSolver<Matrix> es(m_osc);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i).imag() > es.eigenvalues()(best).imag()) best = i;
    }
    const double omega = es.eigenvalues()(best).imag();
    Vector dir = osc * es.eigenvectors().col(best).real();
    if (dir.norm() < 1e-8) dir = osc * es.eigenvectors().col(best).imag();
    dir.normalize();
    Vector second = m * dir;
    if (second.norm() > 0) second.normalize();

    const double period = 2.0 * std::numbers::pi / omega;
    IntegratorConfig cfg;
    cfg.method = Method::ProjectedHeun;
    cfg.step = std::min(opts.witness_step, period / 200.0);
    cfg.horizon = opts.witness_periods * period;
    cfg.stride = std::max(1, static_cast<int>(period / cfg.step / 100.0));
    const int coord = dominant_coordinate(dir);

    double c = opts.witness_amplitude;
    for (int attempt = 0; attempt <= opts.witness_halvings; ++attempt, c *= 0.5) {
        const Vector raw = ls.origin + c * dir;
        if (domain.violation(raw) > kBoundTol) continue;
        const Vector z0 = project_point(domain, raw);
        try {
            const Trajectory t = simulate(p, domain, z0, cfg);
            const auto metrics = oscillation_metrics(t, 0.0, t.times.back(), coord);
            if (metrics && metrics->amplitude_trend >= opts.witness_threshold) {
                OscillationWitnessData wd;
                wd.basis = {dir, second};
                wd.frequency = omega;
                wd.amplitude = c;
                wd.amplitude_trend = metrics->amplitude_trend;
                wd.period_estimate = metrics->period_estimate;
                rep.witness = std::move(wd);
                rep.verdict = Verdict::OscillationWitness;
                return rep;
            }
        } catch (const DivergenceError&) {
        }
    }
    rep.verdict = Verdict::Inconclusive;
    if (rep.note.empty()) rep.note = "oscillation candidates found but no simulated witness";
    return rep;
}

std::vector<Vector> locate_saddles(const SaddleProblem& p, const BoxDomain& domain, const SaddleSearchOptions& opts,
                                   const std::vector<Vector>& extra_starts) {
    if (domain.dim() != p.dim()) throw InputError("locate_saddles: domain/problem dimension mismatch");
    std::vector<Vector> starts = extra_starts;
    for (auto& s : sample_working_region(domain, opts.starts, opts.seed, opts.radius)) starts.push_back(std::move(s));

    std::vector<Vector> found;
    for (const auto& start : starts) {
        require_dim(start, domain.dim(), "locate_saddles");
        Vector z = project_point(domain, start);
        double alpha = 1.0;
        bool converged = false;
        for (int it = 0; it < opts.max_iter; ++it) {
            const Vector f = gradient_field(p, z);
            if (!f.allFinite()) break;
            if ((z - project_point(domain, z + f)).norm() <= opts.tol) {
                converged = true;
                break;
            }
            Vector trial;
            Vector ft;
            while (true) {
                trial = project_point(domain, z + alpha * f);
                ft = gradient_field(p, trial);
                const double step = (trial - z).norm();
                if (!ft.allFinite() || alpha * (ft - f).norm() > 0.7 * step) {
                    alpha *= 0.5;
                    if (alpha < 1e-12) break;
                    continue;
                }
                break;
            }
            if (alpha < 1e-12) break;
            z = project_point(domain, z + alpha * ft);
            if (!z.allFinite() || z.norm() > kDivergenceNorm) break;
        }
        if (!converged || !is_restricted_saddle(p, domain, z, 1e-7)) continue;
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const Vector& s) { return (s - z).norm() <= opts.merge_tol; });
        if (!dup) found.push_back(std::move(z));
    }
    return found;
}

FaceScanResult face_criterion_scan(const SaddleProblem& p, const BoxDomain& domain,
                                   std::optional<std::vector<Vector>> saddles, const SaddleSearchOptions& search,
                                   const CertificateOptions& opts) {
    FaceScanResult out;
    const auto faces = enumerate_faces(domain);
    out.saddles = saddles ? *saddles : locate_saddles(p, domain, search);
    if (out.saddles.empty()) {
        out.no_saddle = true;
        out.overall = Verdict::Inconclusive;
        return out;
    }

    bool all_convergent = true;
    for (const auto& face : faces) {
        std::vector<Vector> inside;
        for (const auto& s : out.saddles) {
            if (face.contains(s)) inside.push_back(s);
        }
        if (inside.empty()) continue;

        FaceVerdict fv{face, {}, std::nullopt, {}};
        const BoxDomain span = affine_span_box(face);
        std::vector<Vector> seeds;
        for (const auto& s : inside) {
            if (is_restricted_saddle(p, span, s, 1e-7)) fv.saddles.push_back(s);
            seeds.push_back(s);
        }
        if (fv.saddles.empty()) fv.saddles = locate_saddles(p, span, search, seeds);
        if (fv.saddles.empty()) {
            fv.note = "no restricted saddle on the affine span";
            all_convergent = false;
        } else {
            fv.report = convergence_certificate(p, span, fv.saddles, opts);
            all_convergent = all_convergent && fv.report->verdict == Verdict::ProvedConvergent;
        }
        out.faces.push_back(std::move(fv));
    }

    if (all_convergent) {
        out.overall = Verdict::ProvedConvergent;
        return out;
    }
    out.full_report = convergence_certificate(p, domain, out.saddles, opts);
    out.overall = out.full_report->verdict;
    return out;
}

std::vector<BifurcationEntry> bifurcation_scan(const std::function<FamilyMember(double)>& family,
                                               const std::vector<double>& params, const CertificateOptions& opts) {
    std::vector<BifurcationEntry> out;
    out.reserve(params.size());
    for (double a : params) {
        BifurcationEntry e;
        e.param = a;
        try {
            FamilyMember member = family(a);
            e.saddles = member.find_saddles();
            if (e.saddles.empty()) {
                e.outcome = ScanOutcome::NoSaddle;
                e.message = "no restricted saddle point";
            } else {
                e.report = convergence_certificate(member.problem, member.domain, e.saddles, opts);
                switch (e.report->verdict) {
                    case Verdict::ProvedConvergent: e.outcome = ScanOutcome::Convergent; break;
                    case Verdict::OscillationWitness: e.outcome = ScanOutcome::Oscillating; break;
                    case Verdict::Inconclusive: e.outcome = ScanOutcome::Inconclusive; break;
                }
            }
        } catch (const Error& err) {
            e.outcome = ScanOutcome::Failed;
            e.message = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::pair<double, double>> transitions(const std::vector<BifurcationEntry>& entries) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].outcome != entries[i - 1].outcome) out.emplace_back(entries[i - 1].param, entries[i].param);
    }
    return out;
}

}  // namespace saddleflow
