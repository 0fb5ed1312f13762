#pragma once

// Limiting behaviour of the projected saddle flow: reduction to the minimal
// face holding the saddle points, the limiting linear system M = Pi A Pi, the
// largest M-invariant subspace compatible with the curvature kernel
// conditions, and the resulting convergence certificate.

#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"
#include "saddleflow/integrator.hpp"
#include "saddleflow/saddle.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace saddleflow {

enum class Verdict { ProvedConvergent, OscillationWitness, Inconclusive };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

/// A simulated non-decaying orbit around the reference saddle.
struct OscillationWitnessData {
    std::vector<Vector> basis;  // orthonormal pair spanning the orbit plane
    double frequency = 0.0;     // imaginary part of the M-eigenvalue
    double amplitude = 0.0;     // c in z0 = saddle + c * basis[0]
    double amplitude_trend = 0.0;
    double period_estimate = 0.0;
};

struct CertificateOptions {
    std::vector<double> r_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    double subspace_tol = 1e-10;   // rank decisions
    double kernel_tol = 1e-8;      // sampled kernel conditions (non-quadratic problems)
    double spectral_tol = 1e-10;   // "M restricted to the subspace is zero"
    double sign_tol = 1e-8;        // zero-margin test for pinned field components
    double witness_threshold = 0.95;
    double witness_amplitude = 0.1;
    int witness_halvings = 8;
    double witness_periods = 20.0;
    double witness_step = 1e-3;
};

struct ConvergenceReport {
    FaceDescriptor face;
    Matrix projector;
    Matrix limit_matrix;
    std::vector<std::complex<double>> eigenvalues;       // of limit_matrix on R^d
    std::vector<std::complex<double>> face_eigenvalues;  // of limit_matrix on range(projector)
    Vector reference_saddle;
    int candidate_subspace_dim = 0;    // kernel_invariant_subspace
    int oscillating_subspace_dim = 0;  // after removing M-equilibria and bracket-incompatible modes
    Verdict verdict = Verdict::Inconclusive;
    std::optional<OscillationWitnessData> witness;
    CertificateOptions options;
    std::string note;

    explicit ConvergenceReport(FaceDescriptor f) : face(std::move(f)) {}
};

struct LimitingSystem {
    FaceDescriptor face;
    Matrix projector;
    Matrix limit_matrix;  // Pi A(origin) Pi
    Vector origin;        // saddle moved to 0
};

/// Point used as the translated origin: centroid of the saddles when it is
/// itself a restricted saddle, otherwise the first one.
Vector reference_saddle(const SaddleProblem& p, const BoxDomain& domain, const std::vector<Vector>& saddles);

LimitingSystem limiting_linear_system(const SaddleProblem& p, const BoxDomain& domain, const std::vector<Vector>& saddles);

/// Largest subspace W of range(Pi) with M W in W and W in ker(Pi B Pi). For
/// problems with point-dependent Hessians the kernel conditions are also
/// imposed at saddle + r w for r in `r_grid` and each basis direction w.
/// Returns an orthonormal basis (columns).
Matrix kernel_invariant_subspace(const SaddleProblem& p, const Matrix& projector, const Vector& saddle,
                                 const std::vector<double>& r_grid, double subspace_tol = 1e-10,
                                 double kernel_tol = 1e-8);

ConvergenceReport convergence_certificate(const SaddleProblem& p, const BoxDomain& domain,
                                          const std::vector<Vector>& saddles, const CertificateOptions& opts = {});

struct SaddleSearchOptions {
    int starts = 8;
    std::uint64_t seed = 0;
    int max_iter = 200000;
    double tol = 1e-10;
    double radius = 10.0;
    double merge_tol = 1e-6;
};

/// Restricted saddles found by an extragradient fixed-point search started
/// from `extra_starts` and `opts.starts` seeded random points of the domain.
std::vector<Vector> locate_saddles(const SaddleProblem& p, const BoxDomain& domain, const SaddleSearchOptions& opts = {},
                                   const std::vector<Vector>& extra_starts = {});

struct FaceVerdict {
    FaceDescriptor face;
    std::vector<Vector> saddles;  // restricted saddles of the affine-span problem
    std::optional<ConvergenceReport> report;
    std::string note;
};

struct FaceScanResult {
    std::vector<FaceVerdict> faces;
    std::vector<Vector> saddles;  // restricted saddles on the full domain
    std::optional<ConvergenceReport> full_report;
    Verdict overall = Verdict::Inconclusive;
    bool no_saddle = false;
};

/// Runs the certificate on the affine span of every face that holds a
/// restricted saddle. Convergent on every face implies convergent on the
/// domain; otherwise the full-domain certificate decides.
FaceScanResult face_criterion_scan(const SaddleProblem& p, const BoxDomain& domain,
                                   std::optional<std::vector<Vector>> saddles = std::nullopt,
                                   const SaddleSearchOptions& search = {}, const CertificateOptions& opts = {});

enum class ScanOutcome { Convergent, Oscillating, Inconclusive, NoSaddle, Failed };

std::string to_string(ScanOutcome o);
std::string short_code(ScanOutcome o);

struct FamilyMember {
    SaddleProblem problem;
    BoxDomain domain;
    std::function<std::vector<Vector>()> find_saddles;
};

struct BifurcationEntry {
    double param = 0.0;
    ScanOutcome outcome = ScanOutcome::Failed;
    std::vector<Vector> saddles;
    std::optional<ConvergenceReport> report;
    std::string message;
};

std::vector<BifurcationEntry> bifurcation_scan(const std::function<FamilyMember(double)>& family,
                                               const std::vector<double>& params, const CertificateOptions& opts = {});

/// Parameter pairs between which the outcome changes.
std::vector<std::pair<double, double>> transitions(const std::vector<BifurcationEntry>& entries);

}  // namespace saddleflow
