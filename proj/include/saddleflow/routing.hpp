#pragma once

// Multi-path routing: sources split their rate over routes, routes share
// capacitated links, and link prices act as multipliers.

#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"
#include "saddleflow/integrator.hpp"
#include "saddleflow/saddle.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace saddleflow {

/// Scalar utility of a source's total rate.
struct Utility {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
};

/// log(1 + s)
Utility log_utility();
/// 1 - exp(-s)
Utility saturating_utility();

struct RoutingNetwork {
    Matrix H;  // sources x routes, 0/1
    Matrix L;  // links x routes, 0/1
    Vector C;  // link capacities
    std::vector<Utility> utilities;  // one per source
    Vector kappas;                   // per-route gains for the modified dynamics

    int sources() const noexcept { return static_cast<int>(H.rows()); }
    int routes() const noexcept { return static_cast<int>(H.cols()); }
    int links() const noexcept { return static_cast<int>(L.rows()); }

    /// Throws InputError if the incidence structure, capacities, gains or
    /// utilities are malformed.
    void validate() const;
};

/// max sum_i U_i((Hx)_i) subject to C - Lx >= 0, x >= 0.
ConcaveProgram routing_program(const RoutingNetwork& net);
/// Lagrangian of routing_program; z = (x, y) with one price per link.
SaddleProblem routing_problem(const RoutingNetwork& net);
BoxDomain routing_domain(const RoutingNetwork& net);

struct RoutingInstability {
    Vector u;  // unit vector in ker(H), eigenvector of L'L
    double lambda = 0.0;
};

/// A direction in ker(H) that is an eigenvector of L'L with positive
/// eigenvalue, if one exists.
std::optional<RoutingInstability> routing_instability(const RoutingNetwork& net, double tol = 1e-10);

/// exp(t a), a skew-symmetric (any square matrix is accepted).
Matrix matrix_exponential(const Matrix& a, double t);

/// Closed-form orbit saddle + c exp(t A(saddle)) [u; -Lu] sampled at `times`,
/// where L is read off the coupling block of `p`. Without `c` the largest
/// value of min(saddle)/(2|v|) / 2^k keeping every sample in the orthant is
/// used.
Trajectory explicit_oscillation(const SaddleProblem& p, const Vector& saddle, const Vector& u,
                                const std::vector<double>& times, std::optional<double> c = std::nullopt);

}  // namespace saddleflow
