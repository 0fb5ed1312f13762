#pragma once

// Discrete approximation of the projected (subgradient) saddle-point flow
// z' = f(z) - P_{N_K(z)} f(z), plus trajectory diagnostics.

#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"
#include "saddleflow/saddle.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace saddleflow {

enum class Method { ProjectedEuler, ProjectedHeun };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct IntegratorConfig {
    double step = 1e-3;
    double horizon = 10.0;
    int stride = 1;
    double equilibrium_tol = 1e-6;
    Method method = Method::ProjectedEuler;

    void validate() const;
};

/// Samples of one run, every `stride` steps.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    BoxDomain domain;
    double step = 0.0;
    int stride = 1;

    explicit Trajectory(BoxDomain d) : domain(std::move(d)) {}

    std::size_t size() const noexcept { return states.size(); }
    const Vector& final_state() const { return states.back(); }
    double sample_spacing() const noexcept { return step * stride; }
    /// Index of the first sample with time >= t.
    std::size_t index_at(double t) const;
};

/// Raised when the state becomes non-finite or its norm exceeds 1e9.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, Trajectory partial, Vector last_finite, double last_time)
        : Error(msg), partial_(std::move(partial)), last_(std::move(last_finite)), time_(last_time) {}

    const Trajectory& partial() const noexcept { return partial_; }
    const Vector& last_finite_state() const noexcept { return last_; }
    double last_time() const noexcept { return time_; }

private:
    Trajectory partial_;
    Vector last_;
    double time_;
};

inline constexpr double kDivergenceNorm = 1e9;

Trajectory simulate(const SaddleProblem& p, const BoxDomain& domain, const Vector& z0, const IntegratorConfig& cfg);

/// Euclidean distance between two runs at each shared sample.
std::vector<double> pairwise_distance(const Trajectory& a, const Trajectory& b);

struct OscillationMetrics {
    double period_estimate = 0.0;
    /// Late-window amplitude over early-window amplitude.
    double amplitude_trend = 0.0;
    std::vector<double> crossing_times;
};

/// Period and amplitude trend of coordinate `coord` over [t_begin, t_end].
/// Empty when fewer than three upward zero crossings are found.
std::optional<OscillationMetrics> oscillation_metrics(const Trajectory& t, double t_begin, double t_end, int coord);

/// Terminal state if the run has settled and that state is a restricted saddle.
std::optional<Vector> detect_equilibrium(const SaddleProblem& p, const Trajectory& t, double tol);

/// Local Lipschitz bound of the field: largest ||A+B||_2 over the given points.
double estimate_field_lipschitz(const SaddleProblem& p, const std::vector<Vector>& points);

void write_trajectory_csv(std::ostream& os, const Trajectory& t);
Trajectory read_trajectory_csv(std::istream& is, const BoxDomain& domain);

}  // namespace saddleflow
