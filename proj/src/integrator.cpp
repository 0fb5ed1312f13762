#include "saddleflow/integrator.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace saddleflow {

std::string to_string(Method m) { return m == Method::ProjectedEuler ? "euler" : "heun"; }

Method method_from_string(const std::string& s) {
    if (s == "euler") return Method::ProjectedEuler;
    if (s == "heun") return Method::ProjectedHeun;
    throw InputError("unknown integration method '" + s + "'");
}

void IntegratorConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw InputError("integrator: step must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("integrator: horizon must be positive");
    if (step > horizon) throw InputError("integrator: step exceeds horizon");
    if (stride < 1) throw InputError("integrator: stride must be >= 1");
    if (!(equilibrium_tol > 0.0)) throw InputError("integrator: equilibrium_tol must be positive");
}

std::size_t Trajectory::index_at(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
    return static_cast<std::size_t>(it - times.begin());
}

namespace {

bool diverged(const Vector& z) { return !z.allFinite() || z.norm() > kDivergenceNorm; }

}  // namespace

Trajectory simulate(const SaddleProblem& p, const BoxDomain& domain, const Vector& z0, const IntegratorConfig& cfg) {
    cfg.validate();
    require_dim(z0, domain.dim(), "simulate");
    if (domain.dim() != p.dim()) throw InputError("simulate: domain/problem dimension mismatch");
    if (domain.violation(z0) > 1e-6) throw StateError("simulate: initial state lies outside the domain");

    const double h = cfg.step;
    const long long raw_steps = std::llround(cfg.horizon / h);
    const long long samples = (raw_steps + cfg.stride - 1) / cfg.stride;
    const long long steps = samples * cfg.stride;

    Trajectory traj(domain);
    traj.step = h;
    traj.stride = cfg.stride;
    traj.times.reserve(static_cast<std::size_t>(samples + 1));
    traj.states.reserve(static_cast<std::size_t>(samples + 1));

    Vector z = project_point(domain, z0);
    traj.times.push_back(0.0);
    traj.states.push_back(z);

    Vector next(z.size());
    for (long long k = 1; k <= steps; ++k) {
        const Vector f0 = gradient_field(p, z);
        if (cfg.method == Method::ProjectedEuler) {
            next = project_point(domain, z + h * f0);
        } else {
            const Vector stage = project_point(domain, z + h * f0);
            const Vector f1 = gradient_field(p, stage);
            next = project_point(domain, z + 0.5 * h * (f0 + f1));
        }
        if (diverged(next)) {
            const double t_last = static_cast<double>(k - 1) * h;
            throw DivergenceError("simulate: state diverged at t=" + format_double(static_cast<double>(k) * h),
                                  std::move(traj), z, t_last);
        }
        z.swap(next);
        if (k % cfg.stride == 0) {
            traj.times.push_back(static_cast<double>(k) * h);
            traj.states.push_back(z);
        }
    }
    return traj;
}

std::vector<double> pairwise_distance(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || !(a.domain == b.domain)) throw InputError("pairwise_distance: grid or domain mismatch");
    std::vector<double> d(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a.times[k] - b.times[k]) > 1e-12) throw InputError("pairwise_distance: time grids differ");
        d[k] = (a.states[k] - b.states[k]).norm();
    }
    return d;
}

std::optional<OscillationMetrics> oscillation_metrics(const Trajectory& t, double t_begin, double t_end, int coord) {
    if (t.size() < 2) throw InputError("oscillation_metrics: trajectory too short");
    if (coord < 0 || coord >= t.domain.dim()) throw InputError("oscillation_metrics: coordinate out of range");
    if (!(t_begin < t_end) || t_begin < t.times.front() - 1e-12 || t_end > t.times.back() + 1e-12) {
        throw InputError("oscillation_metrics: window outside the trajectory span");
    }
    const std::size_t lo = t.index_at(t_begin);
    std::size_t hi = t.index_at(t_end);
    if (hi >= t.size()) hi = t.size() - 1;
    if (hi <= lo + 2) return std::nullopt;

    std::vector<double> time(t.times.begin() + lo, t.times.begin() + hi + 1);
    std::vector<double> sig(time.size());
    for (std::size_t k = 0; k < sig.size(); ++k) sig[k] = t.states[lo + k](coord);
    const double mean = std::accumulate(sig.begin(), sig.end(), 0.0) / static_cast<double>(sig.size());
    double peak = 0.0;
    for (auto& s : sig) {
        s -= mean;
        peak = std::max(peak, std::abs(s));
    }
    if (peak <= 1e-12 * std::max(1.0, std::abs(mean))) return std::nullopt;

    // Upward crossings with hysteresis so roundoff around zero is not counted.
    const double band = 1e-6 * peak;
    OscillationMetrics out;
    std::vector<std::size_t> crossing_idx;
    bool armed = sig[0] < -band;
    for (std::size_t k = 1; k < sig.size(); ++k) {
        if (sig[k] < -band) armed = true;
        if (armed && sig[k - 1] < 0.0 && sig[k] >= 0.0) {
            const double frac = -sig[k - 1] / (sig[k] - sig[k - 1]);
            out.crossing_times.push_back(time[k - 1] + frac * (time[k] - time[k - 1]));
            crossing_idx.push_back(k);
            armed = false;
        }
    }
    if (out.crossing_times.size() < 3) return std::nullopt;
    out.period_estimate = (out.crossing_times.back() - out.crossing_times.front()) /
                          static_cast<double>(out.crossing_times.size() - 1);

    const double w0 = time.front();
    const double quarter = (time.back() - w0) / 4.0;
    auto quarter_amplitude = [&](double qa, double qb) {
        double sum = 0.0;
        int cycles = 0;
        for (std::size_t c = 0; c + 1 < crossing_idx.size(); ++c) {
            const std::size_t a = crossing_idx[c];
            const std::size_t b = crossing_idx[c + 1];
            if (time[a] < qa - 1e-12 || time[b] > qb + 1e-12) continue;
            const auto [mn, mx] = std::minmax_element(sig.begin() + a, sig.begin() + b + 1);
            sum += 0.5 * (*mx - *mn);
            ++cycles;
        }
        if (cycles > 0) return sum / cycles;
        double mn = 1e300, mx = -1e300;
        for (std::size_t k = 0; k < sig.size(); ++k) {
            if (time[k] < qa - 1e-12 || time[k] > qb + 1e-12) continue;
            mn = std::min(mn, sig[k]);
            mx = std::max(mx, sig[k]);
        }
        return mx >= mn ? 0.5 * (mx - mn) : 0.0;
    };
    const double first = quarter_amplitude(w0, w0 + quarter);
    const double last = quarter_amplitude(time.back() - quarter, time.back());
    if (!(first > 0.0)) return std::nullopt;
    out.amplitude_trend = last / first;
    return out;
}

std::optional<Vector> detect_equilibrium(const SaddleProblem& p, const Trajectory& t, double tol) {
    if (t.size() < 2) return std::nullopt;
    const std::size_t tail = std::max<std::size_t>(2, t.size() / 10);
    const Vector& end = t.final_state();
    double change = 0.0;
    for (std::size_t k = t.size() - tail; k < t.size(); ++k) {
        change = std::max(change, (t.states[k] - end).cwiseAbs().maxCoeff());
    }
    if (!(change <= tol)) return std::nullopt;
    if (!is_restricted_saddle(p, t.domain, end, 10.0 * tol)) return std::nullopt;
    return end;
}

double estimate_field_lipschitz(const SaddleProblem& p, const std::vector<Vector>& points) {
    double best = 0.0;
    for (const auto& z : points) {
        Eigen::JacobiSVD<Matrix> svd(field_jacobian(p, z));
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "t";
    for (int i = 0; i < t.domain.dim(); ++i) os << ",z_" << i;
    os << "\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << format_double(t.times[k]);
        for (Eigen::Index i = 0; i < t.states[k].size(); ++i) os << ',' << format_double(t.states[k](i));
        os << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is, const BoxDomain& domain) {
    std::string line;
    if (!std::getline(is, line)) throw InputError("read_trajectory_csv: missing header");
    const auto cols = std::count(line.begin(), line.end(), ',');
    if (cols != domain.dim()) throw InputError("read_trajectory_csv: header does not match domain dimension");
    Trajectory t(domain);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        t.times.push_back(std::stod(cell));
        Vector z(domain.dim());
        for (int i = 0; i < domain.dim(); ++i) {
            if (!std::getline(ss, cell, ',')) throw InputError("read_trajectory_csv: short row");
            z(i) = std::stod(cell);
        }
        t.states.push_back(std::move(z));
    }
    if (t.size() >= 2) {
        t.step = t.times[1] - t.times[0];
        t.stride = 1;
    }
    return t;
}

}  // namespace saddleflow
