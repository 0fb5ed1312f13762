#pragma once

// Builtin problems, scenario configuration, batch runs and parameter scans.

#include "saddleflow/analysis.hpp"
#include "saddleflow/domain.hpp"
#include "saddleflow/integrator.hpp"
#include "saddleflow/io.hpp"
#include "saddleflow/modifications.hpp"
#include "saddleflow/routing.hpp"
#include "saddleflow/saddle.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace saddleflow {

using Params = std::map<std::string, double>;

struct CatalogEntry {
    std::string id;
    std::string description;
    Params defaults;
};

std::vector<CatalogEntry> builtin_catalog();

/// A concrete problem ready to simulate and analyze.
struct Scenario {
    std::string id;
    Params params;
    SaddleProblem problem;
    BoxDomain domain;
    /// Restricted saddles known in closed form (or located once at build time).
    std::vector<Vector> saddles;
    std::optional<ConcaveProgram> program;
    std::optional<RoutingNetwork> network;
    Vector z0;
    IntegratorConfig integrator;
    /// Coordinate tracked by the oscillation metrics.
    int metric_coordinate = 0;
    std::string description;
    std::string modification = "none";
};

/// Throws CatalogError for an unknown id and ConfigError for an unknown parameter.
Scenario make_builtin(const std::string& id, const Params& params = {});

/// Default Example 1 program: max -x1^2/2 subject to x1 + x2 = 0, x1 >= a.
ConcaveProgram example1_program(double a, bool equality = true);

/// Random strictly concave-convex quadratic with n = m = 2 (eigenvalues of
/// P in [-2,-0.5], of Q in [0.5,2]).
QuadraticSaddle random_strict_quadratic(std::uint64_t seed);

enum class ModificationKind { AuxiliaryVariables, PenaltyFunction, ConstraintModification };

std::string to_string(ModificationKind k);
ModificationKind modification_from_string(const std::string& s);

struct ModificationSpec {
    ModificationKind kind = ModificationKind::AuxiliaryVariables;
    std::optional<Vector> kappas;  // auxiliary gains; defaults to the network's or 1
    std::optional<Matrix> M;       // auxiliary map; defaults to the identity
};

/// Transformed scenario: problem, domain, saddles and z0 are carried over.
Scenario apply_modification(const Scenario& base, const ModificationSpec& spec);

struct IntegratorOverride {
    std::optional<double> step;
    std::optional<double> horizon;
    std::optional<int> stride;
    std::optional<Method> method;
    std::optional<double> equilibrium_tol;
};

struct AnalysisFlags {
    bool certificate = true;
    bool face_scan = false;
    bool instability = false;
    bool bifurcation = false;
};

struct ScenarioConfig {
    std::string name;
    std::string problem;  // builtin id, "quadratic" or "program"
    Json inline_problem;  // body for "quadratic" / "program"
    Params params;
    std::optional<BoxDomain> domain;
    std::optional<ModificationSpec> modification;
    std::optional<Vector> z0;
    IntegratorOverride integrator;
    AnalysisFlags analyses;
    std::vector<Vector> saddles;
    std::optional<std::pair<double, double>> metric_window;
    std::optional<int> metric_coordinate;
    std::string scan_param = "a";
    std::vector<double> scan_values;
};

ScenarioConfig config_from_json(const Json& j);
Json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);
/// Config running builtin `id` with its defaults.
ScenarioConfig builtin_config(const std::string& id);

/// Scenario described by the config (builtin or inline, then domain, z0 and
/// modification overrides).
Scenario build_scenario(const ScenarioConfig& cfg);

struct RunOutputs {
    std::filesystem::path trajectory;  // empty when not simulated
    std::filesystem::path report;
    std::optional<std::filesystem::path> scan_table;
    Json report_json;
};

struct RunOptions {
    bool simulate = true;
    bool analyze = true;
};

/// Simulates and analyzes, writing trajectory.csv, report.json and (for a
/// bifurcation analysis) scan.csv under `out_dir`.
RunOutputs run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir, const RunOptions& opts = {});

struct ScanRow {
    double value = 0.0;
    ScanOutcome outcome = ScanOutcome::Failed;
    std::vector<Vector> saddles;
    std::optional<double> frequency;
    std::string message;
};

/// Certificate per parameter value; failures are recorded per row.
std::vector<ScanRow> scan(const ScenarioConfig& cfg, const std::string& param, const std::vector<double>& values);

void write_scan_csv(std::ostream& os, const std::string& param, const std::vector<ScanRow>& rows);

}  // namespace saddleflow
