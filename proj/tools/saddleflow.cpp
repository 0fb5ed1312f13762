// Command line front end: simulate, analyze, scan, list.

#include "saddleflow/scenarios.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace sf = saddleflow;

namespace {

struct Common {
    std::vector<std::string> scenarios;
    std::vector<std::string> configs;
    std::vector<std::string> params;
    std::string z0;
    double T = 0.0;
    double h = 0.0;
    int stride = 0;
    std::string out = "out";
    int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenarios, "Builtin scenario id (repeatable)");
    cmd->add_option("--config", c.configs, "Scenario config file (repeatable)")->check(CLI::ExistingFile);
    cmd->add_option("--param", c.params, "Parameter override k=v (repeatable)");
    cmd->add_option("--z0", c.z0, "Initial state v1,v2,...");
    cmd->add_option("--T", c.T, "Simulation horizon")->check(CLI::PositiveNumber);
    cmd->add_option("--h", c.h, "Step size")->check(CLI::PositiveNumber);
    cmd->add_option("--stride", c.stride, "Keep every stride-th step")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--jobs", c.jobs, "Scenarios run concurrently")->check(CLI::PositiveNumber);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw sf::ConfigError(what, "cannot parse '" + cell + "' as a number");
        }
    }
    return out;
}

std::vector<sf::ScenarioConfig> collect(const Common& c) {
    std::vector<sf::ScenarioConfig> cfgs;
    for (const auto& id : c.scenarios) cfgs.push_back(sf::builtin_config(id));
    for (const auto& path : c.configs) cfgs.push_back(sf::load_config(path));
    if (cfgs.empty()) throw sf::ConfigError("--scenario", "give at least one --scenario or --config");
    for (auto& cfg : cfgs) {
        for (const auto& kv : c.params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw sf::ConfigError("--param", "expected k=v, got '" + kv + "'");
            const auto vals = parse_list(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
            if (vals.size() != 1) throw sf::ConfigError("--param", "expected a single value in '" + kv + "'");
            cfg.params[kv.substr(0, eq)] = vals.front();
        }
        if (!c.z0.empty()) {
            const auto v = parse_list(c.z0, "--z0");
            cfg.z0 = Eigen::Map<const sf::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
        if (c.T > 0) cfg.integrator.horizon = c.T;
        if (c.h > 0) cfg.integrator.step = c.h;
        if (c.stride > 0) cfg.integrator.stride = c.stride;
    }
    return cfgs;
}

std::vector<std::filesystem::path> output_dirs(const std::vector<sf::ScenarioConfig>& cfgs, const std::string& root) {
    std::vector<std::filesystem::path> dirs;
    if (cfgs.size() == 1) return {std::filesystem::path(root)};
    std::map<std::string, int> seen;
    for (const auto& cfg : cfgs) {
        const int k = seen[cfg.name]++;
        dirs.push_back(std::filesystem::path(root) / (k == 0 ? cfg.name : cfg.name + "-" + std::to_string(k)));
    }
    return dirs;
}

std::string summary(const sf::ScenarioConfig& cfg, const sf::RunOutputs& out) {
    std::string line = cfg.name + ":";
    const auto& rep = out.report_json;
    if (rep.contains("simulation")) line += " simulation " + rep["simulation"]["outcome"].get<std::string>();
    if (rep.contains("certificate")) line += ", certificate " + rep["certificate"]["verdict"].get<std::string>();
    if (rep.contains("instability")) {
        const auto& inst = rep["instability"];
        if (inst.is_null()) line += ", no instability direction";
        else if (inst.contains("error")) line += ", instability check not applicable";
        else line += ", instability direction found";
    }
    line += " -> " + out.report.parent_path().string();
    return line;
}

int run_batch(const Common& c, const sf::RunOptions& opts, bool all_analyses) {
    auto cfgs = collect(c);
    if (all_analyses) {
        for (auto& cfg : cfgs) {
            cfg.analyses.certificate = true;
            cfg.analyses.instability = cfg.analyses.instability || cfg.problem.rfind("routing", 0) == 0;
        }
    }
    const auto dirs = output_dirs(cfgs, c.out);
    std::vector<std::string> lines(cfgs.size());
    std::vector<int> status(cfgs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfgs.size(); i = next++) {
            try {
                lines[i] = summary(cfgs[i], sf::run_scenario(cfgs[i], dirs[i], opts));
            } catch (const std::exception& e) {
                lines[i] = cfgs[i].name + ": error: " + e.what();
                status[i] = 1;
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(c.jobs, static_cast<int>(cfgs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    int rc = 0;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        (status[i] ? std::cerr : std::cout) << lines[i] << "\n";
        rc = std::max(rc, status[i]);
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projected saddle-point dynamics: simulation and convergence analysis"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    Common sim_opts, ana_opts, scan_opts;
    auto* sim = app.add_subcommand("simulate", "Simulate scenarios and write trajectory.csv and report.json");
    add_common(sim, sim_opts);
    auto* ana = app.add_subcommand("analyze", "Simulate and run the convergence analyses");
    add_common(ana, ana_opts);
    bool face_scan = false;
    ana->add_flag("--face-scan", face_scan, "Also run the per-face criterion");

    auto* scn = app.add_subcommand("scan", "Certificate verdict per parameter value; writes scan.csv");
    add_common(scn, scan_opts);
    std::string vary = "a";
    std::string values;
    scn->add_option("--vary", vary, "Parameter to vary");
    scn->add_option("--values", values, "Comma-separated parameter values")->required();

    auto* lst = app.add_subcommand("list", "List builtin scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            sf::RunOptions opts;
            opts.analyze = false;
            return run_batch(sim_opts, opts, false);
        }
        if (ana->parsed()) {
            Common c = ana_opts;
            if (face_scan) {
                // Face scans are requested through the config; mirror the flag.
                auto cfgs = collect(c);
                const auto dirs = output_dirs(cfgs, c.out);
                int rc = 0;
                for (std::size_t i = 0; i < cfgs.size(); ++i) {
                    cfgs[i].analyses.face_scan = true;
                    cfgs[i].analyses.instability = cfgs[i].problem.rfind("routing", 0) == 0;
                    try {
                        std::cout << summary(cfgs[i], sf::run_scenario(cfgs[i], dirs[i])) << "\n";
                    } catch (const std::exception& e) {
                        std::cerr << cfgs[i].name << ": error: " << e.what() << "\n";
                        rc = 1;
                    }
                }
                return rc;
            }
            return run_batch(c, sf::RunOptions{}, true);
        }
        if (scn->parsed()) {
            auto cfgs = collect(scan_opts);
            const auto vals = parse_list(values, "--values");
            const auto dirs = output_dirs(cfgs, scan_opts.out);
            for (std::size_t i = 0; i < cfgs.size(); ++i) {
                const auto rows = sf::scan(cfgs[i], vary, vals);
                std::filesystem::create_directories(dirs[i]);
                std::ofstream csv(dirs[i] / "scan.csv");
                sf::write_scan_csv(csv, vary, rows);
                sf::write_scan_csv(std::cout, vary, rows);
            }
            return 0;
        }
        if (lst->parsed()) {
            for (const auto& e : sf::builtin_catalog()) {
                std::cout << e.id << "\n  " << e.description << "\n  defaults:";
                for (const auto& [k, v] : e.defaults) std::cout << " " << k << "=" << sf::format_double(v);
                std::cout << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
