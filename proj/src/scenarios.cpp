#include "saddleflow/scenarios.hpp"

#include <Eigen/QR>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace saddleflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Params merge_params(const std::string& id, const Params& defaults, const Params& given) {
    Params out = defaults;
    for (const auto& [k, v] : given) {
        if (!defaults.count(k)) throw ConfigError("params." + k, "not a parameter of builtin '" + id + "'");
        out[k] = v;
    }
    return out;
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries{
        {"example1",
         "phi = -x1^2/2 + (x1 + x2) y on {x1 >= a} x R^2; convergent for a <= 0, oscillating on the face x1 = a "
         "for a > 0",
         {{"a", 1.0}}},
        {"example2",
         "phi = -x2^2/2 + x1 y on {x1 >= a} x R^2; oscillating for a < 0, saddle ray {(0,0,y): y <= 0} for a = 0, "
         "no saddle for a > 0",
         {{"a", -1.0}}},
        {"strict-quadratic",
         "random strictly concave-convex quadratic, n = m = 2, on a random box drawn from 'seed'",
         {{"seed", 0.0}}},
        {"routing-a",
         "2 sources, 4 routes, 8 distinct directed links. Source 1 (utility log(1+s)) uses routes r0 = {1->2, 2->4} "
         "and r1 = {1->3, 3->4}; source 2 (utility 1-exp(-s)) uses r2 = {2->1, 1->3'} and r3 = {2->4', 4->3}; "
         "primed links are parallel edges kept distinct. Link capacity 'capacity', gains 'kappa'",
         {{"capacity", 1.0}, {"kappa", 1.0}}},
        {"routing-b",
         "1 source with utility log(1+s) and two routes: r0 over 4 links, r1 over 3 links. Link capacity "
         "'capacity', gains 'kappa'",
         {{"capacity", 0.5}, {"kappa", 1.0}}},
    };
    return entries;
}

const CatalogEntry& lookup(const std::string& id) {
    for (const auto& e : catalog()) {
        if (e.id == id) return e;
    }
    throw CatalogError("unknown builtin scenario '" + id + "'");
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

std::vector<Vector> filter_saddles(const SaddleProblem& p, const BoxDomain& d, const std::vector<Vector>& cands) {
    std::vector<Vector> out;
    for (const auto& s : cands) {
        if (s.size() == d.dim() && d.contains(s) && is_restricted_saddle(p, d, s, 1e-7)) out.push_back(s);
    }
    return out;
}

Scenario routing_scenario(const std::string& id, const Params& params, RoutingNetwork net, Vector x_saddle,
                          Vector perturb) {
    Scenario s{id, params, routing_problem(net), routing_domain(net), {}, routing_program(net), net,
               Vector(), IntegratorConfig{}, 0, lookup(id).description, "none"};
    // Prices on each route's links share the marginal utility equally.
    const Vector rates = net.H * x_saddle;
    Vector marginal(net.routes());
    for (int j = 0; j < net.routes(); ++j) {
        int src = 0;
        net.H.col(j).maxCoeff(&src);
        marginal(j) = net.utilities[src].d1(rates(src));
    }
    Vector y(net.links());
    for (int k = 0; k < net.links(); ++k) {
        int route = 0;
        net.L.row(k).maxCoeff(&route);
        y(k) = marginal(route) / net.L.col(route).sum();
    }
    Vector z(net.routes() + net.links());
    z << x_saddle, y;
    s.saddles = {z};
    s.z0 = z;
    s.z0.head(net.routes()) += perturb;
    s.integrator.method = Method::ProjectedHeun;
    s.integrator.step = 1e-3;
    s.integrator.stride = 100;
    return s;
}

}  // namespace

std::vector<CatalogEntry> builtin_catalog() { return catalog(); }

ConcaveProgram example1_program(double a, bool equality) {
    ConcaveProgram cp;
    cp.n = 2;
    cp.objective.value = [](const Vector& x) { return -0.5 * x(0) * x(0); };
    cp.objective.grad = [](const Vector& x) -> Vector { return vec({-x(0), 0.0}); };
    cp.objective.hess = [](const Vector&) -> Matrix {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = -1.0;
        return h;
    };
    cp.constraints.push_back(affine_function(vec({1.0, 1.0}), 0.0));
    cp.equality.push_back(equality);
    cp.x_domain = BoxDomain(vec({a, -kInf}), vec({kInf, kInf}));
    return cp;
}

QuadraticSaddle random_strict_quadratic(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> eig(0.5, 2.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> lin(-2.0, 2.0);
    auto rotation = [&]() {
        Matrix g(2, 2);
        for (int i = 0; i < 4; ++i) g.data()[i] = gauss(rng);
        return Matrix(Eigen::HouseholderQR<Matrix>(g).householderQ());
    };
    auto spd = [&]() {
        const Matrix u = rotation();
        const Vector d = vec({eig(rng), eig(rng)});
        Matrix m = u * d.asDiagonal() * u.transpose();
        return Matrix(0.5 * (m + m.transpose()));
    };
    const Matrix P = -spd();
    const Matrix Q = spd();
    Matrix R(2, 2);
    for (int i = 0; i < 4; ++i) R.data()[i] = unit(rng);
    const Vector p = vec({lin(rng), lin(rng)});
    const Vector q = vec({lin(rng), lin(rng)});
    return QuadraticSaddle(P, Q, R, p, q);
}

Scenario make_builtin(const std::string& id, const Params& given) {
    const CatalogEntry& entry = lookup(id);
    const Params params = merge_params(id, entry.defaults, given);

    if (id == "example1") {
        const double a = params.at("a");
        const QuadraticSaddle q(vec({-1.0, 0.0}).asDiagonal().toDenseMatrix(), Matrix::Zero(1, 1),
                                Matrix::Ones(2, 1));
        Scenario s{id, params, q.to_problem(), BoxDomain(vec({a, -kInf, -kInf}), vec({kInf, kInf, kInf})),
                   {}, example1_program(a), std::nullopt, Vector(), IntegratorConfig{}, 2, entry.description, "none"};
        const Vector saddle = a > 0 ? vec({a, -a, 0.0}) : Vector(Vector::Zero(3));
        s.saddles = {saddle};
        s.z0 = saddle + Vector::Constant(3, 0.5);
        s.integrator.horizon = 100.0;
        s.integrator.stride = 10;
        return s;
    }
    if (id == "example2") {
        const double a = params.at("a");
        const QuadraticSaddle q(vec({0.0, -1.0}).asDiagonal().toDenseMatrix(), Matrix::Zero(1, 1),
                                vec({1.0, 0.0}));
        Scenario s{id, params, q.to_problem(), BoxDomain(vec({a, -kInf, -kInf}), vec({kInf, kInf, kInf})),
                   {}, std::nullopt, std::nullopt, Vector(), IntegratorConfig{}, 0, entry.description, "none"};
        ConcaveProgram cp;
        cp.n = 2;
        cp.objective.value = [](const Vector& x) { return -0.5 * x(1) * x(1); };
        cp.objective.grad = [](const Vector& x) -> Vector { return vec({0.0, -x(1)}); };
        cp.objective.hess = [](const Vector&) -> Matrix { return vec({0.0, -1.0}).asDiagonal().toDenseMatrix(); };
        cp.constraints.push_back(affine_function(vec({1.0, 0.0}), 0.0));
        cp.equality.push_back(true);
        cp.x_domain = BoxDomain(vec({a, -kInf}), vec({kInf, kInf}));
        s.program = cp;
        if (a < 0) s.saddles = {Vector::Zero(3)};
        else if (a == 0) s.saddles = {Vector::Zero(3), vec({0.0, 0.0, -1.0})};
        s.z0 = vec({std::max(a, 0.0) + 0.5, 0.5, 0.5});
        s.integrator.horizon = 100.0;
        s.integrator.stride = 10;
        return s;
    }
    if (id == "strict-quadratic") {
        const double seed_d = params.at("seed");
        if (seed_d < 0 || seed_d != std::floor(seed_d)) throw ConfigError("params.seed", "must be a non-negative integer");
        const auto seed = static_cast<std::uint64_t>(seed_d);
        const QuadraticSaddle q = random_strict_quadratic(seed);
        std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
        std::uniform_real_distribution<double> width(0.2, 2.0);
        std::uniform_int_distribution<int> kind(0, 3);
        Vector lo(4), hi(4);
        for (int i = 0; i < 4; ++i) {
            const int k = kind(rng);
            lo(i) = (k == 0 || k == 1) ? -width(rng) : -kInf;
            hi(i) = (k == 0 || k == 2) ? width(rng) : kInf;
        }
        Scenario s{id, params, q.to_problem(), BoxDomain(lo, hi), {}, std::nullopt, std::nullopt,
                   Vector(), IntegratorConfig{}, 0, entry.description, "none"};
        SaddleSearchOptions so;
        so.seed = seed;
        s.saddles = locate_saddles(s.problem, s.domain, so);
        s.z0 = sample_working_region(s.domain, 1, seed + 1, 2.0).front();
        s.integrator.horizon = 200.0;
        s.integrator.stride = 100;
        return s;
    }
    if (id == "routing-a") {
        RoutingNetwork net;
        net.H = Matrix::Zero(2, 4);
        net.H << 1, 1, 0, 0, 0, 0, 1, 1;
        net.L = Matrix::Zero(8, 4);
        for (int k = 0; k < 8; ++k) net.L(k, k / 2) = 1.0;
        net.C = Vector::Constant(8, params.at("capacity"));
        net.utilities = {log_utility(), saturating_utility()};
        net.kappas = Vector::Constant(4, params.at("kappa"));
        Scenario s = routing_scenario(id, params, net, Vector::Constant(4, params.at("capacity")),
                                      vec({0.2, 0.0, 0.1, 0.0}));
        s.integrator.horizon = 200.0;
        return s;
    }
    if (id == "routing-b") {
        RoutingNetwork net;
        net.H = Matrix::Ones(1, 2);
        net.L = Matrix::Zero(7, 2);
        for (int k = 0; k < 7; ++k) net.L(k, k < 4 ? 0 : 1) = 1.0;
        net.C = Vector::Constant(7, params.at("capacity"));
        net.utilities = {log_utility()};
        net.kappas = Vector::Constant(2, params.at("kappa"));
        Scenario s = routing_scenario(id, params, net, Vector::Constant(2, params.at("capacity")),
                                      vec({0.2, 0.0}));
        s.integrator.horizon = 200.0;
        return s;
    }
    throw CatalogError("unknown builtin scenario '" + id + "'");
}

std::string to_string(ModificationKind k) {
    switch (k) {
        case ModificationKind::AuxiliaryVariables: return "auxiliary";
        case ModificationKind::PenaltyFunction: return "penalty";
        case ModificationKind::ConstraintModification: return "constraint";
    }
    return "auxiliary";
}

ModificationKind modification_from_string(const std::string& s) {
    if (s == "auxiliary") return ModificationKind::AuxiliaryVariables;
    if (s == "penalty") return ModificationKind::PenaltyFunction;
    if (s == "constraint") return ModificationKind::ConstraintModification;
    throw ConfigError("modification.kind", "expected 'auxiliary', 'penalty' or 'constraint', got '" + s + "'");
}

Scenario apply_modification(const Scenario& base, const ModificationSpec& spec) {
    Scenario s = base;
    s.modification = to_string(spec.kind);
    if (spec.kind == ModificationKind::AuxiliaryVariables) {
        if (base.saddles.empty()) throw SpecError("auxiliary_variables: a reference saddle is required");
        const Matrix M = spec.M.value_or(Matrix::Identity(base.problem.n, base.problem.n));
        Vector kappas;
        if (spec.kappas) kappas = *spec.kappas;
        else if (base.network && M.rows() == base.network->routes()) kappas = base.network->kappas;
        else kappas = Vector::Ones(M.rows());
        AuxiliaryProblem aux = auxiliary_variables(base.problem, base.domain, M, kappas, base.saddles.front());
        s.problem = aux.problem;
        s.domain = aux.domain;
        s.saddles.clear();
        for (const auto& z : base.saddles) s.saddles.push_back(aux.lift(z));
        s.z0 = aux.lift(base.z0);
        s.metric_coordinate = base.metric_coordinate + static_cast<int>(M.rows());
        s.program.reset();
        return s;
    }
    if (!base.program) throw SpecError(s.modification + " modification requires a concave program");
    ConcaveProgram cp = *base.program;
    if (spec.kind == ModificationKind::PenaltyFunction) {
        s.problem = penalty_method(cp);
    } else {
        // Multipliers of the modified constraints are sign-constrained.
        cp.equality.assign(cp.equality.size(), false);
        s.problem = constraint_modification(cp);
        s.program = cp;
    }
    s.domain = lagrangian_domain(cp);
    std::vector<Vector> projected;
    for (const auto& z : base.saddles) projected.push_back(project_point(s.domain, z));
    s.saddles = filter_saddles(s.problem, s.domain, projected);
    if (s.saddles.empty()) s.saddles = locate_saddles(s.problem, s.domain, SaddleSearchOptions{}, projected);
    s.z0 = project_point(s.domain, base.z0);
    return s;
}

namespace {

void check_keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (!allowed.count(k)) throw ConfigError(path.empty() ? k : path + "." + k, "unknown field");
    }
}

bool get_bool(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

int get_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

std::string get_string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

}  // namespace

ScenarioConfig config_from_json(const Json& j) {
    check_keys(j, "", {"name", "problem", "params", "domain", "modification", "z0", "integrator", "analyses",
                       "saddles", "metrics", "scan"});
    ScenarioConfig cfg;
    if (!j.contains("problem")) throw ConfigError("problem", "missing field");
    const Json& prob = j["problem"];
    if (prob.is_string()) {
        cfg.problem = prob.get<std::string>();
    } else if (prob.is_object()) {
        if (!prob.contains("type")) throw ConfigError("problem.type", "missing field");
        cfg.problem = get_string(prob["type"], "problem.type");
        if (cfg.problem != "quadratic" && cfg.problem != "program") {
            throw ConfigError("problem.type", "expected 'quadratic' or 'program'");
        }
        cfg.inline_problem = prob;
    } else {
        throw ConfigError("problem", "expected a builtin id or an inline problem object");
    }
    cfg.name = j.contains("name") ? get_string(j["name"], "name") : cfg.problem;
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("params", "expected an object");
        for (const auto& [k, v] : j["params"].items()) cfg.params[k] = number_from_json(v, "params." + k);
    }
    if (j.contains("domain")) cfg.domain = box_from_json(j["domain"], "domain");
    if (j.contains("modification") && !j["modification"].is_null()) {
        const Json& m = j["modification"];
        check_keys(m, "modification", {"kind", "kappas", "M"});
        if (!m.contains("kind")) throw ConfigError("modification.kind", "missing field");
        ModificationSpec spec;
        spec.kind = modification_from_string(get_string(m["kind"], "modification.kind"));
        if (m.contains("kappas")) spec.kappas = vector_from_json(m["kappas"], "modification.kappas");
        if (m.contains("M")) spec.M = matrix_from_json(m["M"], "modification.M");
        cfg.modification = spec;
    }
    if (j.contains("z0")) cfg.z0 = vector_from_json(j["z0"], "z0");
    if (j.contains("integrator")) {
        const Json& in = j["integrator"];
        check_keys(in, "integrator", {"step", "horizon", "stride", "method", "equilibrium_tol"});
        if (in.contains("step")) cfg.integrator.step = number_from_json(in["step"], "integrator.step");
        if (in.contains("horizon")) cfg.integrator.horizon = number_from_json(in["horizon"], "integrator.horizon");
        if (in.contains("stride")) cfg.integrator.stride = get_int(in["stride"], "integrator.stride");
        if (in.contains("equilibrium_tol")) {
            cfg.integrator.equilibrium_tol = number_from_json(in["equilibrium_tol"], "integrator.equilibrium_tol");
        }
        if (in.contains("method")) {
            try {
                cfg.integrator.method = method_from_string(get_string(in["method"], "integrator.method"));
            } catch (const InputError& e) {
                throw ConfigError("integrator.method", e.what());
            }
        }
    }
    if (j.contains("analyses")) {
        const Json& a = j["analyses"];
        check_keys(a, "analyses", {"certificate", "face_scan", "instability", "bifurcation"});
        if (a.contains("certificate")) cfg.analyses.certificate = get_bool(a["certificate"], "analyses.certificate");
        if (a.contains("face_scan")) cfg.analyses.face_scan = get_bool(a["face_scan"], "analyses.face_scan");
        if (a.contains("instability")) cfg.analyses.instability = get_bool(a["instability"], "analyses.instability");
        if (a.contains("bifurcation")) cfg.analyses.bifurcation = get_bool(a["bifurcation"], "analyses.bifurcation");
    }
    if (j.contains("saddles")) {
        if (!j["saddles"].is_array()) throw ConfigError("saddles", "expected an array of vectors");
        for (std::size_t k = 0; k < j["saddles"].size(); ++k) {
            cfg.saddles.push_back(vector_from_json(j["saddles"][k], "saddles[" + std::to_string(k) + "]"));
        }
    }
    if (j.contains("metrics")) {
        const Json& m = j["metrics"];
        check_keys(m, "metrics", {"window", "coordinate"});
        if (m.contains("window")) {
            const Vector w = vector_from_json(m["window"], "metrics.window");
            if (w.size() != 2 || !(w(0) < w(1))) throw ConfigError("metrics.window", "expected [t_begin, t_end] with t_begin < t_end");
            cfg.metric_window = std::make_pair(w(0), w(1));
        }
        if (m.contains("coordinate")) cfg.metric_coordinate = get_int(m["coordinate"], "metrics.coordinate");
    }
    if (j.contains("scan")) {
        const Json& s = j["scan"];
        check_keys(s, "scan", {"param", "values"});
        if (s.contains("param")) cfg.scan_param = get_string(s["param"], "scan.param");
        if (s.contains("values")) {
            const Vector v = vector_from_json(s["values"], "scan.values");
            cfg.scan_values.assign(v.data(), v.data() + v.size());
        }
    }
    return cfg;
}

Json config_to_json(const ScenarioConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    j["problem"] = cfg.inline_problem.is_null() ? Json(cfg.problem) : cfg.inline_problem;
    Json params = Json::object();
    for (const auto& [k, v] : cfg.params) params[k] = number_to_json(v);
    j["params"] = params;
    if (cfg.domain) j["domain"] = box_to_json(*cfg.domain);
    if (cfg.modification) {
        Json m{{"kind", to_string(cfg.modification->kind)}};
        if (cfg.modification->kappas) m["kappas"] = vector_to_json(*cfg.modification->kappas);
        if (cfg.modification->M) m["M"] = matrix_to_json(*cfg.modification->M);
        j["modification"] = m;
    }
    if (cfg.z0) j["z0"] = vector_to_json(*cfg.z0);
    Json in = Json::object();
    if (cfg.integrator.step) in["step"] = *cfg.integrator.step;
    if (cfg.integrator.horizon) in["horizon"] = *cfg.integrator.horizon;
    if (cfg.integrator.stride) in["stride"] = *cfg.integrator.stride;
    if (cfg.integrator.method) in["method"] = to_string(*cfg.integrator.method);
    if (cfg.integrator.equilibrium_tol) in["equilibrium_tol"] = *cfg.integrator.equilibrium_tol;
    j["integrator"] = in;
    j["analyses"] = Json{{"certificate", cfg.analyses.certificate},
                         {"face_scan", cfg.analyses.face_scan},
                         {"instability", cfg.analyses.instability},
                         {"bifurcation", cfg.analyses.bifurcation}};
    if (!cfg.saddles.empty()) {
        Json s = Json::array();
        for (const auto& v : cfg.saddles) s.push_back(vector_to_json(v));
        j["saddles"] = s;
    }
    Json metrics = Json::object();
    if (cfg.metric_window) metrics["window"] = Json{cfg.metric_window->first, cfg.metric_window->second};
    if (cfg.metric_coordinate) metrics["coordinate"] = *cfg.metric_coordinate;
    if (!metrics.empty()) j["metrics"] = metrics;
    Json values = Json::array();
    for (double v : cfg.scan_values) values.push_back(number_to_json(v));
    j["scan"] = Json{{"param", cfg.scan_param}, {"values", values}};
    return j;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

ScenarioConfig builtin_config(const std::string& id) {
    lookup(id);
    ScenarioConfig cfg;
    cfg.name = id;
    cfg.problem = id;
    return cfg;
}

namespace {

Scenario inline_scenario(const ScenarioConfig& cfg) {
    const Json& j = cfg.inline_problem;
    Scenario s{cfg.problem, cfg.params, SaddleProblem{}, BoxDomain::unbounded(1), {}, std::nullopt, std::nullopt,
               Vector(), IntegratorConfig{}, 0, "inline " + cfg.problem + " problem", "none"};
    if (cfg.problem == "quadratic") {
        check_keys(j, "problem", {"type", "P", "Q", "R", "p", "q"});
        for (const char* key : {"P", "Q", "R"}) {
            if (!j.contains(key)) throw ConfigError(std::string("problem.") + key, "missing field");
        }
        const Matrix P = matrix_from_json(j["P"], "problem.P");
        const Matrix Q = matrix_from_json(j["Q"], "problem.Q");
        const Matrix R = matrix_from_json(j["R"], "problem.R");
        const Vector p = j.contains("p") ? vector_from_json(j["p"], "problem.p") : Vector(Vector::Zero(P.rows()));
        const Vector q = j.contains("q") ? vector_from_json(j["q"], "problem.q") : Vector(Vector::Zero(Q.rows()));
        try {
            s.problem = QuadraticSaddle(P, Q, R, p, q).to_problem();
        } catch (const InputError& e) {
            throw ConfigError("problem", e.what());
        }
        s.domain = cfg.domain.value_or(BoxDomain::unbounded(s.problem.dim()));
    } else {
        check_keys(j, "problem", {"type", "P", "p", "G", "h", "equality"});
        for (const char* key : {"P", "G", "h"}) {
            if (!j.contains(key)) throw ConfigError(std::string("problem.") + key, "missing field");
        }
        const Matrix P = matrix_from_json(j["P"], "problem.P");
        const Matrix G = matrix_from_json(j["G"], "problem.G");
        const Vector h = vector_from_json(j["h"], "problem.h");
        const auto n = P.rows();
        const Vector p = j.contains("p") ? vector_from_json(j["p"], "problem.p") : Vector(Vector::Zero(n));
        if (P.cols() != n || p.size() != n || G.cols() != n || G.rows() != h.size()) {
            throw ConfigError("problem", "inconsistent program shapes");
        }
        ConcaveProgram cp;
        cp.n = static_cast<int>(n);
        cp.objective.value = [P, p](const Vector& x) { return 0.5 * x.dot(P * x) + p.dot(x); };
        cp.objective.grad = [P, p](const Vector& x) -> Vector { return P * x + p; };
        cp.objective.hess = [P](const Vector&) -> Matrix { return P; };
        for (Eigen::Index k = 0; k < G.rows(); ++k) {
            cp.constraints.push_back(affine_function(G.row(k).transpose(), h(k)));
            bool eq = false;
            if (j.contains("equality")) {
                const std::string ep = "problem.equality[" + std::to_string(k) + "]";
                if (!j["equality"].is_array() || j["equality"].size() != static_cast<std::size_t>(G.rows())) {
                    throw ConfigError("problem.equality", "expected one flag per constraint");
                }
                eq = get_bool(j["equality"][k], ep);
            }
            cp.equality.push_back(eq);
        }
        if (cfg.domain) {
            if (cfg.domain->dim() != n + G.rows()) throw ConfigError("domain", "dimension does not match the program");
            cp.x_domain = cfg.domain->slice(0, static_cast<int>(n));
        }
        s.problem = build_lagrangian(cp);
        s.problem.constant_hessians = true;
        s.domain = cfg.domain.value_or(lagrangian_domain(cp));
        s.program = cp;
    }
    if (s.domain.dim() != s.problem.dim()) throw ConfigError("domain", "dimension does not match the problem");
    s.saddles = filter_saddles(s.problem, s.domain, cfg.saddles);
    if (s.saddles.size() != cfg.saddles.size()) throw ConfigError("saddles", "a listed point is not a restricted saddle");
    if (s.saddles.empty()) s.saddles = locate_saddles(s.problem, s.domain);
    const Vector centre = s.saddles.empty() ? Vector(Vector::Zero(s.domain.dim())) : s.saddles.front();
    s.z0 = project_point(s.domain, centre + Vector::Constant(s.domain.dim(), 0.5));
    return s;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg) {
    Scenario s = (cfg.problem == "quadratic" || cfg.problem == "program") ? inline_scenario(cfg)
                                                                           : make_builtin(cfg.problem, cfg.params);
    const bool is_builtin = !(cfg.problem == "quadratic" || cfg.problem == "program");
    if (is_builtin && cfg.domain) {
        if (cfg.domain->dim() != s.domain.dim()) throw ConfigError("domain", "dimension does not match the problem");
        s.domain = *cfg.domain;
        std::vector<Vector> cands = cfg.saddles.empty() ? s.saddles : cfg.saddles;
        for (auto& c : cands) c = project_point(s.domain, c);
        s.saddles = filter_saddles(s.problem, s.domain, cands);
        if (s.saddles.empty()) s.saddles = locate_saddles(s.problem, s.domain, SaddleSearchOptions{}, cands);
        s.z0 = project_point(s.domain, s.z0);
    } else if (is_builtin && !cfg.saddles.empty()) {
        s.saddles = filter_saddles(s.problem, s.domain, cfg.saddles);
        if (s.saddles.size() != cfg.saddles.size()) throw ConfigError("saddles", "a listed point is not a restricted saddle");
    }
    if (cfg.z0) {
        if (cfg.z0->size() != s.domain.dim()) throw ConfigError("z0", "dimension does not match the problem");
        if (s.domain.violation(*cfg.z0) > 1e-6) throw ConfigError("z0", "initial state lies outside the domain");
        s.z0 = *cfg.z0;
    }
    if (cfg.metric_coordinate) {
        if (*cfg.metric_coordinate < 0 || *cfg.metric_coordinate >= s.domain.dim()) {
            throw ConfigError("metrics.coordinate", "out of range");
        }
        s.metric_coordinate = *cfg.metric_coordinate;
    }
    if (cfg.modification) s = apply_modification(s, *cfg.modification);

    const auto& io = cfg.integrator;
    if (io.step) s.integrator.step = *io.step;
    if (io.horizon) s.integrator.horizon = *io.horizon;
    if (io.stride) s.integrator.stride = *io.stride;
    if (io.method) s.integrator.method = *io.method;
    if (io.equilibrium_tol) s.integrator.equilibrium_tol = *io.equilibrium_tol;
    try {
        s.integrator.validate();
    } catch (const InputError& e) {
        throw ConfigError("integrator", e.what());
    }
    return s;
}

namespace {

Json saddles_json(const std::vector<Vector>& saddles) {
    Json out = Json::array();
    for (const auto& s : saddles) out.push_back(vector_to_json(s));
    return out;
}

Json face_scan_json(const FaceScanResult& r) {
    Json faces = Json::array();
    for (const auto& f : r.faces) {
        faces.push_back(Json{{"face", face_to_json(f.face)},
                             {"saddles", saddles_json(f.saddles)},
                             {"verdict", f.report ? Json(to_string(f.report->verdict)) : Json(nullptr)},
                             {"report", f.report ? report_to_json(*f.report) : Json(nullptr)},
                             {"note", f.note}});
    }
    return Json{{"overall", r.no_saddle ? "NoSaddle" : to_string(r.overall)},
                {"saddles", saddles_json(r.saddles)},
                {"faces", faces},
                {"full_report", r.full_report ? report_to_json(*r.full_report) : Json(nullptr)}};
}

double nearest_distance(const std::vector<Vector>& saddles, const Vector& z) {
    double best = kInf;
    for (const auto& s : saddles) best = std::min(best, (s - z).norm());
    return best;
}

Json scan_rows_json(const std::vector<ScanRow>& rows) {
    Json out = Json::array();
    for (const auto& r : rows) {
        out.push_back(Json{{"value", number_to_json(r.value)},
                           {"verdict", short_code(r.outcome)},
                           {"saddles", saddles_json(r.saddles)},
                           {"frequency", r.frequency ? number_to_json(*r.frequency) : Json(nullptr)},
                           {"message", r.message}});
    }
    return out;
}

}  // namespace

RunOutputs run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir, const RunOptions& opts) {
    const Scenario s = build_scenario(cfg);
    std::filesystem::create_directories(out_dir);
    RunOutputs out;
    if (opts.simulate) out.trajectory = out_dir / "trajectory.csv";
    out.report = out_dir / "report.json";

    Json rep;
    rep["scenario"] = cfg.name;
    rep["problem"] = s.id;
    Json params = Json::object();
    for (const auto& [k, v] : s.params) params[k] = number_to_json(v);
    rep["params"] = params;
    rep["description"] = s.description;
    rep["modification"] = s.modification;
    rep["dimension"] = Json{{"n", s.problem.n}, {"m", s.problem.m}};
    rep["domain"] = box_to_json(s.domain);
    rep["saddles"] = saddles_json(s.saddles);
    rep["z0"] = vector_to_json(s.z0);
    rep["integrator"] = Json{{"method", to_string(s.integrator.method)},
                             {"step", s.integrator.step},
                             {"horizon", s.integrator.horizon},
                             {"stride", s.integrator.stride},
                             {"equilibrium_tol", s.integrator.equilibrium_tol}};
    rep["tolerances"] = Json{{"bound_tol", kBoundTol},
                             {"divergence_norm", kDivergenceNorm},
                             {"equilibrium_tol", s.integrator.equilibrium_tol},
                             {"saddle_check_tol", 1e-7}};

    if (opts.simulate) {
        Json sim;
        std::optional<Trajectory> traj;
        try {
            traj = simulate(s.problem, s.domain, s.z0, s.integrator);
            sim["status"] = "completed";
        } catch (const DivergenceError& e) {
            traj = e.partial();
            sim["status"] = "diverged";
            sim["message"] = e.what();
            sim["last_time"] = e.last_time();
            sim["last_state"] = vector_to_json(e.last_finite_state());
        }
        std::ofstream csv(out.trajectory);
        write_trajectory_csv(csv, *traj);
        sim["samples"] = traj->size();
        sim["final_time"] = traj->times.back();
        sim["final_state"] = vector_to_json(traj->final_state());
        if (!s.saddles.empty()) {
            sim["saddle_distance"] = Json{{"initial", nearest_distance(s.saddles, traj->states.front())},
                                          {"final", nearest_distance(s.saddles, traj->final_state())}};
        }
        std::string outcome = "undetermined";
        if (sim["status"] == "diverged") {
            outcome = "diverged";
            sim["equilibrium"] = nullptr;
            sim["oscillation"] = nullptr;
        } else {
            const auto eq = detect_equilibrium(s.problem, *traj, s.integrator.equilibrium_tol);
            sim["equilibrium"] = eq ? vector_to_json(*eq) : Json(nullptr);
            const double t_end = traj->times.back();
            const auto window = cfg.metric_window.value_or(std::make_pair(0.25 * t_end, t_end));
            sim["metric_window"] = Json{window.first, window.second};
            sim["metric_coordinate"] = s.metric_coordinate;
            std::optional<OscillationMetrics> m;
            try {
                m = oscillation_metrics(*traj, window.first, std::min(window.second, t_end), s.metric_coordinate);
            } catch (const InputError& e) {
                sim["metric_error"] = e.what();
            }
            if (m) {
                sim["oscillation"] = Json{{"period_estimate", number_to_json(m->period_estimate)},
                                          {"amplitude_trend", number_to_json(m->amplitude_trend)},
                                          {"zero_crossings", m->crossing_times.size()}};
            } else {
                sim["oscillation"] = nullptr;
            }
            if (eq) outcome = "converged";
            else if (m && m->amplitude_trend >= 0.95) outcome = "oscillating";
        }
        sim["outcome"] = outcome;
        rep["simulation"] = sim;
    }

    if (opts.analyze) {
        if (cfg.analyses.certificate) {
            if (s.saddles.empty()) {
                rep["certificate"] = Json{{"verdict", "NoSaddle"}};
            } else {
                rep["certificate"] = report_to_json(convergence_certificate(s.problem, s.domain, s.saddles));
            }
        }
        if (cfg.analyses.face_scan) {
            try {
                rep["face_scan"] = face_scan_json(face_criterion_scan(
                    s.problem, s.domain, s.saddles.empty() ? std::nullopt : std::optional(s.saddles)));
            } catch (const CapacityError& e) {
                rep["face_scan"] = Json{{"error", e.what()}};
            }
        }
        if (cfg.analyses.instability) {
            if (s.network && s.modification == "none") {
                const auto inst = routing_instability(*s.network);
                rep["instability"] = inst ? Json{{"u", vector_to_json(inst->u)}, {"lambda", inst->lambda}} : Json(nullptr);
            } else {
                rep["instability"] = Json{{"error", "applies to unmodified routing networks only"}};
            }
        }
        if (cfg.analyses.bifurcation) {
            const auto rows = scan(cfg, cfg.scan_param, cfg.scan_values);
            out.scan_table = out_dir / "scan.csv";
            std::ofstream csv(*out.scan_table);
            write_scan_csv(csv, cfg.scan_param, rows);
            rep["bifurcation"] = Json{{"param", cfg.scan_param}, {"rows", scan_rows_json(rows)}};
        }
    }

    std::ofstream(out.report) << dump_json(rep);
    out.report_json = std::move(rep);
    return out;
}

std::vector<ScanRow> scan(const ScenarioConfig& cfg, const std::string& param, const std::vector<double>& values) {
    const bool is_builtin = !(cfg.problem == "quadratic" || cfg.problem == "program");
    if (!is_builtin) throw ConfigError("scan.param", "inline problems have no parameters");
    if (!lookup(cfg.problem).defaults.count(param)) {
        throw ConfigError("scan.param", "'" + param + "' is not a parameter of builtin '" + cfg.problem + "'");
    }
    auto family = [&](double v) {
        ScenarioConfig c = cfg;
        c.params[param] = v;
        c.z0.reset();
        Scenario s = build_scenario(c);
        std::vector<Vector> saddles = s.saddles;
        return FamilyMember{s.problem, s.domain, [saddles] { return saddles; }};
    };
    const auto entries = bifurcation_scan(family, values);
    std::vector<ScanRow> rows;
    for (const auto& e : entries) {
        ScanRow r;
        r.value = e.param;
        r.outcome = e.outcome;
        r.saddles = e.saddles;
        r.message = e.message;
        if (e.report && e.report->witness) r.frequency = e.report->witness->frequency;
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_scan_csv(std::ostream& os, const std::string& param, const std::vector<ScanRow>& rows) {
    os << "param,value,verdict,saddles,frequency,message\n";
    for (const auto& r : rows) {
        std::string saddles;
        for (std::size_t k = 0; k < r.saddles.size(); ++k) {
            if (k) saddles += '|';
            for (Eigen::Index i = 0; i < r.saddles[k].size(); ++i) {
                if (i) saddles += ';';
                saddles += format_double(r.saddles[k](i));
            }
        }
        std::string msg = r.message;
        for (auto& ch : msg) {
            if (ch == '"') ch = '\'';
        }
        os << param << ',' << format_double(r.value) << ',' << short_code(r.outcome) << ',' << saddles << ','
           << (r.frequency ? format_double(*r.frequency) : "") << ",\"" << msg << "\"\n";
    }
}

}  // namespace saddleflow
