#include "saddleflow/io.hpp"

#include <cmath>
#include <limits>

namespace saddleflow {

Json number_to_json(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double number_from_json(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ConfigError(path, "expected a number");
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
    return out;
}

Vector vector_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
    return out;
}

Matrix matrix_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        const Vector row = vector_from_json(j[r], rp);
        if (static_cast<std::size_t>(row.size()) != cols) throw ConfigError(rp, "ragged matrix rows");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

Json box_to_json(const BoxDomain& d) { return Json{{"lower", vector_to_json(d.lower())}, {"upper", vector_to_json(d.upper())}}; }

BoxDomain box_from_json(const Json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("lower") || !j.contains("upper")) {
        throw ConfigError(path, "expected an object with 'lower' and 'upper'");
    }
    try {
        return BoxDomain(vector_from_json(j["lower"], path + ".lower"), vector_from_json(j["upper"], path + ".upper"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

Json face_to_json(const FaceDescriptor& f) {
    Json pinned = Json::array();
    for (const auto& [i, b] : f.pinned) pinned.push_back(Json{i, b == Bound::AtLower ? "lower" : "upper"});
    return Json{{"domain", box_to_json(f.domain)}, {"pinned", pinned}};
}

FaceDescriptor face_from_json(const Json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("pinned")) throw ConfigError(path, "expected a face object");
    BoxDomain d = box_from_json(j.at("domain"), path + ".domain");
    std::map<int, Bound> pinned;
    for (std::size_t k = 0; k < j["pinned"].size(); ++k) {
        const auto& e = j["pinned"][k];
        const std::string ep = path + ".pinned[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_string()) {
            throw ConfigError(ep, "expected [index, \"lower\"|\"upper\"]");
        }
        const auto side = e[1].get<std::string>();
        if (side != "lower" && side != "upper") throw ConfigError(ep, "bound must be 'lower' or 'upper'");
        pinned[e[0].get<int>()] = side == "lower" ? Bound::AtLower : Bound::AtUpper;
    }
    try {
        return FaceDescriptor(std::move(d), std::move(pinned));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

namespace {

Json complex_list(const std::vector<std::complex<double>>& v) {
    Json out = Json::array();
    for (const auto& c : v) out.push_back(Json{number_to_json(c.real()), number_to_json(c.imag())});
    return out;
}

std::vector<std::complex<double>> complex_list_from(const Json& j, const std::string& path) {
    std::vector<std::complex<double>> out;
    if (!j.is_array()) throw ConfigError(path, "expected an array of [re, im] pairs");
    for (std::size_t k = 0; k < j.size(); ++k) {
        const Vector pair = vector_from_json(j[k], path + "[" + std::to_string(k) + "]");
        if (pair.size() != 2) throw ConfigError(path, "expected [re, im]");
        out.emplace_back(pair(0), pair(1));
    }
    return out;
}

Json options_to_json(const CertificateOptions& o) {
    Json grid = Json::array();
    for (double r : o.r_grid) grid.push_back(r);
    return Json{{"r_grid", grid},
                {"subspace_tol", o.subspace_tol},
                {"kernel_tol", o.kernel_tol},
                {"spectral_tol", o.spectral_tol},
                {"sign_tol", o.sign_tol},
                {"witness_threshold", o.witness_threshold},
                {"witness_amplitude", o.witness_amplitude},
                {"witness_halvings", o.witness_halvings},
                {"witness_periods", o.witness_periods},
                {"witness_step", o.witness_step}};
}

CertificateOptions options_from_json(const Json& j, const std::string& path) {
    CertificateOptions o;
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = number_from_json(j[key], path + "." + key);
    };
    if (j.contains("r_grid")) {
        const Vector g = vector_from_json(j["r_grid"], path + ".r_grid");
        o.r_grid.assign(g.data(), g.data() + g.size());
    }
    num("subspace_tol", o.subspace_tol);
    num("kernel_tol", o.kernel_tol);
    num("spectral_tol", o.spectral_tol);
    num("sign_tol", o.sign_tol);
    num("witness_threshold", o.witness_threshold);
    num("witness_amplitude", o.witness_amplitude);
    num("witness_periods", o.witness_periods);
    num("witness_step", o.witness_step);
    if (j.contains("witness_halvings")) {
        if (!j["witness_halvings"].is_number_integer()) throw ConfigError(path + ".witness_halvings", "expected an integer");
        o.witness_halvings = j["witness_halvings"].get<int>();
    }
    return o;
}

}  // namespace

Json report_to_json(const ConvergenceReport& r) {
    Json j;
    j["verdict"] = to_string(r.verdict);
    j["face"] = face_to_json(r.face);
    j["projector"] = matrix_to_json(r.projector);
    j["limit_matrix"] = matrix_to_json(r.limit_matrix);
    j["eigenvalues"] = complex_list(r.eigenvalues);
    j["face_eigenvalues"] = complex_list(r.face_eigenvalues);
    j["reference_saddle"] = vector_to_json(r.reference_saddle);
    j["candidate_subspace_dim"] = r.candidate_subspace_dim;
    j["oscillating_subspace_dim"] = r.oscillating_subspace_dim;
    if (r.witness) {
        Json basis = Json::array();
        for (const auto& b : r.witness->basis) basis.push_back(vector_to_json(b));
        j["witness"] = Json{{"basis", basis},
                            {"frequency", number_to_json(r.witness->frequency)},
                            {"amplitude", number_to_json(r.witness->amplitude)},
                            {"amplitude_trend", number_to_json(r.witness->amplitude_trend)},
                            {"period_estimate", number_to_json(r.witness->period_estimate)}};
    } else {
        j["witness"] = nullptr;
    }
    j["tolerances"] = options_to_json(r.options);
    j["note"] = r.note;
    return j;
}

ConvergenceReport report_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto at = [&](const char* key) -> const Json& {
        if (!j.contains(key)) throw ConfigError(path + "." + key, "missing field");
        return j[key];
    };
    ConvergenceReport r(face_from_json(at("face"), path + ".face"));
    try {
        r.verdict = verdict_from_string(at("verdict").get<std::string>());
    } catch (const InputError& e) {
        throw ConfigError(path + ".verdict", e.what());
    }
    r.projector = matrix_from_json(at("projector"), path + ".projector");
    r.limit_matrix = matrix_from_json(at("limit_matrix"), path + ".limit_matrix");
    r.eigenvalues = complex_list_from(at("eigenvalues"), path + ".eigenvalues");
    r.face_eigenvalues = complex_list_from(at("face_eigenvalues"), path + ".face_eigenvalues");
    r.reference_saddle = vector_from_json(at("reference_saddle"), path + ".reference_saddle");
    r.candidate_subspace_dim = at("candidate_subspace_dim").get<int>();
    r.oscillating_subspace_dim = at("oscillating_subspace_dim").get<int>();
    const Json& w = at("witness");
    if (!w.is_null()) {
        OscillationWitnessData d;
        for (std::size_t k = 0; k < w.at("basis").size(); ++k) {
            d.basis.push_back(vector_from_json(w["basis"][k], path + ".witness.basis[" + std::to_string(k) + "]"));
        }
        d.frequency = number_from_json(w.at("frequency"), path + ".witness.frequency");
        d.amplitude = number_from_json(w.at("amplitude"), path + ".witness.amplitude");
        d.amplitude_trend = number_from_json(w.at("amplitude_trend"), path + ".witness.amplitude_trend");
        d.period_estimate = number_from_json(w.at("period_estimate"), path + ".witness.period_estimate");
        r.witness = std::move(d);
    }
    r.options = options_from_json(at("tolerances"), path + ".tolerances");
    r.note = at("note").get<std::string>();
    return r;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace saddleflow
