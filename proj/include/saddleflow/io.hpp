#pragma once

// JSON encoding of domains, vectors, matrices and convergence reports.
// Infinite bounds are written as the strings "inf" / "-inf".

#include "saddleflow/analysis.hpp"
#include "saddleflow/common.hpp"
#include "saddleflow/domain.hpp"

#include <json.hpp>

#include <string>

namespace saddleflow {

using Json = nlohmann::json;

Json number_to_json(double x);
/// Accepts numbers and the strings "inf", "-inf", "nan". `path` names the
/// field in ConfigError messages.
double number_from_json(const Json& j, const std::string& path);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& path);

/// Row-major nested arrays.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& path);

Json box_to_json(const BoxDomain& d);
BoxDomain box_from_json(const Json& j, const std::string& path);

Json face_to_json(const FaceDescriptor& f);
FaceDescriptor face_from_json(const Json& j, const std::string& path);

Json report_to_json(const ConvergenceReport& r);
ConvergenceReport report_from_json(const Json& j, const std::string& path = "report");

/// Stable text form: two-space indent and a trailing newline.
std::string dump_json(const Json& j);

}  // namespace saddleflow
