#ifndef POWALLOC_MODEL_JSON_HPP
#define POWALLOC_MODEL_JSON_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "powalloc/errors.hpp"
#include "powalloc/model.hpp"

namespace powalloc {

namespace detail {

inline std::string json_line_of(const std::string& text, size_t byte) {
  size_t line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return std::to_string(line);
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& name,
                                           const std::string& context) {
  if (!obj.contains(name))
    throw io_error(context + ": missing field '" + name + "'");
  return obj.at(name);
}

inline Matrix parse_matrix(const nlohmann::json& rows, int want_rows, int want_cols,
                           const std::string& field, const std::string& context) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != want_rows)
    throw io_error(context + ": field '" + field + "' must be an array of " +
                   std::to_string(want_rows) + " rows");
  Matrix m(want_rows, want_cols);
  for (int i = 0; i < want_rows; ++i) {
    const auto& row = rows.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != want_cols)
      throw io_error(context + ": field '" + field + "' row " + std::to_string(i) +
                     " must have " + std::to_string(want_cols) + " numbers");
    for (int j = 0; j < want_cols; ++j) {
      if (!row.at(j).is_number())
        throw io_error(context + ": field '" + field + "' entry (" + std::to_string(i) + "," +
                       std::to_string(j) + ") is not a number");
      m(i, j) = row.at(j).get<double>();
    }
  }
  return m;
}

}  // namespace detail

/// Supported built-in nonlinear map kinds for model files. The C++ API takes
/// arbitrary callables; files are restricted to named families.
inline NonlinearMap make_nonlinear_map(const std::string& kind, std::vector<double> scale,
                                       std::vector<double> linearization_point) {
  const int k = static_cast<int>(linearization_point.size());
  if (scale.empty()) scale.assign(k, 1.0);
  if (static_cast<int>(scale.size()) != k)
    throw domain_error("nonlinear map: params.scale must have length k");
  if (kind != "square")
    throw domain_error("nonlinear map: unknown kind '" + kind + "'; supported kinds: square");

  NonlinearMap map;
  map.linearization_point = std::move(linearization_point);
  map.map = [scale](const std::vector<double>& phi) {
    std::vector<double> out(phi.size());
    for (size_t i = 0; i < phi.size(); ++i) out[i] = scale[i] * phi[i] * phi[i];
    return out;
  };
  map.jacobian = [scale, k](const std::vector<double>& phi) {
    Matrix jac(k, k);
    for (int i = 0; i < k; ++i) jac(i, i) = 2.0 * scale[i] * phi[i];
    return jac;
  };
  return map;
}

namespace detail {
inline SystemModel parse_model_object(const nlohmann::json& doc, const std::string& context);
}

/// Parses a model JSON document. Parse failures name the line; semantic
/// failures name the offending field.
inline SystemModel parse_model_json(const std::string& text, const std::string& context) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw io_error(context + ": malformed JSON at line " +
                   detail::json_line_of(text, e.byte) + ": " + e.what());
  }
  try {
    return detail::parse_model_object(doc, context);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(context + ": wrong field type: " + e.what());
  }
}

inline SystemModel detail::parse_model_object(const nlohmann::json& doc,
                                              const std::string& context) {
  if (!doc.is_object()) throw io_error(context + ": top level must be a JSON object");

  const auto& kj = detail::require_field(doc, "k", context);
  const auto& nj = detail::require_field(doc, "n", context);
  if (!kj.is_number_integer() || kj.get<int>() < 1)
    throw io_error(context + ": field 'k' must be a positive integer");
  if (!nj.is_number_integer() || nj.get<int>() < 1)
    throw io_error(context + ": field 'n' must be a positive integer");
  const int k = kj.get<int>();
  const int n = nj.get<int>();

  int nuisance = 0;
  if (doc.contains("nuisance_count")) {
    const auto& nu = doc.at("nuisance_count");
    if (!nu.is_number_integer() || nu.get<int>() < 0)
      throw io_error(context + ": field 'nuisance_count' must be a nonnegative integer");
    nuisance = nu.get<int>();
  }

  const auto& noise_obj = detail::require_field(doc, "noise", context);
  const std::string type =
      detail::require_field(noise_obj, "type", context + ": field 'noise'").get<std::string>();
  NoiseModel noise = [&]() -> NoiseModel {
    try {
      if (type == "gaussian") {
        const auto& vj =
            detail::require_field(noise_obj, "variances", context + ": field 'noise'");
        if (!vj.is_array() || static_cast<int>(vj.size()) != n)
          throw io_error(context + ": field 'noise.variances' must be an array of n numbers");
        return NoiseModel::gaussian_diagonal(vj.get<std::vector<double>>());
      }
      if (type == "fim") {
        const auto& mj =
            detail::require_field(noise_obj, "matrix", context + ": field 'noise'");
        return NoiseModel::custom_fim(
            SymMatrix::from_dense(detail::parse_matrix(mj, n, n, "noise.matrix", context)));
      }
    } catch (const domain_error& e) {
      throw io_error(context + ": field 'noise': " + e.what());
    }
    throw io_error(context + ": field 'noise.type' must be \"gaussian\" or \"fim\"");
  }();

  const bool has_linear = doc.contains("F");
  const bool has_nonlinear = doc.contains("nonlinear");
  if (has_linear == has_nonlinear)
    throw io_error(context + ": exactly one of 'F' or 'nonlinear' is required");

  try {
    if (has_linear)
      return SystemModel::linear(detail::parse_matrix(doc.at("F"), k, n, "F", context),
                                 std::move(noise), nuisance);

    const auto& nl = doc.at("nonlinear");
    const std::string kind =
        detail::require_field(nl, "kind", context + ": field 'nonlinear'").get<std::string>();
    const auto& pj =
        detail::require_field(nl, "linearization_point", context + ": field 'nonlinear'");
    if (!pj.is_array() || static_cast<int>(pj.size()) != k)
      throw io_error(context +
                     ": field 'nonlinear.linearization_point' must be an array of k numbers");
    std::vector<double> scale;
    if (nl.contains("params") && nl.at("params").contains("scale"))
      scale = nl.at("params").at("scale").get<std::vector<double>>();
    return SystemModel::nonlinear(
        make_nonlinear_map(kind, std::move(scale), pj.get<std::vector<double>>()), k, n,
        std::move(noise), nuisance);
  } catch (const error& e) {
    if (dynamic_cast<const io_error*>(&e)) throw;
    throw io_error(context + ": " + e.what());
  }
}

/// Loads and parses a model file.
inline SystemModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str(), "model file " + path);
}

}  // namespace powalloc

#endif  // POWALLOC_MODEL_JSON_HPP
