#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wgsc/traces.hpp"

namespace wgsc {

/// Invalid or unresolvable configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar field from a spec:
///   number                      constant
///   "constant:c"                constant c
///   "coordinate:k"              y_k, 1-based
///   "norm_q:q", "l2_norm"       ambient norms
///   "sup_norm_kl:grid"          sup norm of the Karhunen-Loeve path
///   "bump"                      exp(-|y|^2 / 2)
///   {"bump": {"center": c, "width": w, "functionals": [[...], ...]}}
///   {"poly": [{"c": 1.0, "e": [1, 0, ...]}, ...]}
///   {"sum": [a, b, ...]}, {"product": [a, b]}, {"scaled": {"by": s, "field": a}}
///   any other string            a name from `named`
ScalarField parse_field(const nlohmann::json& spec, const GaussianModel& model,
                        const nlohmann::json& named = nlohmann::json::object());

/// Vector field from a spec:
///   {"vector": [scalar specs]}, {"gradient": scalar spec}, "gradient:<scalar spec>",
///   {"constant_vector": [...]}, "basis:k" (1-based), "grad_G", "normal_G",
///   any other string            a name from `named`
VectorField parse_vector_field(const nlohmann::json& spec, const GaussianModel& model,
                               const std::optional<LevelSetSurface>& surface,
                               const nlohmann::json& named = nlohmann::json::object());

/// {"kind": "hyperplane", "normal": [...], "offset": c} | {"kind": "sphere", "radius": r}
/// | {"kind": "l2_path_sphere"} | {"kind": "custom", "field": spec}, each with optional "delta".
LevelSetSurface parse_surface(const nlohmann::json& spec, const GaussianModel& model,
                              const nlohmann::json& named = nlohmann::json::object());

/// Everything a check needs, resolved from one run configuration.
struct CheckContext {
  GaussianModel model;
  Weight weight;
  std::optional<LevelSetSurface> surface;
  nlohmann::json fields = nlohmann::json::object();
  std::size_t budget = 1'000'000;
  std::uint64_t seed = 1;
  std::string method = "auto";
  nlohmann::json tolerance = nlohmann::json::object();

  ScalarField field(const nlohmann::json& spec) const { return parse_field(spec, model, fields); }
  VectorField vector_field(const nlohmann::json& spec) const {
    return parse_vector_field(spec, model, surface, fields);
  }
  const LevelSetSurface& require_surface(std::string_view check) const;

  /// Volume quadrature from "method", "budget", "seed", "gh_nodes" params.
  /// "auto" picks Gauss-Hermite up to dimension 4 and Monte Carlo above.
  QuadratureOptions quadrature(const nlohmann::json& params) const;
  /// Adds "surface_method" (auto | exact | shell) and shell budget/seed.
  TraceOptions trace_options(const std::string& check, const nlohmann::json& params) const;
  /// "floor" param, else tolerance[check], else tolerance["floor"], else 1e-9.
  double floor(const std::string& check, const nlohmann::json& params) const;
  std::size_t budget_of(const nlohmann::json& params) const;
  std::uint64_t seed_of(const nlohmann::json& params) const;
};

struct CheckOutput {
  std::vector<IdentityReport> reports;
  nlohmann::json detail = nlohmann::json::object();
};

struct CheckInfo {
  std::string id;
  std::string title;
  std::string formula;
  std::string params;  // accepted parameters with defaults
  std::function<CheckOutput(const CheckContext&, const nlohmann::json&)> run;
};

const std::vector<CheckInfo>& check_registry();
/// nullptr when unknown.
const CheckInfo* find_check(std::string_view id);

}  // namespace wgsc
