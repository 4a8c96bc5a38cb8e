#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "sfslide/systemdef.hpp"

namespace sfslide {

struct Tolerances {
  double rtol = 1e-9;
  double tie_tol = -1.0;  // negative: classifier default
  double c_stab = 1e-6;
  double slide_tol = 1e-9;
  std::size_t max_events = 1'000'000;
};

/// A system file: either affine coefficients or expression-language sources.
struct SystemConfig {
  enum class Kind { Affine, Nonlinear };

  std::string name;
  std::string description;
  Kind kind = Kind::Affine;
  AffineData affine;
  double affine_eps = 1e-3;   // eps used when an affine config is simulated
  ExprSystem nonlinear;
  Vec expansion_point;        // nonlinear only; zero if absent
  std::optional<Vec> x0, y0;  // start in normal-form coordinates
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json expected = nlohmann::json::object();
  Tolerances tol;

  double eps() const { return kind == Kind::Affine ? affine_eps : nonlinear.eps; }
};

/// Throws Error{ConfigError | DimensionMismatch | SyntaxError ...}.
SystemConfig parse_config(const nlohmann::json& j);
SystemConfig load_config(const std::string& path);

/// Canonical form; parse_config(config_to_json(c)) round-trips.
nlohmann::json config_to_json(const SystemConfig& c);

/// Names accepted by builtin_config: "example1", "example2".
nlohmann::json builtin_config(const std::string& name);

NormalFormCoeffs coeffs_from_config(const SystemConfig& c);
FullSystemSpec spec_from_config(const SystemConfig& c);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace sfslide
