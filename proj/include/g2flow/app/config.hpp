#pragma once

// Run configuration read from JSON. Every object is validated against a fixed
// key set before any computation; unknown keys are errors.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "g2flow/errors.hpp"
#include "g2flow/flow.hpp"
#include "g2flow/geometry.hpp"
#include "g2flow/numerics.hpp"
#include "g2flow/soliton.hpp"

namespace g2flow::app {

using Json = nlohmann::json;

/// Malformed or schema-violating configuration. The message carries either
/// "source:line:column" (syntax) or a JSON pointer (schema).
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

Json parse_json(std::string_view text, std::string_view source = "<config>");
Json load_json_file(const std::string& path);

/// {"n": int, "r_min": num, "r_max": num, "topology": "circle"|"interval"}
Grid parse_grid(const Json& j, const std::string& where = "/grid");

/// One profile function: {"samples": [...]} or {"expr": {"name": preset, ...}}.
/// Presets (missing parameters default as listed):
///   constant  value
///   linear    intercept + slope r                     (intercept 0, slope 1)
///   sin, cos  offset + amplitude sin/cos(frequency r + phase)   (0, 1, 1, 0)
///   exp       offset + amplitude exp(rate r)          (0, 1, 1)
/// `winding` is the number of turns theta makes around a circle grid.
struct FieldSpec {
  Field values;
  int winding = 0;
};
FieldSpec parse_field(const Json& j, const Grid& grid, const std::string& where, bool is_angle);

/// Top-level "lambda", "grid", "G", "h", "theta".
WarpedProfile parse_profile(const Json& root);

struct FlowBlock {
  double k = 2.0;
  double C = 0.0;
  double mu = 0.0;
  double t_end = 1.0;
};
FlowBlock parse_flow_block(const Json& j, const std::string& where = "/flow");

/// {"family": "parabolic"|"hyperbolic"|"trig", "C", "R", "r0", "theta0", "sign"}.
/// "family" is optional; when present it must match the (C, R) classification.
/// R defaults to 2|C| (parabolic).
struct SolitonBlock {
  std::optional<std::string> family;
  double C = 0.0;
  std::optional<double> R;
  double r0 = 0.0;
  double theta0 = 0.0;
  int sign = 1;

  CYFamily make_family(const std::string& where = "/soliton") const;
};
SolitonBlock parse_soliton_block(const Json& j, const std::string& where = "/soliton");

StepControl parse_step_control(const Json& j, const std::string& where = "/step_control");

/// Cartesian-product sweep: {"soliton": {"C": [...], "R": [...]}} or
/// {"flow": {"k": [...], "C": [...]}}. Keys name fields of the base block.
struct SweepBlock {
  std::string target;  // "soliton" or "flow"
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  std::size_t size() const;
};
SweepBlock parse_sweep_block(const Json& j, const std::string& where = "/sweep");

struct RunConfig {
  Json raw;
  std::optional<WarpedProfile> profile;
  std::optional<Grid> grid;
  std::optional<FlowBlock> flow;
  std::optional<SolitonBlock> soliton;
  std::optional<SweepBlock> sweep;
  StepControl step;
};

/// Validates the whole document. The profile is built when any of G, h,
/// theta is present (then all of lambda, grid, G, h, theta are required).
RunConfig parse_run_config(const Json& root);
RunConfig load_run_config(const std::string& path);

}  // namespace g2flow::app
