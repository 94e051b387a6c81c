#include "g2flow/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace g2flow::app {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError((where.empty() ? std::string("/") : where) + ": " + what);
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) fail(where, std::string("expected an object, got ") + j.type_name());
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) fail(where + "/" + key, "unknown key");
  }
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, std::string("expected a number, got ") + j.type_name());
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

double number_or(const Json& obj, const char* key, double fallback, const std::string& where) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number_at(*it, where + "/" + key);
}

double number_required(const Json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where + "/" + key, "required");
  return number_at(*it, where + "/" + key);
}

long long integer_at(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, std::string("expected an integer, got ") + j.type_name());
  return j.get<long long>();
}

std::string string_at(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, std::string("expected a string, got ") + j.type_name());
  return j.get<std::string>();
}

std::function<double(double)> preset(const Json& e, const std::string& where) {
  require_object(e, where);
  const auto name_it = e.find("name");
  if (name_it == e.end()) fail(where + "/name", "required");
  const std::string name = string_at(*name_it, where + "/name");
  if (name == "constant") {
    check_keys(e, {"name", "value"}, where);
    const double c = number_required(e, "value", where);
    return [c](double) { return c; };
  }
  if (name == "linear") {
    check_keys(e, {"name", "intercept", "slope"}, where);
    const double a = number_or(e, "intercept", 0.0, where), b = number_or(e, "slope", 1.0, where);
    return [a, b](double r) { return a + b * r; };
  }
  if (name == "sin" || name == "cos") {
    check_keys(e, {"name", "offset", "amplitude", "frequency", "phase"}, where);
    const double c = number_or(e, "offset", 0.0, where), A = number_or(e, "amplitude", 1.0, where);
    const double w = number_or(e, "frequency", 1.0, where), p = number_or(e, "phase", 0.0, where);
    if (name == "sin") return [=](double r) { return c + A * std::sin(w * r + p); };
    return [=](double r) { return c + A * std::cos(w * r + p); };
  }
  if (name == "exp") {
    check_keys(e, {"name", "offset", "amplitude", "rate"}, where);
    const double c = number_or(e, "offset", 0.0, where), A = number_or(e, "amplitude", 1.0, where);
    const double k = number_or(e, "rate", 1.0, where);
    return [=](double r) { return c + A * std::exp(k * r); };
  }
  fail(where + "/name", "unknown preset \"" + name + "\" (constant, linear, sin, cos, exp)");
}

}  // namespace

Json parse_json(std::string_view text, std::string_view source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + msg);
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path);
}

Grid parse_grid(const Json& j, const std::string& where) {
  check_keys(j, {"n", "r_min", "r_max", "topology"}, where);
  const auto n_it = j.find("n");
  if (n_it == j.end()) fail(where + "/n", "required");
  const long long n = integer_at(*n_it, where + "/n");
  const double lo = number_required(j, "r_min", where), hi = number_required(j, "r_max", where);
  const auto t_it = j.find("topology");
  if (t_it == j.end()) fail(where + "/topology", "required");
  const std::string topo = string_at(*t_it, where + "/topology");
  Topology t;
  if (topo == "circle")
    t = Topology::Circle;
  else if (topo == "interval")
    t = Topology::Interval;
  else
    fail(where + "/topology", "expected \"circle\" or \"interval\"");
  if (n < 8) fail(where + "/n", "needs at least 8 nodes");
  if (!(hi > lo)) fail(where, "r_max must exceed r_min");
  return Grid(static_cast<std::size_t>(n), lo, hi, t);
}

FieldSpec parse_field(const Json& j, const Grid& grid, const std::string& where, bool is_angle) {
  require_object(j, where);
  const bool has_samples = j.contains("samples"), has_expr = j.contains("expr");
  if (has_samples == has_expr) fail(where, "exactly one of \"samples\" and \"expr\" is required");
  FieldSpec out{Field(grid), 0};
  if (has_samples) {
    if (is_angle)
      check_keys(j, {"samples", "winding"}, where);
    else
      check_keys(j, {"samples"}, where);
    const Json& s = j["samples"];
    if (!s.is_array()) fail(where + "/samples", "expected an array");
    if (s.size() != grid.size())
      fail(where + "/samples", "has " + std::to_string(s.size()) + " values, grid has " +
                                   std::to_string(grid.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
      out.values[i] = number_at(s[i], where + "/samples/" + std::to_string(i));
    if (const auto w = j.find("winding"); w != j.end()) {
      if (!grid.periodic()) fail(where + "/winding", "only meaningful on a circle grid");
      out.winding = static_cast<int>(integer_at(*w, where + "/winding"));
    }
    return out;
  }
  check_keys(j, {"expr"}, where);
  const auto f = preset(j["expr"], where + "/expr");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.values[i] = f(grid.node(i));
    if (!std::isfinite(out.values[i])) fail(where + "/expr", "evaluates to a non-finite value");
  }
  if (grid.periodic()) {
    const double f0 = f(grid.r_min()), jump = f(grid.r_max()) - f0;
    const double turns = is_angle ? std::round(jump / (2.0 * std::numbers::pi)) : 0.0;
    const double scale = std::max({1.0, std::abs(f0), std::abs(jump)});
    if (std::abs(jump - 2.0 * std::numbers::pi * turns) > 1e-9 * scale)
      fail(where + "/expr", is_angle ? "does not close up on the circle (jump must be 2 pi n)"
                                     : "is not periodic on the circle");
    out.winding = static_cast<int>(turns);
  }
  return out;
}

WarpedProfile parse_profile(const Json& root) {
  for (const char* key : {"lambda", "grid", "G", "h", "theta"})
    if (!root.contains(key)) fail(std::string("/") + key, "required for a profile");
  const double lambda = number_at(root["lambda"], "/lambda");
  const Grid grid = parse_grid(root["grid"]);
  FieldSpec G = parse_field(root["G"], grid, "/G", false);
  FieldSpec h = parse_field(root["h"], grid, "/h", false);
  FieldSpec theta = parse_field(root["theta"], grid, "/theta", true);
  WarpedProfile p(std::move(G.values), std::move(h.values), std::move(theta.values),
                  SU3Background{lambda}, theta.winding);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    fail("", std::string("invalid profile: ") + e.what());
  }
  return p;
}

FlowBlock parse_flow_block(const Json& j, const std::string& where) {
  check_keys(j, {"k", "C", "mu", "t_end"}, where);
  FlowBlock b;
  b.k = number_or(j, "k", b.k, where);
  b.C = number_or(j, "C", b.C, where);
  b.mu = number_or(j, "mu", b.mu, where);
  b.t_end = number_or(j, "t_end", b.t_end, where);
  if (!(b.t_end >= 0.0)) fail(where + "/t_end", "must be >= 0");
  return b;
}

CYFamily SolitonBlock::make_family(const std::string& where) const {
  const double r = R.value_or(2.0 * std::abs(C));
  CYFamily f;
  try {
    f = CYFamily::make(C, r, r0, theta0, sign);
  } catch (const DomainError& e) {
    fail(where, e.what());
  }
  if (family && *family != to_string(f.kind))
    fail(where + "/family", "\"" + *family + "\" does not match C, R (which give \"" +
                                to_string(f.kind) + "\")");
  return f;
}

SolitonBlock parse_soliton_block(const Json& j, const std::string& where) {
  check_keys(j, {"family", "C", "R", "r0", "theta0", "sign"}, where);
  SolitonBlock b;
  if (const auto it = j.find("family"); it != j.end()) {
    b.family = string_at(*it, where + "/family");
    if (*b.family != "parabolic" && *b.family != "hyperbolic" && *b.family != "trig")
      fail(where + "/family", "expected \"parabolic\", \"hyperbolic\" or \"trig\"");
  }
  b.C = number_or(j, "C", 0.0, where);
  if (j.contains("R")) b.R = number_at(j["R"], where + "/R");
  b.r0 = number_or(j, "r0", 0.0, where);
  b.theta0 = number_or(j, "theta0", 0.0, where);
  if (const auto it = j.find("sign"); it != j.end()) {
    const long long s = integer_at(*it, where + "/sign");
    if (s != 1 && s != -1) fail(where + "/sign", "expected 1 or -1");
    b.sign = static_cast<int>(s);
  }
  return b;
}

StepControl parse_step_control(const Json& j, const std::string& where) {
  check_keys(j, {"rtol", "atol", "dt_init", "dt_min", "max_steps"}, where);
  StepControl c;
  c.rtol = number_or(j, "rtol", c.rtol, where);
  c.atol = number_or(j, "atol", c.atol, where);
  c.dt_init = number_or(j, "dt_init", c.dt_init, where);
  c.dt_min = number_or(j, "dt_min", c.dt_min, where);
  if (const auto it = j.find("max_steps"); it != j.end()) {
    const long long m = integer_at(*it, where + "/max_steps");
    if (m <= 0) fail(where + "/max_steps", "must be positive");
    c.max_steps = static_cast<std::size_t>(m);
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    fail(where, e.what());
  }
  return c;
}

std::size_t SweepBlock::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.second.size();
  return n;
}

SweepBlock parse_sweep_block(const Json& j, const std::string& where) {
  check_keys(j, {"soliton", "flow"}, where);
  if (j.size() != 1) fail(where, "exactly one of \"soliton\" and \"flow\" is required");
  SweepBlock s;
  s.target = j.begin().key();
  const std::string w = where + "/" + s.target;
  const Json& axes = j.begin().value();
  if (s.target == "soliton")
    check_keys(axes, {"C", "R", "r0", "theta0"}, w);
  else
    check_keys(axes, {"k", "C", "t_end"}, w);
  if (axes.empty()) fail(w, "needs at least one axis");
  for (const auto& [key, values] : axes.items()) {
    if (!values.is_array() || values.empty()) fail(w + "/" + key, "expected a non-empty array");
    std::vector<double> v;
    for (std::size_t i = 0; i < values.size(); ++i)
      v.push_back(number_at(values[i], w + "/" + key + "/" + std::to_string(i)));
    s.axes.emplace_back(key, std::move(v));
  }
  return s;
}

RunConfig parse_run_config(const Json& root) {
  check_keys(root, {"lambda", "grid", "G", "h", "theta", "flow", "soliton", "step_control", "sweep"},
             "");
  RunConfig cfg;
  cfg.raw = root;
  if (root.contains("G") || root.contains("h") || root.contains("theta")) {
    cfg.profile = parse_profile(root);
    cfg.grid = cfg.profile->grid();
  } else {
    if (root.contains("lambda")) fail("/lambda", "only meaningful together with G, h, theta");
    if (root.contains("grid")) cfg.grid = parse_grid(root["grid"]);
  }
  if (root.contains("flow")) cfg.flow = parse_flow_block(root["flow"]);
  if (root.contains("soliton")) {
    cfg.soliton = parse_soliton_block(root["soliton"]);
    cfg.soliton->make_family();
  }
  if (root.contains("step_control")) cfg.step = parse_step_control(root["step_control"]);
  if (root.contains("sweep")) {
    cfg.sweep = parse_sweep_block(root["sweep"]);
    if (cfg.sweep->target == "soliton" && !cfg.soliton)
      fail("/sweep/soliton", "needs a base \"soliton\" block");
    if (cfg.sweep->target == "flow" && !(cfg.flow && cfg.profile))
      fail("/sweep/flow", "needs a base \"flow\" block and a profile");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(load_json_file(path)); }

}  // namespace g2flow::app
