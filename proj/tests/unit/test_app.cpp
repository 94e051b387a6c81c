#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "g2flow/app/commands.hpp"
#include "g2flow/app/verify.hpp"

using namespace g2flow;
using namespace g2flow::app;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = std::numbers::pi;

RunConfig cfg_from(const std::string& text) { return parse_run_config(parse_json(text)); }

std::string message_of(const std::string& text) {
  try {
    cfg_from(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::vector<std::string>* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) {
    std::istringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) header->push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream l(line);
    for (std::string cell; std::getline(l, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Run {
  int code;
  std::string out, err;
};

template <class Cmd>
Run run(Cmd cmd, const std::string& config, CommandOptions opt = {}) {
  std::ostringstream out, err;
  const int code = cmd(cfg_from(config), opt, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("g2flow_app_test_" + name);
  fs::remove_all(d);
  return d;
}

const std::string kSeparable = R"({
  "lambda": 0,
  "grid": {"n": 64, "r_min": 0, "r_max": 6.283185307179586, "topology": "circle"},
  "G": {"expr": {"name": "constant", "value": 1}},
  "h": {"expr": {"name": "constant", "value": 1}},
  "theta": {"expr": {"name": "linear", "intercept": 0, "slope": 1}},
  "flow": {"k": 2, "C": 0, "t_end": T_END}
})";

std::string separable(double t_end) {
  std::string s = kSeparable;
  s.replace(s.find("T_END"), 5, std::to_string(t_end));
  return s;
}
}  // namespace

TEST_CASE("malformed JSON reports line and column") {
  const std::string text = "{\n  \"lambda\": 1,\n  \"grid\": {\"n\": 8,, }\n}";
  std::string msg;
  try {
    parse_json(text, "cfg.json");
  } catch (const ConfigError& e) {
    msg = e.what();
  }
  CHECK(msg.rfind("cfg.json:3:", 0) == 0);
  // The second comma is the 19th character of line 3.
  CHECK(msg.find("cfg.json:3:19:") == 0);
}

TEST_CASE("schema violations name the offending JSON pointer") {
  CHECK(message_of(R"({"lamda": 1})") == "/lamda: unknown key");
  CHECK(message_of(R"({"flow": {"k": 2, "t_ned": 1}})") == "/flow/t_ned: unknown key");
  CHECK(message_of(R"({"flow": {"k": "two"}})").find("/flow/k: expected a number") == 0);
  CHECK(message_of(R"({"soliton": {"family": "elliptic", "C": 1}})").find("/soliton/family") == 0);
  CHECK(message_of(R"({"lambda": 1, "grid": {"n": 8, "r_min": 0, "r_max": 1, "topology": "interval"},
                       "G": {"expr": {"name": "constant", "value": 1}},
                       "h": {"expr": {"name": "constant", "value": 1}}})")
            .find("/theta") == 0);
  CHECK(message_of(R"({"lambda": 1, "grid": {"n": 8, "r_min": 0, "r_max": 1, "topology": "interval"},
                       "G": {"samples": [1, 1, 1]},
                       "h": {"expr": {"name": "constant", "value": 1}},
                       "theta": {"expr": {"name": "constant", "value": 0}}})")
            .find("/G/samples") == 0);
  CHECK(message_of(R"({"sweep": {"soliton": {"mu": [1]}}})") == "/sweep/soliton/mu: unknown key");
  // Trigonometric family requested for parameters that classify as hyperbolic.
  CHECK_FALSE(message_of(R"({"soliton": {"family": "trig", "C": 0.5, "R": 2}})").empty());
}

TEST_CASE("expression presets sample the documented formulas") {
  const RunConfig c = cfg_from(R"({
    "lambda": 1,
    "grid": {"n": 16, "r_min": 0, "r_max": 1.5, "topology": "interval"},
    "G": {"expr": {"name": "exp", "offset": 1, "amplitude": 0.5, "rate": -2}},
    "h": {"expr": {"name": "cos", "offset": 2, "amplitude": 0.25, "frequency": 3, "phase": 0.1}},
    "theta": {"expr": {"name": "sin", "offset": 0.5, "amplitude": 1, "frequency": 2, "phase": 0}}
  })");
  REQUIRE(c.profile);
  const WarpedProfile& p = *c.profile;
  for (std::size_t i = 0; i < p.grid().size(); ++i) {
    const double r = 0.1 * static_cast<double>(i);
    CHECK(p.G[i] == doctest::Approx(1 + 0.5 * std::exp(-2 * r)).epsilon(1e-15));
    CHECK(p.h[i] == doctest::Approx(2 + 0.25 * std::cos(3 * r + 0.1)).epsilon(1e-15));
    CHECK(p.theta[i] == doctest::Approx(0.5 + std::sin(2 * r)).epsilon(1e-15));
  }
}

TEST_CASE("torsion of a constant Calabi-Yau profile is zero") {
  const Run r = run(cmd_torsion, R"({
    "lambda": 0,
    "grid": {"n": 32, "r_min": 0, "r_max": 1, "topology": "interval"},
    "G": {"expr": {"name": "constant", "value": 1}},
    "h": {"expr": {"name": "constant", "value": 2}},
    "theta": {"expr": {"name": "constant", "value": 0.3}}
  })");
  CHECK(r.code == kOk);
  std::vector<std::string> header;
  const auto rows = parse_csv(r.out, &header);
  CHECK(header == std::vector<std::string>{"r", "G", "h", "theta", "alpha", "beta", "gamma", "tau1",
                                           "tau7_coeff", "tau27_scale", "traceT"});
  REQUIRE(rows.size() == 32);
  for (const auto& row : rows)
    for (std::size_t c = 4; c < row.size(); ++c) CHECK(row[c] == 0.0);
  CHECK(Json::parse(r.err)["class"]["torsion_free"] == true);
}

TEST_CASE("torsion columns for lambda = 1, theta = r, G = h = 1") {
  const Run r = run(cmd_torsion, R"({
    "lambda": 1,
    "grid": {"n": 64, "r_min": 0.2, "r_max": 1.4, "topology": "interval"},
    "G": {"expr": {"name": "constant", "value": 1}},
    "h": {"expr": {"name": "constant", "value": 1}},
    "theta": {"expr": {"name": "linear", "intercept": 0, "slope": 1}}
  })");
  REQUIRE(r.code == kOk);
  for (const auto& row : parse_csv(r.out)) {
    const double x = row[0];
    CHECK(row[4] == doctest::Approx(1.0).epsilon(1e-12));            // theta'/G
    CHECK(row[5] == doctest::Approx(std::sin(x)).epsilon(1e-14));    // sin(theta)/h
    CHECK(row[6] == doctest::Approx(std::cos(x)).epsilon(1e-14));    // cos(theta)/h
    CHECK(row[10] == doctest::Approx(1.0 - 6 * std::sin(x)).epsilon(1e-12));
  }
}

TEST_CASE("every CSV number round-trips") {
  const Run r = run(cmd_torsion, R"({
    "lambda": 1,
    "grid": {"n": 16, "r_min": 0.2, "r_max": 1.4, "topology": "interval"},
    "G": {"expr": {"name": "constant", "value": 1}},
    "h": {"expr": {"name": "constant", "value": 3}},
    "theta": {"expr": {"name": "linear", "intercept": 0.1, "slope": 0.7}}
  })");
  const RunConfig c = cfg_from(R"({
    "lambda": 1,
    "grid": {"n": 16, "r_min": 0.2, "r_max": 1.4, "topology": "interval"},
    "G": {"expr": {"name": "constant", "value": 1}},
    "h": {"expr": {"name": "constant", "value": 3}},
    "theta": {"expr": {"name": "linear", "intercept": 0.1, "slope": 0.7}}
  })");
  const TorsionABC t = compute_abc(*c.profile);
  const auto rows = parse_csv(r.out);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i][3] == c.profile->theta[i]);
    CHECK(rows[i][5] == t.beta[i]);
    CHECK(rows[i][6] == t.gamma[i]);
  }
}

TEST_CASE("flow on the separable profile tracks the closed form") {
  const double T = separable_cy_blowup_time(1.0, 1.0);
  const Run r = run(cmd_flow, separable(0.9 * T));
  REQUIRE(r.code == kOk);
  const auto rows = parse_csv(r.out);
  const double t_last = rows.back()[0];
  CHECK(t_last == doctest::Approx(0.9 * T).epsilon(1e-14));
  // Closed form: G = sqrt(1 - 2t), alpha = 1/G.
  const double G = std::sqrt(1 - 2 * t_last);
  for (const auto& row : rows) {
    if (row[0] != t_last) continue;
    CHECK(std::abs(row[5] - 1 / G) <= 1e-4);
    CHECK(std::abs(row[2] - G) <= 1e-4);
  }
  const Json summary = Json::parse(r.err);
  CHECK(summary["blow_up"].is_null());
}

TEST_CASE("flow blow-up is a result with exit code 0") {
  const Run r = run(cmd_flow, separable(1.0), CommandOptions{std::nullopt, "json"});
  CHECK(r.code == kOk);
  const Json s = Json::parse(r.out);
  REQUIRE(s["blow_up"].is_object());
  CHECK(s["blow_up"]["t_last"].get<double>() == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(s["blow_up"]["t_last"].get<double>() < 0.5);
}

TEST_CASE("flow of a torsion-free profile is constant") {
  const Run r = run(cmd_flow, R"({
    "lambda": 0,
    "grid": {"n": 16, "r_min": 0, "r_max": 1, "topology": "interval"},
    "G": {"expr": {"name": "constant", "value": 1.5}},
    "h": {"expr": {"name": "constant", "value": 2}},
    "theta": {"expr": {"name": "constant", "value": 0.3}},
    "flow": {"k": 2, "C": 0, "t_end": 1}
  })");
  REQUIRE(r.code == kOk);
  for (const auto& row : parse_csv(r.out)) {
    CHECK(row[2] == 1.5);
    CHECK(row[3] == 2.0);
    CHECK(row[4] == 0.3);
  }
}

TEST_CASE("flow refuses mu and a missing profile") {
  CHECK_THROWS_AS(run(cmd_flow, R"({"flow": {"k": 2}})"), ConfigError);
  std::string cfg = separable(0.1);
  cfg.replace(cfg.find("\"C\": 0"), 6, "\"C\": 0, \"mu\": 1");
  CHECK_THROWS_AS(run(cmd_flow, cfg), ConfigError);
}

TEST_CASE("snapshot stride thins the trajectory") {
  CommandOptions all, thin;
  all.snapshot_stride = 1;
  thin.snapshot_stride = 10;
  const Run a = run(cmd_flow, separable(0.3), all);
  const Run b = run(cmd_flow, separable(0.3), thin);
  const std::size_t n = 64;
  const std::size_t sa = parse_csv(a.out).size() / n, sb = parse_csv(b.out).size() / n;
  CHECK(sa > 10);
  CHECK(sb >= 2);
  CHECK(sb < sa);
}

TEST_CASE("parabolic phase portrait passes through (4C, 0) and tends to the origin") {
  const Run r = run(cmd_soliton,
                    R"({"grid": {"n": 401, "r_min": -40, "r_max": 0, "topology": "interval"},
                        "soliton": {"family": "parabolic", "C": 0.5, "R": 1}})");
  REQUIRE(r.code == kOk);
  const auto rows = parse_csv(r.out);
  CHECK(rows.back()[0] == 0.0);
  CHECK(rows.back()[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rows.back()[2] == 0.0);
  CHECK(std::hypot(rows.front()[1], rows.front()[2]) < 0.06);
  // Monotone approach along the branch.
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] >= rows[i - 1][1]);
}

TEST_CASE("trigonometric Q = 2 portrait is a closed loop") {
  CommandOptions opt;
  opt.format = "json";
  const Run r = run(cmd_soliton,
                    R"({"grid": {"n": 401, "r_min": 0, "r_max": 6.283185307179586, "topology": "interval"},
                        "soliton": {"family": "trig", "C": 1.25, "R": 1.5}})",
                    opt);
  REQUIRE(r.code == kOk);
  const Json s = Json::parse(r.out);
  CHECK(s["Q"].get<double>() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s["periodicity_2pi"]["periodic"] == true);
  const Json& first = s["samples"].front();
  const Json& last = s["samples"].back();
  CHECK(std::abs(first[1].get<double>() - last[1].get<double>()) < 1e-6);
  CHECK(std::abs(first[2].get<double>() - last[2].get<double>()) < 1e-6);
  // Two full turns of theta over one period of the loop.
  CHECK(last[3].get<double>() - first[3].get<double>() == doctest::Approx(4 * kPi).epsilon(1e-6));
  CHECK(s["max_closed_form_error"].get<double>() < 1e-6);
}

TEST_CASE("SVG rendering has axes and one polyline") {
  CommandOptions opt;
  opt.format = "svg";
  const Run r = run(cmd_soliton, R"({"soliton": {"family": "hyperbolic", "C": 0.5, "R": 2}})", opt);
  REQUIRE(r.code == kOk);
  CHECK(r.out.rfind("<svg", 0) == 0);
  CHECK(r.out.find("</svg>") != std::string::npos);
  CHECK(r.out.find(">alpha</text>") != std::string::npos);
  CHECK(r.out.find(">l</text>") != std::string::npos);
  std::size_t lines = 0;
  for (std::size_t p = r.out.find("<line"); p != std::string::npos; p = r.out.find("<line", p + 1)) ++lines;
  CHECK(lines == 2);
  const std::size_t poly = r.out.find("points=\"");
  REQUIRE(poly != std::string::npos);
  const std::string pts = r.out.substr(poly + 8, r.out.find('"', poly + 8) - poly - 8);
  CHECK(std::count(pts.begin(), pts.end(), ',') == 201);
}

TEST_CASE("catalog request returns every entry with a vanishing residual") {
  CommandOptions opt;
  opt.catalog = true;
  const Run r = run(cmd_soliton, R"({"flow": {"k": 2, "C": 0.5, "mu": 0.3}})", opt);
  REQUIRE(r.code == kOk);
  const Json c = Json::parse(r.out);
  std::set<int> ids;
  for (const Json& e : c["entries"]) {
    ids.insert(e["id"].get<int>());
    CHECK(e["residual"].get<double>() <= 1e-12);
  }
  CHECK(ids.size() >= 2);
  CHECK_THROWS_AS(run(cmd_soliton, R"({"flow": {"k": 3, "C": 0.5}})", opt), ConfigError);
}

TEST_CASE("repeated runs are byte-identical") {
  CommandOptions opt;
  opt.format = "json";
  const std::string cfg = R"({"soliton": {"family": "trig", "C": 1.25, "R": 1.5}})";
  CHECK(run(cmd_soliton, cfg, opt).out == run(cmd_soliton, cfg, opt).out);
  CHECK(run(cmd_flow, separable(0.2)).out == run(cmd_flow, separable(0.2)).out);
}

TEST_CASE("sweep output does not depend on the worker count") {
  const std::string cfg = R"({
    "grid": {"n": 33, "r_min": 0, "r_max": 3, "topology": "interval"},
    "soliton": {"C": 1, "R": 0},
    "sweep": {"soliton": {"C": [1, 1.25, 2.5], "R": [0.5, 1.5, 3]}}
  })";
  std::vector<fs::path> dirs;
  std::vector<std::string> stdouts;
  for (unsigned w : {1u, 3u, 8u}) {
    CommandOptions opt;
    opt.workers = w;
    dirs.push_back(fresh_dir("sweep" + std::to_string(w)));
    opt.out_dir = dirs.back().string();
    const Run r = run(cmd_sweep, cfg, opt);
    CHECK(r.code == kOk);
    stdouts.push_back(r.out);
  }
  CHECK(stdouts[0] == stdouts[1]);
  CHECK(stdouts[0] == stdouts[2]);
  const Json doc = Json::parse(stdouts[0]);
  REQUIRE(doc["runs"].size() == 9);
  // Last axis varies fastest.
  CHECK(doc["runs"][1]["params"]["C"] == 1.0);
  CHECK(doc["runs"][1]["params"]["R"] == 1.5);
  for (std::size_t i = 0; i < 9; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu.csv", i);
    const std::string ref = slurp(dirs[0] / name);
    CHECK_FALSE(ref.empty());
    CHECK(slurp(dirs[1] / name) == ref);
    CHECK(slurp(dirs[2] / name) == ref);
  }
  for (const auto& d : dirs) fs::remove_all(d);
}

TEST_CASE("sweep reports failed runs and exits 2") {
  const std::string cfg = R"({
    "grid": {"n": 9, "r_min": 0, "r_max": 1, "topology": "interval"},
    "soliton": {"C": 1, "R": 1},
    "sweep": {"soliton": {"R": [1, -1]}}
  })";
  CommandOptions opt;
  const fs::path d = fresh_dir("sweep_fail");
  opt.out_dir = d.string();
  const Run r = run(cmd_sweep, cfg, opt);
  CHECK(r.code == kNumerical);
  const Json doc = Json::parse(r.out);
  CHECK_FALSE(doc["runs"][0].contains("error"));
  CHECK(doc["runs"][1].contains("error"));
  CHECK(fs::exists(d / "run_0000.csv"));
  CHECK_FALSE(fs::exists(d / "run_0001.csv"));
  fs::remove_all(d);
}

TEST_CASE("verify report renderings agree") {
  const Report rep = run_suite("cy-soliton");
  CHECK(rep.all_pass());
  const Json j = rep.to_json(false);
  const std::string table = rep.to_table(false);
  REQUIRE(j["checks"].size() == rep.checks.size());
  for (const Json& c : j["checks"]) {
    const std::string name = c["name"];
    const std::size_t at = table.find(name);
    REQUIRE(at != std::string::npos);
    const std::string line = table.substr(at, table.find('\n', at) - at);
    CHECK(line.find(c["status"].get<std::string>() == "pass" ? "PASS" : "FAIL") != std::string::npos);
  }
  CHECK(table.find("elapsed") == std::string::npos);
}

TEST_CASE("fault injection fails exactly the named check") {
  const Report rep = run_suite("nk-soliton", "catalog-residual");
  for (const CheckResult& c : rep.checks) CHECK(c.pass == (c.name != "catalog-residual"));
  CHECK_THROWS_AS(run_suite("nk-soliton", "no-such-check"), ConfigError);
  CHECK_THROWS_AS(run_suite("no-such-suite"), ConfigError);
}
