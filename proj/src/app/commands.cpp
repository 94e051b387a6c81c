#include "g2flow/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace g2flow::app {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw ConfigError((dir / name).string() + ": cannot open for writing");
  return f;
}

template <class Fill>
void write_file(const std::string& dir, const std::string& name, Fill&& fill) {
  std::ofstream f = open_output(dir, name);
  fill(f);
}

void require_format(const CommandOptions& opt, std::initializer_list<const char*> allowed,
                    const char* command) {
  if (std::none_of(allowed.begin(), allowed.end(), [&](const char* f) { return opt.format == f; }))
    throw ConfigError(std::string(command) + ": unsupported --format " + opt.format);
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  char buf[32];
  bool first = true;
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
    if (!first) out << ',';
    out << buf;
    first = false;
  }
  out << '\n';
}

Json class_json(const TorsionClass& c) {
  return {{"torsion_free", c.torsion_free}, {"closed", c.closed}, {"co_closed", c.co_closed},
          {"nearly_parallel", c.nearly_parallel}, {"pure_27", c.pure_27}};
}

void print_json(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

// ---- flow

FlowBlock flow_block_for_evolve(const RunConfig& cfg) {
  if (!cfg.profile) throw ConfigError("flow: a profile (lambda, grid, G, h, theta) is required");
  if (!cfg.flow) throw ConfigError("/flow: required");
  if (cfg.flow->mu != 0.0) throw ConfigError("/flow/mu: the flow has no mu; it is a soliton constant");
  return *cfg.flow;
}

Json flow_summary(const FlowBlock& fb, const FlowResult& res) {
  Json s = {{"k", fb.k},
            {"C", fb.C},
            {"t_end", fb.t_end},
            {"t_final", res.snapshots.back().t},
            {"accepted_steps", res.stats.accepted},
            {"rejected_steps", res.stats.rejected},
            {"snapshots", res.snapshots.size()}};
  if (res.blow_up)
    s["blow_up"] = {{"t_last", res.blow_up->t_last}, {"reason", to_string(res.blow_up->reason)}};
  else
    s["blow_up"] = nullptr;
  if (!res.diagnostics.empty()) {
    const FlowDiagnostics& d = res.diagnostics.back();
    s["final"] = {{"max_abs_alpha", d.max_abs_alpha}, {"max_abs_beta", d.max_abs_beta},
                  {"max_abs_gamma", d.max_abs_gamma}, {"min_G", d.min_G}};
  }
  return s;
}

FlowResult run_flow(const WarpedProfile& p, const FlowBlock& fb, const StepControl& ctl,
                    std::size_t stride) {
  FlowOptions fo;
  fo.snapshot_stride = stride;
  return evolve({0.0, p}, {fb.k, fb.C}, fb.t_end, ctl, fo);
}

// ---- soliton

Grid soliton_grid(const RunConfig& cfg, const CYFamily& f) {
  if (cfg.grid) return *cfg.grid;
  return Grid(201, f.r0 - 5.0, f.r0 + 5.0, Topology::Interval);
}

Json portrait_summary(const PhasePortrait& p) {
  const CYFamily& f = p.family;
  Json s = {{"family", to_string(f.kind)}, {"C", f.C},   {"R", f.R},
            {"Q", f.Q()},                  {"r0", f.r0}, {"theta0", f.theta0},
            {"sign", f.sign},              {"alpha0", f.alpha0()},
            {"max_R2_drift", p.solution.max_R2_drift},
            {"max_closed_form_error", p.max_closed_form_error}};
  if (f.kind == CYKind::Trigonometric) {
    const CYPeriodicity per = cy_periodicity(f.C, f.R);
    s["periodicity_2pi"] = {{"periodic", per.periodic},
                            {"n", per.n ? Json(*per.n) : Json(nullptr)},
                            {"q_is_2n", per.q_is_2n},
                            {"q_squared_is_2n", per.q_squared_is_2n},
                            {"max_mismatch", per.max_mismatch}};
  }
  return s;
}

std::string portrait_csv(const PhasePortrait& p) {
  std::ostringstream os;
  write_phase_portrait_csv(os, p.solution);
  return os.str();
}

std::string run_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04zu", i);
  return buf;
}

}  // namespace

PhasePortrait cy_phase_portrait(const CYFamily& f, const Grid& grid, const StepControl& ctl) {
  std::vector<double> fwd, bwd;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.node(i);
    (r >= f.r0 ? fwd : bwd).push_back(r);
  }
  if (grid.periodic()) fwd.push_back(grid.r_max());
  std::reverse(bwd.begin(), bwd.end());
  const SolitonState seed{f.alpha0(), 0.0, 0.0};
  const SolitonParams prm{f.C, 0.0};

  PhasePortrait out{f, {}, 0.0};
  if (!bwd.empty()) {
    SolitonSolution s = solve_soliton(seed, prm, 0.0, {f.r0, bwd.back()}, ctl, f.theta0, bwd);
    std::reverse(s.samples.begin(), s.samples.end());
    out.solution.samples = std::move(s.samples);
    out.solution.max_R2_drift = s.max_R2_drift;
    out.solution.stats = s.stats;
  }
  if (!fwd.empty()) {
    const double end = fwd.back() > f.r0 ? fwd.back() : f.r0 + 1.0;
    SolitonSolution s = solve_soliton(seed, prm, 0.0, {f.r0, end}, ctl, f.theta0, fwd);
    out.solution.samples.insert(out.solution.samples.end(), s.samples.begin(), s.samples.end());
    out.solution.max_R2_drift = std::max(out.solution.max_R2_drift, s.max_R2_drift);
    out.solution.stats.accepted += s.stats.accepted;
    out.solution.stats.rejected += s.stats.rejected;
    out.solution.stats.rhs_evals += s.stats.rhs_evals;
  }
  for (const SolitonSample& s : out.solution.samples) {
    const CYPoint c = cy_closed_form(f, s.r);
    out.max_closed_form_error = std::max(
        {out.max_closed_form_error, std::abs(s.alpha - c.alpha), std::abs(s.l - c.l),
         std::abs(s.theta - c.theta)});
  }
  return out;
}

void write_phase_portrait_svg(std::ostream& out, const PhasePortrait& p) {
  const auto& samples = p.solution.samples;
  double a_lo = 0, a_hi = 0, l_lo = 0, l_hi = 0;
  for (const SolitonSample& s : samples) {
    a_lo = std::min(a_lo, s.alpha);
    a_hi = std::max(a_hi, s.alpha);
    l_lo = std::min(l_lo, s.l);
    l_hi = std::max(l_hi, s.l);
  }
  // Pad and keep a nonzero extent so constant solutions still render.
  const double pa = std::max(0.05 * (a_hi - a_lo), 1e-3), pl = std::max(0.05 * (l_hi - l_lo), 1e-3);
  a_lo -= pa;
  a_hi += pa;
  l_lo -= pl;
  l_hi += pl;
  constexpr double W = 640, H = 480, M = 60;
  auto X = [&](double a) { return M + (a - a_lo) / (a_hi - a_lo) * (W - 2 * M); };
  auto Y = [&](double l) { return H - M - (l - l_lo) / (l_hi - l_lo) * (H - 2 * M); };
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  out << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"gray\"/>\n", M, Y(0), W - M, Y(0));
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"gray\"/>\n", X(0), M, X(0), H - M);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.3f\" y=\"%.3f\" font-size=\"14\">alpha</text>\n", W - M + 5, Y(0) + 4);
  out << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.3f\" y=\"%.3f\" font-size=\"14\">l</text>\n", X(0) - 4, M - 8);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.3f\" y=\"%.3f\" font-size=\"11\">%.4g</text>\n"
                "<text x=\"%.3f\" y=\"%.3f\" font-size=\"11\">%.4g</text>\n",
                M, H - M + 16, a_lo, W - M - 30, H - M + 16, a_hi);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"5\" y=\"%.3f\" font-size=\"11\">%.4g</text>\n"
                "<text x=\"5\" y=\"%.3f\" font-size=\"11\">%.4g</text>\n",
                H - M, l_lo, M + 4, l_hi);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.3f\" y=\"24\" font-size=\"15\">%s: C=%.6g R=%.6g sign=%d</text>\n", M,
                to_string(p.family.kind).c_str(), p.family.C, p.family.R, p.family.sign);
  out << buf;
  out << "<polyline fill=\"none\" stroke=\"navy\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", i ? " " : "", X(samples[i].alpha), Y(samples[i].l));
    out << buf;
  }
  out << "\"/>\n";
  std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"crimson\"/>\n",
                X(p.family.alpha0()), Y(0));
  out << buf;
  out << "</svg>\n";
}

Json catalog_json(double C, double mu) {
  Json arr = Json::array();
  for (const NKCatalogEntry& e : nk_constant_catalog(C, mu)) {
    Json j = {{"id", e.id},
              {"alpha", e.alpha ? Json(*e.alpha) : Json("arbitrary")},
              {"beta", e.beta ? Json(*e.beta) : Json("arbitrary")},
              {"l", e.l_arbitrary ? Json("arbitrary") : Json(0.0)},
              {"l_slope", e.l_slope},
              {"mu", e.mu},
              {"validity", e.validity},
              {"branch", e.branch},
              {"residual", catalog_residual(e, C)},
              {"coclosed_defect", e.coclosed_defect}};
    arr.push_back(std::move(j));
  }
  return {{"C", C}, {"mu", mu}, {"entries", std::move(arr)}};
}

int cmd_torsion(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  require_format(opt, {"csv", "json"}, "torsion");
  if (!cfg.profile) throw ConfigError("torsion: a profile (lambda, grid, G, h, theta) is required");
  const WarpedProfile& p = *cfg.profile;
  const TorsionABC t = compute_abc(p);
  const TorsionComponents c = torsion_components(t);
  const Json cls = class_json(torsion_class_relative(t));

  std::ostringstream csv;
  csv << "r,G,h,theta,alpha,beta,gamma,tau1,tau7_coeff,tau27_scale,traceT\n";
  for (std::size_t i = 0; i < p.grid().size(); ++i)
    write_row(csv, {p.grid().node(i), p.G[i], p.h[i], p.theta[i], t.alpha[i], t.beta[i], t.gamma[i],
                    c.tau1[i], c.tau7_coeff[i], c.tau27_scale[i], c.trace_T[i]});
  const Json summary = {{"class", cls}, {"n", p.grid().size()}, {"lambda", p.lambda()}};

  if (opt.out_dir) {
    write_file(*opt.out_dir, "torsion.csv", [&](std::ostream& f) { f << csv.str(); });
    write_file(*opt.out_dir, "torsion.json", [&](std::ostream& f) { print_json(f, summary); });
    print_json(out, summary);
  } else if (opt.format == "json") {
    print_json(out, summary);
  } else {
    out << csv.str();
    err << summary.dump() << '\n';
  }
  return kOk;
}

int cmd_flow(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  require_format(opt, {"csv", "json"}, "flow");
  const FlowBlock fb = flow_block_for_evolve(cfg);
  const FlowResult res = run_flow(*cfg.profile, fb, cfg.step, opt.snapshot_stride.value_or(0));
  const Json summary = flow_summary(fb, res);
  if (opt.out_dir) {
    write_file(*opt.out_dir, "trajectory.csv", [&](std::ostream& f) { write_trajectory_csv(f, res.snapshots); });
    write_file(*opt.out_dir, "summary.json", [&](std::ostream& f) { print_json(f, summary); });
    print_json(out, summary);
  } else if (opt.format == "json") {
    print_json(out, summary);
  } else {
    write_trajectory_csv(out, res.snapshots);
    err << summary.dump() << '\n';
  }
  return kOk;
}

int cmd_soliton(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.catalog) {
    require_format(opt, {"json", "csv"}, "soliton --catalog");
    if (!cfg.flow) throw ConfigError("soliton --catalog: a \"flow\" block with C and mu is required");
    if (cfg.flow->k != 2.0) throw ConfigError("/flow/k: the catalog exists for k = 2 only");
    const Json cat = catalog_json(cfg.flow->C, cfg.flow->mu);
    if (opt.out_dir) write_file(*opt.out_dir, "catalog.json", [&](std::ostream& f) { print_json(f, cat); });
    print_json(out, cat);
    return kOk;
  }
  require_format(opt, {"csv", "json", "svg"}, "soliton");
  if (!cfg.soliton) throw ConfigError("soliton: a \"soliton\" block is required (or pass --catalog)");
  if (cfg.profile) throw ConfigError("soliton: profile keys (lambda, G, h, theta) are not used here");
  const CYFamily f = cfg.soliton->make_family();
  const PhasePortrait p = cy_phase_portrait(f, soliton_grid(cfg, f), cfg.step);
  const Json summary = portrait_summary(p);
  if (opt.out_dir) {
    write_file(*opt.out_dir, "phase_portrait.csv", [&](std::ostream& f) { f << portrait_csv(p); });
    write_file(*opt.out_dir, "phase_portrait.svg", [&](std::ostream& f) { write_phase_portrait_svg(f, p); });
    write_file(*opt.out_dir, "summary.json", [&](std::ostream& f) { print_json(f, summary); });
    print_json(out, summary);
  } else if (opt.format == "json") {
    Json doc = summary;
    Json rows = Json::array();
    for (const SolitonSample& s : p.solution.samples) rows.push_back({s.r, s.alpha, s.l, s.theta, s.R2});
    doc["columns"] = {"r", "alpha", "l", "theta", "R2"};
    doc["samples"] = std::move(rows);
    print_json(out, doc);
  } else if (opt.format == "svg") {
    write_phase_portrait_svg(out, p);
  } else {
    out << portrait_csv(p);
    err << summary.dump() << '\n';
  }
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  if (!cfg.sweep) throw ConfigError("/sweep: required");
  if (!opt.out_dir) throw ConfigError("sweep: --out DIR is required (one file per run)");
  if (opt.workers == 0) throw ConfigError("--workers must be at least 1");
  const SweepBlock& sw = *cfg.sweep;
  const std::size_t total = sw.size();

  struct RunOutput {
    Json row;
    std::string csv;
    bool failed = false;
  };
  std::vector<RunOutput> results(total);

  auto run_one = [&](std::size_t index) {
    RunOutput& r = results[index];
    Json params = Json::object();
    std::size_t rem = index;
    // Last axis varies fastest.
    std::vector<std::pair<std::string, double>> picks(sw.axes.size());
    for (std::size_t a = sw.axes.size(); a-- > 0;) {
      const auto& [name, values] = sw.axes[a];
      picks[a] = {name, values[rem % values.size()]};
      rem /= values.size();
    }
    for (const auto& [name, v] : picks) params[name] = v;
    r.row = {{"index", index}, {"run", run_name(index)}, {"params", params}};
    try {
      if (sw.target == "soliton") {
        SolitonBlock b = *cfg.soliton;
        b.family.reset();  // the family follows from each (C, R)
        for (const auto& [name, v] : picks) {
          if (name == "C") b.C = v;
          if (name == "R") b.R = v;
          if (name == "r0") b.r0 = v;
          if (name == "theta0") b.theta0 = v;
        }
        const CYFamily f = b.make_family("/sweep/soliton");
        const PhasePortrait p = cy_phase_portrait(f, soliton_grid(cfg, f), cfg.step);
        r.csv = portrait_csv(p);
        r.row["result"] = portrait_summary(p);
      } else {
        FlowBlock fb = flow_block_for_evolve(cfg);
        for (const auto& [name, v] : picks) {
          if (name == "k") fb.k = v;
          if (name == "C") fb.C = v;
          if (name == "t_end") fb.t_end = v;
        }
        const FlowResult res = run_flow(*cfg.profile, fb, cfg.step, opt.snapshot_stride.value_or(0));
        std::ostringstream os;
        write_trajectory_csv(os, res.snapshots);
        r.csv = os.str();
        r.row["result"] = flow_summary(fb, res);
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.row["error"] = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) run_one(i);
  };
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(opt.workers, total));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Json rows = Json::array();
  bool any_failed = false;
  for (std::size_t i = 0; i < total; ++i) {
    if (!results[i].failed) write_file(*opt.out_dir, run_name(i) + ".csv", [&](std::ostream& f) { f << results[i].csv; });
    any_failed = any_failed || results[i].failed;
    rows.push_back(std::move(results[i].row));
  }
  const Json doc = {{"target", sw.target}, {"runs", std::move(rows)}};
  write_file(*opt.out_dir, "sweep.json", [&](std::ostream& f) { print_json(f, doc); });
  print_json(out, doc);
  if (any_failed) err << "sweep: some runs failed; see \"error\" entries\n";
  return any_failed ? kNumerical : kOk;
}

}  // namespace g2flow::app
