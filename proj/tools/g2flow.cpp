// g2flow command-line front end. Exit codes: 0 ok, 1 usage/config,
// 2 numerical failure, 3 verification failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "g2flow/app/commands.hpp"
#include "g2flow/app/verify.hpp"
#include "g2flow/errors.hpp"

namespace {

using namespace g2flow::app;

struct Args {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::size_t stride = 0;
  bool catalog = false;
  unsigned workers = 1;
  std::string suite = "all";
  std::string fault;
  bool no_timing = false;
};

CommandOptions to_options(const Args& a) {
  CommandOptions o;
  if (!a.out.empty()) o.out_dir = a.out;
  o.format = a.format;
  if (a.stride > 0) o.snapshot_stride = a.stride;
  o.catalog = a.catalog;
  o.workers = a.workers;
  return o;
}

int run_verify(const Args& a) {
  if (a.format != "csv" && a.format != "json")
    throw ConfigError("verify: --format must be csv (table) or json");
  const Report rep = run_suite(a.suite, a.fault);
  if (a.format == "json")
    std::cout << rep.to_json(!a.no_timing).dump(2) << '\n';
  else
    std::cout << rep.to_table(!a.no_timing);
  for (const CheckResult& c : rep.checks)
    if (!c.pass) std::cerr << "FAILED " << c.suite << '/' << c.name << '\n';
  return rep.all_pass() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Warped G2-structures: torsion, Laplacian coflow and solitons"};
  app.require_subcommand(1);
  Args a;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", a.config, "JSON configuration file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory");
    sub->add_option("--format", a.format, "csv | json | svg")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
  };
  CLI::App* torsion = app.add_subcommand("torsion", "torsion of a profile");
  add_common(torsion, true);
  CLI::App* flow = app.add_subcommand("flow", "evolve a profile under the coflow");
  add_common(flow, true);
  flow->add_option("--snapshot-stride", a.stride, "keep every Nth accepted step")
      ->check(CLI::PositiveNumber);
  CLI::App* soliton = app.add_subcommand("soliton", "phase portrait or constant-solution catalog");
  add_common(soliton, true);
  soliton->add_flag("--catalog", a.catalog, "print the nearly-Kaehler constant catalog");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep over a base config");
  add_common(sweep, true);
  sweep->add_option("--workers", a.workers, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--snapshot-stride", a.stride, "keep every Nth accepted step (flow)")
      ->check(CLI::PositiveNumber);
  CLI::App* verify = app.add_subcommand("verify", "run built-in verification suites");
  verify->add_option("--suite", a.suite, "suite name")->check(CLI::IsMember(suite_names()));
  verify->add_option("--format", a.format, "csv (table) | json")
      ->check(CLI::IsMember({"csv", "json"}));
  verify->add_option("--inject-fault", a.fault, "perturb the named check (suite/name)");
  verify->add_flag("--no-timing", a.no_timing, "omit elapsed times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (verify->parsed()) return run_verify(a);
    const RunConfig cfg = load_run_config(a.config);
    const CommandOptions opt = to_options(a);
    if (torsion->parsed()) return cmd_torsion(cfg, opt, std::cout, std::cerr);
    if (flow->parsed()) return cmd_flow(cfg, opt, std::cout, std::cerr);
    if (soliton->parsed()) return cmd_soliton(cfg, opt, std::cout, std::cerr);
    return cmd_sweep(cfg, opt, std::cout, std::cerr);
  } catch (const g2flow::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const g2flow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
