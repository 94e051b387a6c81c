#pragma once

// Subcommands of the g2flow executable. Each returns a process exit code and
// writes only to the given streams or below out_dir.

#include <iosfwd>
#include <optional>
#include <string>

#include "g2flow/app/config.hpp"

namespace g2flow::app {

/// Exit-code contract.
enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kVerifyFailed = 3 };

struct CommandOptions {
  std::optional<std::string> out_dir;
  std::string format = "csv";  // csv | json | svg (soliton only)
  std::optional<std::size_t> snapshot_stride;
  bool catalog = false;
  unsigned workers = 1;
};

int cmd_torsion(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_flow(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_soliton(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt, std::ostream& out, std::ostream& err);

/// Catalog JSON: entries with id, values, validity, residual.
Json catalog_json(double C, double mu);

/// Calabi-Yau soliton sampled on a grid by integrating from the seed at r0
/// in both directions.
struct PhasePortrait {
  CYFamily family;
  SolitonSolution solution;
  double max_closed_form_error = 0.0;
};
PhasePortrait cy_phase_portrait(const CYFamily& f, const Grid& grid, const StepControl& ctl);
/// Minimal static rendering of the (alpha, l) curve with axes.
void write_phase_portrait_svg(std::ostream& out, const PhasePortrait& p);

}  // namespace g2flow::app
