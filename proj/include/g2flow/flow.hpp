#pragma once

// Modified Laplacian coflow  d psi/dt = Delta psi + k d((C - Tr T) phi)
// restricted to co-closed warped products, as a method-of-lines system in
// the profile functions (G, h, theta).

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "g2flow/geometry.hpp"
#include "g2flow/numerics.hpp"

namespace g2flow {

struct FlowParams {
  double k = 2.0;
  double C = 0.0;

  /// k > 1: the flow is weakly parabolic in the direction of the diffeomorphism orbits.
  bool well_posed_regime() const noexcept { return k > 1.0; }
};

struct FlowState {
  double t = 0.0;
  WarpedProfile profile;
};

/// Components of *(d psi / dt).
struct PsiDot {
  Field re1;  // Gdot/G + 3 hdot/h
  Field im1;  // thetadot
  Field re2;  // 4 hdot/h
};

PsiDot psi_dot_from_rates(const Field& G_dot, const Field& h_dot,
                          const Field& theta_dot, const WarpedProfile& p);

struct AbcDot {
  Field alpha_dot;
  Field beta_dot;
  Field gamma_dot;
};

/// Time derivatives of (alpha, beta, gamma) induced by arbitrary rates of
/// (G, h, theta). Divides by alpha + beta: SingularDenominator when
/// |alpha + beta| < 1e-13 max(|alpha|, |beta|, 1) at a node where the
/// numerator beta gamma + beta' is nonzero.
AbcDot abc_dot_from_rates(const Field& G_dot, const Field& h_dot,
                          const Field& theta_dot, const TorsionABC& t,
                          const WarpedProfile& p);

struct FlowRates {
  Field G_dot;
  Field theta_dot;
  Field h_dot;
};

/// Flow velocity of a co-closed profile. Throws NotCoClosed when
/// max |gamma| > co_closed_tol * max(1, |alpha|, |beta|).
FlowRates flow_rhs(const WarpedProfile& p, const FlowParams& params,
                   double co_closed_tol = 1e-6);

struct AbcRates {
  Field alpha_dot;
  Field beta_dot;
};

/// The same flow written for (alpha, beta) with Tr T = alpha - 6 beta.
/// SingularDenominator where alpha + beta underflows and (Tr T)' beta' != 0.
AbcRates abc_flow_rhs(const TorsionABC& t, const Field& G, const FlowParams& params);

/// Per-accepted-step diagnostics.
struct FlowDiagnostics {
  double t;
  double max_abs_alpha;
  double max_abs_beta;
  double max_abs_gamma;
  double min_G;
  /// Nodes where alpha + beta changed sign since the previous record.
  std::size_t alpha_plus_beta_crossings;
};

enum class BlowUpReason { StepSizeUnderflow, TorsionCap, MetricCollapse };
std::string to_string(BlowUpReason r);

struct BlowUp {
  double t_last;  // last accepted time
  BlowUpReason reason;
};

struct FlowOptions {
  /// Keep every stride-th accepted step as a snapshot (0: only the endpoints).
  std::size_t snapshot_stride = 0;
  /// Tolerance of the co-closed precondition on the initial data.
  double co_closed_tol = 1e-6;
  /// Stop with a blow-up once max(|alpha|, |beta|) exceeds torsion_cap times
  /// its initial value (floored at 1), or min G drops below G_floor times its
  /// initial value. Explicit steps shrink like G^2 as G -> 0, so waiting for
  /// dt_min alone can take millions of steps.
  double torsion_cap = 1e3;
  double G_floor = 1e-2;
};

struct FlowResult {
  std::vector<FlowState> snapshots;  // always includes t0 and the last state
  std::vector<FlowDiagnostics> diagnostics;
  std::optional<BlowUp> blow_up;
  OdeStats stats;
};

/// Integrate the flow from state.t to t_end. A step-size collapse ends the
/// run with blow_up set instead of throwing; other failures propagate.
FlowResult evolve(const FlowState& state, const FlowParams& params, double t_end,
                  const StepControl& ctl = {}, const FlowOptions& options = {});

/// The (alpha, beta, G) route of the flow, used to cross-check evolve.
struct AbcFlowState {
  double t = 0.0;
  Field alpha;
  Field beta;
  Field G;
};
AbcFlowState evolve_abc(const AbcFlowState& state, const FlowParams& params,
                        double t_end, const StepControl& ctl = {});

/// Separable Calabi-Yau solution with G_r = 1, theta_r = sqrt(lambda1) r:
/// G_t^2 = 1 - 2 lambda1 theta_t^2 t.
struct SeparableCY {
  double G;
  double theta;
  double alpha;
};
double separable_cy_blowup_time(double lambda1, double theta_t);
/// Throws BeyondBlowUp when t >= separable_cy_blowup_time(lambda1, theta_t).
SeparableCY separable_cy(double lambda1, double theta_t, double t, double r);

/// Initial profile for separable_cy on a circle of length 2 pi /
/// (sqrt(lambda1) |theta_t|), where theta winds once.
WarpedProfile separable_cy_profile(double lambda1, double theta_t, std::size_t n);

/// Rows: t, r, G, h, theta, alpha, beta, gamma, tau1, traceT.
void write_trajectory_csv(std::ostream& out, const std::vector<FlowState>& snapshots);

}  // namespace g2flow
