#pragma once

// Warped-product G2-structures on N^6 x L described by profile functions
// (G, h, theta) over L, their torsion, conformal rescalings, and the inverse
// problem of recovering a profile from its torsion.

#include <optional>
#include <string>

#include "g2flow/numerics.hpp"

namespace g2flow {

/// SU(3)-structure class of N^6: d(omega) = -3 lambda Re(Omega),
/// d(Omega) = 2 i lambda omega^2. lambda = 0 is Calabi-Yau.
struct SU3Background {
  double lambda = 0.0;

  bool is_calabi_yau() const noexcept { return lambda == 0.0; }
};

/// phi = Re(h^3 e^{i theta} Omega) + G h^2 dr ^ omega, metric G^2 dr^2 + h^2 g_6.
///
/// theta is stored unwrapped. On a Circle grid it may wind: theta(r + L) =
/// theta(r) + 2 pi * theta_winding.
struct WarpedProfile {
  Field G;
  Field h;
  Field theta;
  SU3Background background;
  int theta_winding = 0;

  WarpedProfile(Field G_, Field h_, Field theta_, SU3Background bg,
                int winding = 0);

  const Grid& grid() const noexcept { return G.grid(); }
  double lambda() const noexcept { return background.lambda; }
  /// theta(r + L) - theta(r) on Circle grids, 0 otherwise.
  double theta_jump() const noexcept;

  /// Throws InvalidArgument unless G > 0, h has a single sign and is nonzero,
  /// all fields share one grid and are finite.
  void validate() const;
};

/// Torsion coordinates: alpha = theta'/G, beta = lambda sin(theta)/h,
/// gamma = h'/h + lambda G cos(theta)/h.
struct TorsionABC {
  Field alpha;
  Field beta;
  Field gamma;

  const Grid& grid() const noexcept { return alpha.grid(); }
};

/// tau_1, the coefficient in tau_7 = tau7_coeff dr, the scale of
/// tau_27 = tau27_scale * diag(6, -delta_6), and Tr T. tau_14 vanishes
/// identically for warped products.
struct TorsionComponents {
  Field tau1;
  Field tau7_coeff;
  Field tau27_scale;
  Field trace_T;
  static constexpr double tau14 = 0.0;
};

/// T^# = diag(diag_r, diag_6 delta_6) + j6_coeff J_6.
struct FullTorsion {
  Field diag_r;
  Field diag_6;
  Field j6_coeff;

  /// The skew (J_6) part vanishes within tol.
  bool is_symmetric(double tol) const noexcept { return j6_coeff.max_abs() <= tol; }
  /// Trace of T^#: the J_6 part is traceless.
  Field trace() const;
};

struct TorsionClass {
  bool torsion_free = false;
  bool closed = false;
  bool co_closed = false;
  bool nearly_parallel = false;
  bool pure_27 = false;
};

/// Default relative tolerance for classification predicates.
inline constexpr double kClassTolerance = 1e-9;

TorsionABC compute_abc(const WarpedProfile& p);
TorsionComponents torsion_components(const TorsionABC& t);
FullTorsion full_torsion(const TorsionABC& t, const Field& G);

/// Absolute tolerance `tol` on the listed quantities. Closed coincides with
/// torsion-free because tau_14 vanishes.
TorsionClass torsion_class(const TorsionABC& t, double tol);
/// torsion_class with tol = rel_tol * max(1, max |alpha|, |beta|, |gamma|).
TorsionClass torsion_class_relative(const TorsionABC& t,
                                    double rel_tol = kClassTolerance);

/// Torsion of f^3 phi: (alpha/f, beta/f, f'/f + gamma).
TorsionABC conformal_transform(const TorsionABC& t, const Field& f,
                               double min_abs_factor = 1e-12);

struct GaugeFixed {
  TorsionABC torsion;  // gamma set to exactly zero
  Field factor;        // f(r) = exp(-int_{r0}^r gamma)
};
GaugeFixed gauge_fix_gamma(const TorsionABC& t, double r0);

/// Recover (G, h, theta) from torsion with lambda != 0. A nonzero gamma is
/// first removed by gauge_fix_gamma and the conformal factor reapplied at the
/// end, so h(r0) = h0 either way.
///
/// theta is chosen continuous, with theta(r0) in (-pi, pi] unless
/// `theta_ref` is given, in which case the branch nearest theta_ref is used.
WarpedProfile reconstruct_profile(const TorsionABC& t, const SU3Background& bg,
                                  double h0, double r0,
                                  std::optional<double> theta_ref = std::nullopt);

/// Free data for the degenerate reconstruction branches.
struct DegenerateData {
  std::optional<Field> G;  // default G = 1
  /// Defaults: 0 for the beta = 0 branch (theta must be a multiple of pi),
  /// pi/2 otherwise.
  std::optional<double> theta0;
  double h0 = 1.0;
  double r0 = 0.0;
};

enum class DegenerateBranch { BetaZero, AlphaZero, AlphaPlusBetaZero };
std::string to_string(DegenerateBranch b);

struct DegenerateResult {
  WarpedProfile profile;
  DegenerateBranch branch;
};

/// Reconstruction when alpha, beta or alpha + beta vanishes identically
/// (within tol). Exactly one branch must match.
DegenerateResult reconstruct_degenerate(const TorsionABC& t,
                                        const SU3Background& bg,
                                        const DegenerateData& data = {},
                                        double tol = 1e-10);

/// Torsion-free check on a nearly-Kaehler background: sin(theta) = 0 and
/// h' = sign * lambda G, where gamma = 0 ties sign to cos(theta) = -sign.
/// Reports which sign matched (0 when neither).
struct NKTorsionFreeCheck {
  bool torsion_free = false;
  int sign = 0;
};
NKTorsionFreeCheck nk_torsion_free(const WarpedProfile& p, double tol);

}  // namespace g2flow
