#pragma once

// Soliton ODE systems of the modified coflow in the G = 1 gauge, with
// vector field X = l(r) d/dr, and their explicit solutions.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "g2flow/numerics.hpp"

namespace g2flow {

struct SolitonParams {
  double C = 0.0;
  double mu = 0.0;
  double k = 2.0;
};

struct SolitonState {
  double alpha = 0.0;
  double beta = 0.0;
  double l = 0.0;
};

struct SolitonRates {
  double alpha = 0.0;
  double beta = 0.0;
  double l = 0.0;
  /// k = 1: the alpha equation degenerates to the constraint alpha l = 0 and
  /// `alpha` is NaN.
  bool constraint_only = false;
};

/// Default |l| below which the soliton systems are treated as constraints.
inline constexpr double kLZeroTolerance = 1e-12;

/// Soliton system for general k, solved for (alpha', beta', l'):
///   l'    = (1-k) a^2 + 3 b^2 + 6k a b + kC a - mu
///   beta' = -(3(1-2k) b^2 + (k-1) a b - kC b - mu)(a + b) / l
///   alpha'= a l / (k-1) + 6 beta'
/// Throws SingularAtLZero when |l| <= l_tol.
SolitonRates soliton_rhs_general_k(const SolitonState& s, const SolitonParams& p,
                                   double l_tol = kLZeroTolerance);
/// The k = 2 system (p.k is ignored).
SolitonRates soliton_rhs_nk(const SolitonState& s, const SolitonParams& p,
                            double l_tol = kLZeroTolerance);

/// Calabi-Yau system (beta = 0, mu = 0): l' = -alpha^2 + 2C alpha, alpha' = alpha l.
struct CYRates {
  double alpha;
  double l;
};
CYRates cy_soliton_rhs(double alpha, double l, double C);

/// R^2 = l^2 + (alpha - 2C)^2, a first integral of cy_soliton_rhs.
double first_integral_R2(double alpha, double l, double C);

enum class CYKind { Parabolic, Hyperbolic, Trigonometric };
std::string to_string(CYKind k);

/// A global solution of the Calabi-Yau system through (alpha, l) =
/// (2C + sign R, 0) at r = r0, with theta(r0) = theta0. Parabolic solutions
/// (R = 2|C|) pass through (4C, 0) and ignore `sign`.
struct CYFamily {
  CYKind kind;
  double C;
  double R;
  double r0 = 0.0;
  double theta0 = 0.0;
  int sign = 1;

  /// Classifies by R^2 - 4C^2 with relative tolerance 1e-12. Throws DomainError
  /// for R < 0, |sign| != 1, or the trivial R = C = 0.
  static CYFamily make(double C, double R, double r0 = 0.0, double theta0 = 0.0,
                       int sign = 1);
  /// Q with Q^2 = |R^2 - 4C^2|; 0 for Parabolic.
  double Q() const;
  /// Value of alpha at r0.
  double alpha0() const;
};

struct CYPoint {
  double alpha;
  double l;
  double theta;
};

/// Closed-form solution at r. theta is continuous in r; with
/// principal_branch the Trigonometric theta is the raw 2 arctan(k tan(.)).
CYPoint cy_closed_form(const CYFamily& f, double r, bool principal_branch = false);

struct CYPeriodicity {
  bool periodic = false;           // numerical sample-and-compare verdict
  double Q = 0.0;
  std::optional<long> n;           // Q = n, an integer
  bool q_is_2n = false;            // reading "Q = 2n"
  bool q_squared_is_2n = false;    // reading "Q^2 = 2n"
  double max_mismatch = 0.0;       // max over samples of |f(r + L) - f(r)|
};

/// Whether alpha, l and e^{i theta} of the Trigonometric family are periodic
/// with period `circumference`, decided by sampling. R^2 >= 4C^2 is reported
/// as not periodic.
CYPeriodicity cy_periodicity(double C, double R, double circumference = 6.283185307179586,
                             double tol = 1e-10);

/// Equation residuals for a soliton. The jet carries the derivatives the
/// equations need.
struct SolitonJet {
  double alpha = 0.0, beta = 0.0, l = 0.0;
  double dalpha = 0.0, dbeta = 0.0, dl = 0.0, ddbeta = 0.0;
};

/// Max absolute value over the soliton equations in cleared form
///   l' - ((1-k) a^2 + 3 b^2 + 6k a b + kC a - mu)
///   (k-1)(a - 6b)' - a l
///   (3(1-2k) b^2 + (k-1) a b - kC b - mu)(a + b) + b' l
///   b'^2 - b''(a + b) + b'(a' + b') - a b (a + b)^2      (co-closed condition)
/// For lambda = 0, |beta| is included as well. The co-closed condition is
/// dropped when include_coclosed is false.
double residual(const SolitonJet& j, const SolitonParams& p, double lambda,
                bool include_coclosed = true);
/// Field version: derivatives by diff, maximum over the grid.
double residual(const Field& alpha, const Field& beta, const Field& l,
                const SolitonParams& p, double lambda, bool include_coclosed = true);

/// Constant-in-r soliton data of the nearly-Kaehler k = 2 system.
struct NKCatalogEntry {
  int id;
  /// nullopt: arbitrary.
  std::optional<double> alpha;
  std::optional<double> beta;
  /// l = l0 + l_slope r with l0 arbitrary (l_arbitrary) or 0.
  bool l_arbitrary;
  double l_slope;
  double mu;
  std::string validity;
  std::string branch;  // root label, e.g. "+" / "-"
  /// |a b (a + b)^2|: the co-closed condition evaluated on the constants.
  /// Nonzero only for entry 5 off its special values, whose constants solve
  /// the soliton system but not the co-closed condition.
  double coclosed_defect = 0.0;
};

/// Every entry valid at (C, mu), with concrete values.
std::vector<NKCatalogEntry> nk_constant_catalog(double C, double mu);
/// Residual of the soliton system (co-closed condition excluded) for an
/// entry, evaluated with l0 = l_sample and arbitrary alpha/beta replaced by 0.
double catalog_residual(const NKCatalogEntry& e, double C, double l_sample = 0.0);

/// F = a l^2 + 12(b^3 + 6 a b^2 - (a^2 - 2C a + mu) b), conserved when alpha
/// is constant.
double nk_conserved_F(const SolitonState& s, double C, double mu);
/// The NK system reduced to constant alpha: beta' = -alpha l / 6 and l' as usual.
struct ConstantAlphaRates {
  double beta;
  double l;
};
ConstantAlphaRates constant_alpha_rhs(double alpha, double beta, double l, double C, double mu);

/// Solutions of the l = 0 constant equations of the k = 2 system located
/// by scanning (alpha, beta) in [-box, box]^2 with spacing delta. Grid hits
/// are clustered and each cluster is polished by Newton's method; clusters
/// where Newton fails are returned unpolished.
std::vector<std::pair<double, double>> l_zero_grid_search(double C, double mu,
                                                          double box = 5.0,
                                                          double delta = 1e-3);

/// The Calabi-Yau soliton found by Karigiannis, McKay and Tsui:
/// l = b (1 - c^2 e^{2br}) / (1 + c^2 e^{2br}), theta = 2 arctan(c e^{br}).
struct KMTPoint {
  double l;
  double theta;
  double alpha;  // theta'
};
KMTPoint kmt_reduction(double b, double c, double r);
/// The Hyperbolic C = 0 family reproducing kmt_reduction(b, c, .). Throws
/// DomainError for b = 0 or c = 0 (constant solutions).
CYFamily kmt_family(double b, double c);

/// Numerical soliton trajectory.
struct SolitonSample {
  double r;
  double alpha;
  double beta;
  double l;
  double theta;
  double R2;  // first integral (Calabi-Yau mode), NaN otherwise
};

struct SolitonSolution {
  std::vector<SolitonSample> samples;
  double max_R2_drift = 0.0;  // Calabi-Yau mode
  OdeStats stats;
};

/// Integrates cy_soliton_rhs (lambda = 0; beta must be 0 and mu is forced
/// to 0) or the general-k system (lambda != 0) together with theta' = alpha
/// from r_span.first to r_span.second. `theta0` is theta at the start.
/// `output` lists requested r values (empty: every accepted step).
/// Throws SingularAtLZero when the nearly-Kaehler trajectory reaches l = 0.
SolitonSolution solve_soliton(const SolitonState& ics, const SolitonParams& p,
                              double lambda, std::pair<double, double> r_span,
                              const StepControl& ctl = {}, double theta0 = 0.0,
                              const std::vector<double>& output = {});

/// Rows: r, alpha, l, theta, R2.
void write_phase_portrait_csv(std::ostream& out, const SolitonSolution& s);

}  // namespace g2flow
