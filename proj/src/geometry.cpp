#include "g2flow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "g2flow/errors.hpp"

namespace g2flow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_to_pi(double x) { return std::remainder(x, kTwoPi); }

double torsion_scale(const TorsionABC& t) {
  return std::max({1.0, t.alpha.max_abs(), t.beta.max_abs(), t.gamma.max_abs()});
}

void require_torsion_grid(const TorsionABC& t) {
  require_same_grid(t.alpha, t.beta, "torsion");
  require_same_grid(t.alpha, t.gamma, "torsion");
}

std::size_t nearest_node(const Grid& g, double r) {
  const double s = std::round((r - g.r_min()) / g.spacing());
  return static_cast<std::size_t>(
      std::clamp(s, 0.0, static_cast<double>(g.size() - 1)));
}

// Continuous phase from (sin, cos) samples.
Field unwrap_phase(const Grid& grid, const std::vector<double>& s,
                   const std::vector<double>& c) {
  Field theta(grid);
  theta[0] = std::atan2(s[0], c[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double raw = std::atan2(s[i], c[i]);
    theta[i] = theta[i - 1] + wrap_to_pi(raw - theta[i - 1]);
  }
  return theta;
}

int infer_winding(const Field& theta) {
  const Grid& g = theta.grid();
  if (!g.periodic()) return 0;
  const std::size_t n = g.size();
  // Continue the last sample across the seam onto the first.
  const double across = theta[n - 1] + wrap_to_pi(theta[0] - theta[n - 1]);
  return static_cast<int>(std::lround((across - theta[0]) / kTwoPi));
}

}  // namespace

WarpedProfile::WarpedProfile(Field G_, Field h_, Field theta_, SU3Background bg,
                             int winding)
    : G(std::move(G_)),
      h(std::move(h_)),
      theta(std::move(theta_)),
      background(bg),
      theta_winding(winding) {
  validate();
}

double WarpedProfile::theta_jump() const noexcept {
  return grid().periodic() ? kTwoPi * theta_winding : 0.0;
}

void WarpedProfile::validate() const {
  require_same_grid(G, h, "profile");
  require_same_grid(G, theta, "profile");
  if (!G.all_finite() || !h.all_finite() || !theta.all_finite())
    throw InvalidArgument("profile: non-finite samples");
  if (!std::isfinite(background.lambda))
    throw InvalidArgument("profile: lambda must be finite");
  if (!(G.min() > 0.0)) throw InvalidArgument("profile: G must be positive");
  if (!(h.min() > 0.0) && !(h.max() < 0.0))
    throw InvalidArgument("profile: h must be nonzero with a single sign");
  if (theta_winding != 0 && !grid().periodic())
    throw InvalidArgument("profile: theta winding requires a circle grid");
}

TorsionABC compute_abc(const WarpedProfile& p) {
  p.validate();
  const Grid& g = p.grid();
  const double lambda = p.lambda();
  const Field dtheta = diff(p.theta, p.theta_jump());
  const Field dh = diff(p.h);
  Field alpha(g), beta(g), gamma(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    alpha[i] = dtheta[i] / p.G[i];
    // Exactly zero on a Calabi-Yau background.
    beta[i] = lambda == 0.0 ? 0.0 : lambda * std::sin(p.theta[i]) / p.h[i];
    gamma[i] = dh[i] / p.h[i] +
               (lambda == 0.0 ? 0.0 : lambda * p.G[i] * std::cos(p.theta[i]) / p.h[i]);
  }
  return {std::move(alpha), std::move(beta), std::move(gamma)};
}

TorsionComponents torsion_components(const TorsionABC& t) {
  require_torsion_grid(t);
  const Grid& g = t.grid();
  Field tau1(g), tau7(g), tau27(g), trace(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = t.alpha[i], b = t.beta[i];
    trace[i] = a - 6.0 * b;
    tau1[i] = trace[i] / 7.0;
    tau7[i] = -t.gamma[i];
    tau27[i] = (a + b) / 7.0;
  }
  return {std::move(tau1), std::move(tau7), std::move(tau27), std::move(trace)};
}

FullTorsion full_torsion(const TorsionABC& t, const Field& G) {
  require_torsion_grid(t);
  require_same_grid(t.alpha, G, "full_torsion");
  if (!(G.min() > 0.0)) throw InvalidArgument("full_torsion: G must be positive");
  const Grid& g = t.grid();
  Field diag_6(g), j6(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    diag_6[i] = -t.beta[i];
    j6[i] = -t.gamma[i] / G[i];
  }
  return {t.alpha, std::move(diag_6), std::move(j6)};
}

Field FullTorsion::trace() const {
  Field tr(diag_r.grid());
  for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = diag_r[i] + 6.0 * diag_6[i];
  return tr;
}

TorsionClass torsion_class(const TorsionABC& t, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("torsion_class: tol must be positive");
  require_torsion_grid(t);
  const std::size_t n = t.grid().size();
  double max_sum = 0.0, max_trace = 0.0;
  double tau1_min = INFINITY, tau1_max = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = t.alpha[i], b = t.beta[i];
    max_sum = std::max(max_sum, std::abs(a + b));
    max_trace = std::max(max_trace, std::abs(a - 6.0 * b));
    const double tau1 = (a - 6.0 * b) / 7.0;
    tau1_min = std::min(tau1_min, tau1);
    tau1_max = std::max(tau1_max, tau1);
  }
  TorsionClass c;
  c.co_closed = t.gamma.max_abs() <= tol;
  c.torsion_free = c.co_closed && t.alpha.max_abs() <= tol && t.beta.max_abs() <= tol;
  c.closed = c.torsion_free;
  c.nearly_parallel = c.co_closed && max_sum <= tol && (tau1_max - tau1_min) <= tol;
  c.pure_27 = c.co_closed && max_trace <= tol;
  return c;
}

TorsionClass torsion_class_relative(const TorsionABC& t, double rel_tol) {
  return torsion_class(t, rel_tol * torsion_scale(t));
}

TorsionABC conformal_transform(const TorsionABC& t, const Field& f,
                               double min_abs_factor) {
  require_torsion_grid(t);
  require_same_grid(t.alpha, f, "conformal_transform");
  if (!f.all_finite() || f.min_abs() < min_abs_factor)
    throw ZeroConformalFactor("conformal factor vanishes on the grid");
  if (f.min() < 0.0 && f.max() > 0.0)
    throw ZeroConformalFactor("conformal factor changes sign between grid nodes");
  const Field df = diff(f);
  const Grid& g = t.grid();
  Field a(g), b(g), c(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    a[i] = t.alpha[i] / f[i];
    b[i] = t.beta[i] / f[i];
    c[i] = df[i] / f[i] + t.gamma[i];
  }
  return {std::move(a), std::move(b), std::move(c)};
}

GaugeFixed gauge_fix_gamma(const TorsionABC& t, double r0) {
  require_torsion_grid(t);
  const Grid& g = t.grid();
  const Field integral = quadrature(t.gamma, r0);
  Field f(g), a(g), b(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f[i] = std::exp(-integral[i]);
    a[i] = t.alpha[i] / f[i];
    b[i] = t.beta[i] / f[i];
  }
  return {{std::move(a), std::move(b), Field::constant(g, 0.0)}, std::move(f)};
}

WarpedProfile reconstruct_profile(const TorsionABC& t, const SU3Background& bg,
                                  double h0, double r0,
                                  std::optional<double> theta_ref) {
  require_torsion_grid(t);
  const double lambda = bg.lambda;
  if (lambda == 0.0 || !std::isfinite(lambda))
    throw DegenerateTorsion("reconstruct_profile needs a nearly-Kaehler background (lambda != 0)");
  if (h0 == 0.0 || !std::isfinite(h0))
    throw InvalidArgument("reconstruct_profile: h0 must be nonzero");

  const Grid& g = t.grid();
  const std::size_t n = g.size();
  const double zero_tol = 1e-12 * torsion_scale(t);

  const GaugeFixed fixed = gauge_fix_gamma(t, r0);
  const Field& a = fixed.torsion.alpha;
  const Field& b = fixed.torsion.beta;
  if (a.min_abs() <= zero_tol)
    throw DegenerateTorsion("alpha vanishes on the grid; use reconstruct_degenerate");
  if (b.min_abs() <= zero_tol)
    throw DegenerateTorsion("beta vanishes on the grid; use reconstruct_degenerate");
  if (!(b.min() > 0.0) && !(b.max() < 0.0))
    throw DegenerateTorsion("beta changes sign on the grid");

  // h'/h = -beta'/(alpha + beta).
  const Field db = diff(b);
  Field log_rate(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double sum = a[i] + b[i];
    if (std::abs(sum) <= zero_tol)
      throw DegenerateTorsion("alpha + beta vanishes on the grid; use reconstruct_degenerate");
    log_rate[i] = -db[i] / sum;
  }
  const Field log_h = quadrature(log_rate, r0);

  Field G(g), h(g);
  std::vector<double> sin_t(n), cos_t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = h0 * std::exp(log_h[i]);
    const double dh = hi * log_rate[i];
    const double radicand = lambda * lambda - hi * hi * b[i] * b[i];
    if (!(radicand > 0.0))
      throw NegativeRadicand("lambda^2 - h^2 beta^2 <= 0 at r=" + std::to_string(g.node(i)));
    const double Gi = std::abs(dh) / std::sqrt(radicand);
    if (!(Gi > 0.0))
      throw DegenerateTorsion("h' vanishes at r=" + std::to_string(g.node(i)) +
                              " so G is undetermined");
    sin_t[i] = hi * b[i] / lambda;
    cos_t[i] = -dh / (lambda * Gi);
    // Undo the conformal rescaling: G~ = f G, h~ = f h.
    G[i] = Gi / fixed.factor[i];
    h[i] = hi / fixed.factor[i];
  }

  Field theta = unwrap_phase(g, sin_t, cos_t);
  if (theta_ref) {
    const std::size_t i0 = nearest_node(g, r0);
    const double shift = kTwoPi * std::round((*theta_ref - theta[i0]) / kTwoPi);
    for (std::size_t i = 0; i < n; ++i) theta[i] += shift;
  }
  const int winding = infer_winding(theta);
  return WarpedProfile(std::move(G), std::move(h), std::move(theta), bg, winding);
}

std::string to_string(DegenerateBranch b) {
  switch (b) {
    case DegenerateBranch::BetaZero: return "beta_zero";
    case DegenerateBranch::AlphaZero: return "alpha_zero";
    case DegenerateBranch::AlphaPlusBetaZero: return "alpha_plus_beta_zero";
  }
  return "unknown";
}

DegenerateResult reconstruct_degenerate(const TorsionABC& t, const SU3Background& bg,
                                        const DegenerateData& data, double tol) {
  require_torsion_grid(t);
  const double lambda = bg.lambda;
  if (lambda == 0.0)
    throw InvalidArgument("reconstruct_degenerate needs lambda != 0");
  const Grid& g = t.grid();
  const std::size_t n = g.size();
  const double abs_tol = tol * torsion_scale(t);

  const GaugeFixed fixed = gauge_fix_gamma(t, data.r0);
  const Field& a = fixed.torsion.alpha;
  const Field& b = fixed.torsion.beta;
  Field sum(g);
  for (std::size_t i = 0; i < n; ++i) sum[i] = a[i] + b[i];

  const bool a0 = a.max_abs() <= abs_tol;
  const bool b0 = b.max_abs() <= abs_tol;
  const bool s0 = sum.max_abs() <= abs_tol;

  Field G_free = data.G ? *data.G : Field::constant(g, 1.0);
  require_same_grid(G_free, a, "reconstruct_degenerate");
  if (!(G_free.min() > 0.0)) throw InvalidArgument("supplied G must be positive");

  DegenerateBranch branch;
  Field G(g), h(g), theta(g);
  if (b0) {
    if (!a0) throw NoBranchMatched("beta = 0 forces alpha = 0");
    branch = DegenerateBranch::BetaZero;
    const double th = data.theta0.value_or(0.0);
    if (std::abs(std::sin(th)) > 1e-12)
      throw InvalidArgument("beta = 0 branch needs theta0 a multiple of pi");
    // gamma = 0: h' = -lambda G cos(theta).
    const Field intG = quadrature(G_free, data.r0);
    for (std::size_t i = 0; i < n; ++i) {
      G[i] = G_free[i];
      theta[i] = th;
      h[i] = data.h0 - lambda * std::cos(th) * intG[i];
    }
  } else if (a0) {
    branch = DegenerateBranch::AlphaZero;
    const double th = data.theta0.value_or(std::numbers::pi / 2);
    const double s = std::sin(th), c = std::cos(th);
    if (std::abs(s) <= 1e-12)
      throw NoBranchMatched("alpha = 0 with beta != 0 needs sin(theta0) != 0");
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] = th;
      h[i] = lambda * s / b[i];
    }
    if (std::abs(c) <= 1e-12) {
      G = G_free;
    } else {
      const Field dh = diff(h);
      for (std::size_t i = 0; i < n; ++i) G[i] = -dh[i] / (lambda * c);
      if (!(G.min() > 0.0))
        throw DegenerateTorsion("alpha = 0 branch gives non-positive G = -h'/(lambda cos theta)");
    }
  } else if (s0) {
    branch = DegenerateBranch::AlphaPlusBetaZero;
    if (a.max() - a.min() > abs_tol)
      throw NoBranchMatched("alpha + beta = 0 requires constant alpha");
    const double alpha = a[nearest_node(g, data.r0)];
    const double th0 = data.theta0.value_or(std::numbers::pi / 2);
    const Field intG = quadrature(G_free, data.r0);
    for (std::size_t i = 0; i < n; ++i) {
      G[i] = G_free[i];
      theta[i] = th0 + alpha * intG[i];
      h[i] = -(lambda / alpha) * std::sin(theta[i]);
    }
  } else {
    throw NoBranchMatched("no degenerate branch matches: alpha, beta and alpha + beta are all nonzero somewhere");
  }

  for (std::size_t i = 0; i < n; ++i) {
    G[i] /= fixed.factor[i];
    h[i] /= fixed.factor[i];
  }
  const int winding = infer_winding(theta);
  return {WarpedProfile(std::move(G), std::move(h), std::move(theta), bg, winding), branch};
}

NKTorsionFreeCheck nk_torsion_free(const WarpedProfile& p, double tol) {
  p.validate();
  NKTorsionFreeCheck out;
  const double lambda = p.lambda();
  if (lambda == 0.0) return out;
  const Field dtheta = diff(p.theta, p.theta_jump());
  const Field dh = diff(p.h);
  if (dtheta.max_abs() > tol) return out;
  for (std::size_t i = 0; i < p.theta.size(); ++i)
    if (std::abs(std::sin(p.theta[i])) > tol) return out;
  // gamma = 0 then reads h' = -lambda G cos(theta), with cos(theta) = +-1.
  for (int sign : {1, -1}) {
    bool ok = true;
    for (std::size_t i = 0; i < dh.size() && ok; ++i)
      ok = std::abs(dh[i] - sign * lambda * p.G[i]) <= tol &&
           std::abs(std::cos(p.theta[i]) + sign) <= tol;
    if (ok) {
      out.torsion_free = true;
      out.sign = sign;
      return out;
    }
  }
  return out;
}

}  // namespace g2flow
