#include "g2flow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "g2flow/errors.hpp"

namespace g2flow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// num / (a + b), where a vanishing numerator short-circuits the check.
double over_sum(double num, double a, double b, const Grid& g, std::size_t i) {
  if (num == 0.0) return 0.0;
  const double s = a + b;
  if (std::abs(s) < 1e-13 * std::max({std::abs(a), std::abs(b), 1.0}))
    throw SingularDenominator("alpha + beta vanishes at r=" + std::to_string(g.node(i)));
  return num / s;
}

// Logarithmic rates Gdot/G, hdot/h and thetadot from alpha, beta and G.
struct LogRates {
  std::vector<double> G, h, theta;
};

LogRates log_rates(const Field& alpha, const Field& beta, const Field& G,
                   const FlowParams& prm) {
  const Grid& g = alpha.grid();
  const std::size_t n = g.size();
  const double k = prm.k, C = prm.C;
  Field trace(g);
  for (std::size_t i = 0; i < n; ++i) trace[i] = alpha[i] - 6.0 * beta[i];
  const Field dtrace = diff(trace);
  LogRates out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = alpha[i], b = beta[i];
    out.G[i] = (1.0 - k) * a * a + 3.0 * b * b + 6.0 * k * a * b + k * C * a;
    out.h[i] = 3.0 * (1.0 - 2.0 * k) * b * b + (k - 1.0) * a * b - k * C * b;
    out.theta[i] = (k - 1.0) * dtrace[i] / G[i];
  }
  return out;
}

}  // namespace

PsiDot psi_dot_from_rates(const Field& G_dot, const Field& h_dot,
                          const Field& theta_dot, const WarpedProfile& p) {
  require_same_grid(G_dot, p.G, "psi_dot_from_rates");
  require_same_grid(h_dot, p.G, "psi_dot_from_rates");
  require_same_grid(theta_dot, p.G, "psi_dot_from_rates");
  const Grid& g = p.grid();
  Field re1(g), im1(g), re2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lg = G_dot[i] / p.G[i], lh = h_dot[i] / p.h[i];
    re1[i] = lg + 3.0 * lh;
    im1[i] = theta_dot[i];
    re2[i] = 4.0 * lh;
  }
  return {std::move(re1), std::move(im1), std::move(re2)};
}

AbcDot abc_dot_from_rates(const Field& G_dot, const Field& h_dot,
                          const Field& theta_dot, const TorsionABC& t,
                          const WarpedProfile& p) {
  require_same_grid(G_dot, p.G, "abc_dot_from_rates");
  require_same_grid(t.alpha, p.G, "abc_dot_from_rates");
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  Field lh(g);
  for (std::size_t i = 0; i < n; ++i) lh[i] = h_dot[i] / p.h[i];
  const Field dtheta_dot = diff(theta_dot);
  const Field dlh = diff(lh);
  const Field db = diff(t.beta);
  Field ad(g), bd(g), cd(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = t.alpha[i], b = t.beta[i], c = t.gamma[i], G = p.G[i];
    const double lg = G_dot[i] / G;
    // lambda G cos(theta) / h, eliminated through beta'.
    const double w = over_sum(b * c + db[i], a, b, g, i);
    ad[i] = dtheta_dot[i] / G - a * lg;
    bd[i] = theta_dot[i] / G * w - lh[i] * b;
    cd[i] = dlh[i] + (lg - lh[i]) * w - theta_dot[i] * G * b;
  }
  return {std::move(ad), std::move(bd), std::move(cd)};
}

FlowRates flow_rhs(const WarpedProfile& p, const FlowParams& params,
                   double co_closed_tol) {
  p.validate();
  const TorsionABC t = compute_abc(p);
  const double scale = std::max({1.0, t.alpha.max_abs(), t.beta.max_abs()});
  if (t.gamma.max_abs() > co_closed_tol * scale)
    throw NotCoClosed("flow_rhs: initial profile is not co-closed (max |gamma| = " +
                      std::to_string(t.gamma.max_abs()) + ")");
  const LogRates r = log_rates(t.alpha, t.beta, p.G, params);
  const Grid& g = p.grid();
  Field Gd(g), td(g), hd(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Gd[i] = p.G[i] * r.G[i];
    td[i] = r.theta[i];
    hd[i] = p.h[i] * r.h[i];
  }
  return {std::move(Gd), std::move(td), std::move(hd)};
}

AbcRates abc_flow_rhs(const TorsionABC& t, const Field& G, const FlowParams& params) {
  require_same_grid(t.alpha, t.beta, "abc_flow_rhs");
  require_same_grid(t.alpha, G, "abc_flow_rhs");
  const Grid& g = t.grid();
  const std::size_t n = g.size();
  const double k = params.k, C = params.C;
  Field trace(g);
  for (std::size_t i = 0; i < n; ++i) trace[i] = t.alpha[i] - 6.0 * t.beta[i];
  const Field d1 = diff(trace);
  const Field d2 = diff(d1);
  const Field dG = diff(G);
  const Field db = diff(t.beta);
  Field ad(g), bd(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = t.alpha[i], b = t.beta[i], Gi = G[i];
    const double inv_g2 = 1.0 / (Gi * Gi);
    ad[i] = (k - 1.0) * inv_g2 * (d2[i] - dG[i] / Gi * d1[i]) + (k - 1.0) * a * a * a -
            6.0 * k * b * a * a - 3.0 * b * b * a - k * C * a * a;
    bd[i] = (k - 1.0) * inv_g2 * over_sum(d1[i] * db[i], a, b, g, i) +
            (1.0 - k) * b * b * a + 3.0 * (2.0 * k - 1.0) * b * b * b + k * C * b * b;
  }
  return {std::move(ad), std::move(bd)};
}

namespace {

// State layout: [G(0..n), h(0..n), theta(0..n)].
struct ProfileLayout {
  Grid grid;
  double lambda;
  int winding;

  std::size_t n() const { return grid.size(); }

  State pack(const WarpedProfile& p) const {
    State y;
    y.reserve(3 * n());
    y.insert(y.end(), p.G.data().begin(), p.G.data().end());
    y.insert(y.end(), p.h.data().begin(), p.h.data().end());
    y.insert(y.end(), p.theta.data().begin(), p.theta.data().end());
    return y;
  }

  Field slice(std::span<const double> y, std::size_t k) const {
    return Field(grid, std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(k * n()),
                                           y.begin() + static_cast<std::ptrdiff_t>((k + 1) * n())));
  }

  WarpedProfile unpack(std::span<const double> y) const {
    return WarpedProfile(slice(y, 0), slice(y, 1), slice(y, 2), SU3Background{lambda}, winding);
  }

  double theta_jump() const {
    return grid.periodic() ? 2.0 * std::numbers::pi * winding : 0.0;
  }

  // alpha, beta from raw state arrays; no validation so trial steps that
  // leave the admissible set can be rejected by the integrator instead.
  std::pair<Field, Field> alpha_beta(std::span<const double> y) const {
    const std::size_t m = n();
    const Field theta = slice(y, 2);
    const Field dtheta = diff(theta, theta_jump());
    Field a(grid), b(grid);
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = dtheta[i] / y[i];
      b[i] = lambda == 0.0 ? 0.0 : lambda * std::sin(y[2 * m + i]) / y[m + i];
    }
    return {std::move(a), std::move(b)};
  }
};

bool admissible(std::span<const double> y, std::size_t n) {
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (!(y[i] > 0.0)) return false;
  const bool positive = y[n] > 0.0;
  for (std::size_t i = n; i < 2 * n; ++i)
    if (y[i] == 0.0 || (y[i] > 0.0) != positive) return false;
  return true;
}

}  // namespace

std::string to_string(BlowUpReason r) {
  switch (r) {
    case BlowUpReason::StepSizeUnderflow: return "step_size_underflow";
    case BlowUpReason::TorsionCap: return "torsion_cap";
    case BlowUpReason::MetricCollapse: return "metric_collapse";
  }
  return "unknown";
}

FlowResult evolve(const FlowState& state, const FlowParams& params, double t_end,
                  const StepControl& ctl, const FlowOptions& options) {
  // Validates and enforces the co-closed precondition.
  (void)flow_rhs(state.profile, params, options.co_closed_tol);

  const ProfileLayout layout{state.profile.grid(), state.profile.lambda(),
                             state.profile.theta_winding};
  const std::size_t n = layout.n();

  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    if (!admissible(y, n)) {
      std::fill(dy.begin(), dy.end(), kNaN);
      return;
    }
    auto [a, b] = layout.alpha_beta(y);
    const Field G = layout.slice(y, 0);
    const LogRates r = log_rates(a, b, G, params);
    for (std::size_t i = 0; i < n; ++i) {
      dy[i] = y[i] * r.G[i];
      dy[n + i] = y[n + i] * r.h[i];
      dy[2 * n + i] = r.theta[i];
    }
  };

  FlowResult result;
  std::size_t step = 0;
  std::vector<int> last_sign(n, 0);
  State last_y;
  double last_t = state.t;
  double torsion_limit = 0.0, G_limit = 0.0;

  auto observer = [&](double t, std::span<const double> y) {
    auto [a, b] = layout.alpha_beta(y);
    FlowDiagnostics d{t, a.max_abs(), b.max_abs(), 0.0,
                      *std::min_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)), 0};
    const Field h = layout.slice(y, 1);
    const Field dh = diff(h);
    for (std::size_t i = 0; i < n; ++i) {
      const double gamma = dh[i] / y[n + i] +
                           layout.lambda * y[i] * std::cos(y[2 * n + i]) / y[n + i];
      d.max_abs_gamma = std::max(d.max_abs_gamma, std::abs(gamma));
      const double s = a[i] + b[i];
      const int sign = s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
      if (step > 0 && sign != last_sign[i]) ++d.alpha_plus_beta_crossings;
      last_sign[i] = sign;
    }
    result.diagnostics.push_back(d);
    if (step == 0 || (options.snapshot_stride > 0 && step % options.snapshot_stride == 0))
      result.snapshots.push_back({t, layout.unpack(y)});
    last_y.assign(y.begin(), y.end());
    last_t = t;
    ++step;
    if (step == 1) {
      torsion_limit = options.torsion_cap * std::max({1.0, d.max_abs_alpha, d.max_abs_beta});
      G_limit = options.G_floor * d.min_G;
    }
    if (std::max(d.max_abs_alpha, d.max_abs_beta) > torsion_limit) {
      result.blow_up = BlowUp{t, BlowUpReason::TorsionCap};
      return false;
    }
    if (d.min_G < G_limit) {
      result.blow_up = BlowUp{t, BlowUpReason::MetricCollapse};
      return false;
    }
    return true;
  };

  OdeOptions opt;
  opt.observer = observer;
  opt.keep_trajectory = false;
  try {
    result.stats = integrate_ode(rhs, layout.pack(state.profile), state.t, t_end, ctl, opt).stats;
    if (result.blow_up) result.stats.t_final = result.blow_up->t_last;
  } catch (const StepSizeUnderflow& e) {
    result.blow_up = BlowUp{e.t_last(), BlowUpReason::StepSizeUnderflow};
  }
  if (!last_y.empty() && (result.snapshots.empty() || result.snapshots.back().t != last_t))
    result.snapshots.push_back({last_t, layout.unpack(last_y)});
  return result;
}

AbcFlowState evolve_abc(const AbcFlowState& state, const FlowParams& params,
                        double t_end, const StepControl& ctl) {
  const Grid& g = state.alpha.grid();
  require_same_grid(state.alpha, state.beta, "evolve_abc");
  require_same_grid(state.alpha, state.G, "evolve_abc");
  const std::size_t n = g.size();
  State y0;
  y0.reserve(3 * n);
  for (const Field* f : {&state.alpha, &state.beta, &state.G})
    y0.insert(y0.end(), f->data().begin(), f->data().end());

  auto slice = [&](std::span<const double> y, std::size_t k) {
    return Field(g, std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(k * n),
                                        y.begin() + static_cast<std::ptrdiff_t>((k + 1) * n)));
  };
  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    for (double v : y)
      if (!std::isfinite(v)) {
        std::fill(dy.begin(), dy.end(), kNaN);
        return;
      }
    TorsionABC t{slice(y, 0), slice(y, 1), Field::constant(g, 0.0)};
    const Field G = slice(y, 2);
    const AbcRates r = abc_flow_rhs(t, G, params);
    const LogRates lr = log_rates(t.alpha, t.beta, G, params);
    for (std::size_t i = 0; i < n; ++i) {
      dy[i] = r.alpha_dot[i];
      dy[n + i] = r.beta_dot[i];
      dy[2 * n + i] = G[i] * lr.G[i];
    }
  };
  OdeOptions opt;
  opt.output_times = {t_end};
  const OdeResult res = integrate_ode(rhs, std::move(y0), state.t, t_end, ctl, opt);
  const State& y = res.trajectory.back().y;
  return {t_end, slice(y, 0), slice(y, 1), slice(y, 2)};
}

double separable_cy_blowup_time(double lambda1, double theta_t) {
  if (!(lambda1 > 0.0)) throw InvalidArgument("separable_cy: lambda1 must be positive");
  if (theta_t == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (2.0 * lambda1 * theta_t * theta_t);
}

SeparableCY separable_cy(double lambda1, double theta_t, double t, double r) {
  const double T = separable_cy_blowup_time(lambda1, theta_t);
  if (!(t < T))
    throw BeyondBlowUp("separable_cy: t = " + std::to_string(t) +
                       " is past the blow-up time " + std::to_string(T));
  const double Gt = std::sqrt(1.0 - 2.0 * lambda1 * theta_t * theta_t * t);
  const double s = std::sqrt(lambda1);
  return {Gt, theta_t * s * r, s * theta_t / Gt};
}

WarpedProfile separable_cy_profile(double lambda1, double theta_t, std::size_t n) {
  if (!(lambda1 > 0.0) || theta_t == 0.0)
    throw InvalidArgument("separable_cy_profile: need lambda1 > 0 and theta_t != 0");
  const double s = std::sqrt(lambda1) * theta_t;
  const Grid g(n, 0.0, 2.0 * std::numbers::pi / std::abs(s), Topology::Circle);
  return WarpedProfile(Field::constant(g, 1.0), Field::constant(g, 1.0),
                       Field::from_function(g, [s](double r) { return s * r; }),
                       SU3Background{0.0}, s > 0 ? 1 : -1);
}

void write_trajectory_csv(std::ostream& out, const std::vector<FlowState>& snapshots) {
  out << "t,r,G,h,theta,alpha,beta,gamma,tau1,traceT\n";
  char buf[512];
  for (const FlowState& s : snapshots) {
    const WarpedProfile& p = s.profile;
    const TorsionABC t = compute_abc(p);
    for (std::size_t i = 0; i < p.grid().size(); ++i) {
      const double trace = t.alpha[i] - 6.0 * t.beta[i];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    s.t, p.grid().node(i), p.G[i], p.h[i], p.theta[i], t.alpha[i], t.beta[i],
                    t.gamma[i], trace / 7.0, trace);
      out << buf;
    }
  }
}

}  // namespace g2flow
