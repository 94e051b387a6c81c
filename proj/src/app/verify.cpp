#include "g2flow/app/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "g2flow/laplacian.hpp"

namespace g2flow::app {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFault = 0.1;  // size of an injected perturbation

Field fn(const Grid& g, const std::function<double(double)>& f) { return Field::from_function(g, f); }

// Trigonometric polynomial with random coefficients, bounded by `amp`.
std::function<double(double)> random_wave(std::mt19937& rng, double base, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c[3], ph[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = amp * u(rng) / (k + 1);
    ph[k] = kPi * u(rng);
  }
  return [=](double r) {
    double v = base;
    for (int k = 0; k < 3; ++k) v += c[k] * std::cos((k + 1) * r + ph[k]);
    return v;
  };
}

// Co-closed nearly-Kaehler data on the circle: theta chosen so h' = -G cos(theta).
WarpedProfile random_nk(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c[3], ph[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = 0.08 * u(rng) / (k + 1);
    ph[k] = kPi * u(rng);
  }
  const double h0 = 2.0 + 0.5 * u(rng);
  const auto G = random_wave(rng, 1.0, 0.1);
  const Grid g(n, 0.0, 2.0 * kPi, Topology::Circle);
  auto h = [=](double r) {
    double v = h0;
    for (int k = 0; k < 3; ++k) v += c[k] * std::cos((k + 1) * r + ph[k]);
    return v;
  };
  auto dh = [=](double r) {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v -= (k + 1) * c[k] * std::sin((k + 1) * r + ph[k]);
    return v;
  };
  return WarpedProfile(fn(g, G), fn(g, h), fn(g, [=](double r) { return kPi / 2 + std::asin(dh(r) / G(r)); }),
                       SU3Background{1.0});
}

template <class F>
double ddr(F f, double r, double h = 4e-3) {
  auto central = [&](double s) { return (f(r + s) - f(r - s)) / (2 * s); };
  const double d0 = central(h), d1 = central(h / 2), d2 = central(h / 4);
  const double e0 = (4 * d1 - d0) / 3, e1 = (4 * d2 - d1) / 3;
  return (16 * e1 - e0) / 15;
}

std::vector<CYFamily> cy_families() {
  std::vector<CYFamily> out;
  for (double C : {0.5, -0.7, 1.0}) out.push_back(CYFamily::make(C, 2 * std::abs(C), 0.3, 0.2));
  for (int s : {1, -1}) {
    out.push_back(CYFamily::make(0.0, 1.0, 0.0, 0.0, s));
    out.push_back(CYFamily::make(0.6, 1.5, -0.4, 1.0, s));
    out.push_back(CYFamily::make(-0.5, 2.0, 0.7, -0.3, s));
    out.push_back(CYFamily::make(1.0, 0.5, 0.0, 0.0, s));
    out.push_back(CYFamily::make(-1.2, 1.1, 0.5, 2.0, s));
    out.push_back(CYFamily::make(1.25, 1.5, -1.0, 0.4, s));
  }
  return out;
}

// ---- numerics

double diff_quartic(double fault) {
  const Grid g(64, -1.0, 2.0, Topology::Interval);
  const Field f = fn(g, [](double r) { return 1 + r - 2 * r * r + 0.5 * r * r * r - 0.25 * r * r * r * r; });
  const Field exact = fn(g, [&](double r) { return 1 - 4 * r + 1.5 * r * r - r * r * r + fault; });
  return max_abs_diff(diff(f), exact);
}

double quadrature_order(double fault) {
  auto f = [](double r) { return std::sin(r) + std::cos(2 * r); };
  double errs[3];
  const std::size_t ns[3] = {64, 128, 256};
  for (int i = 0; i < 3; ++i) {
    const Grid g(ns[i], 0.0, 2 * kPi, Topology::Interval);
    const Field F = fn(g, f);
    const Field back = diff(quadrature(F, 0.3));
    errs[i] = max_abs_diff(back, F.map([&](double v) { return v * (1 + fault); }));
  }
  return std::min(std::log2(errs[0] / errs[1]), std::log2(errs[1] / errs[2]));
}

double ode_linear(double fault) {
  const StepControl ctl;
  const OdeRhs rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -4.0 * y[0];
  };
  const auto res = integrate_ode(rhs, {1.0, 0.0}, 0.0, 1.0, ctl);
  double worst = 0.0;
  for (const auto& p : res.trajectory) {
    const double w = 2.0 + fault;
    worst = std::max(worst, std::abs(p.y[0] - std::cos(w * p.t)) / (10 * ctl.rtol));
  }
  return worst;  // in units of 10 rtol
}

// ---- geometry

double lambda0_beta(double fault) {
  std::mt19937 rng(11);
  const Grid g(128, 0.0, 2 * kPi, Topology::Circle);
  const WarpedProfile p(fn(g, random_wave(rng, 1.0, 0.2)), fn(g, random_wave(rng, 2.0, 0.3)),
                        fn(g, random_wave(rng, 0.5, 1.0)), SU3Background{fault});
  return compute_abc(p).beta.max_abs();
}

double trace_identity(double fault) {
  std::mt19937 rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g(256, 0.0, 2 * kPi, Topology::Circle);
    const WarpedProfile p(fn(g, random_wave(rng, 1.0, 0.2)), fn(g, random_wave(rng, 2.0, 0.3)),
                          fn(g, random_wave(rng, 0.5, 1.0)), SU3Background{1.0});
    const TorsionABC t = compute_abc(p);
    const Field tr = full_torsion(t, p.G).trace();
    const Field tc = torsion_components(t).trace_T;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double ref = t.alpha[i] - (6.0 + fault) * t.beta[i];
      worst = std::max({worst, std::abs(tr[i] - ref), std::abs(tc[i] - ref)});
    }
  }
  return worst;
}

double symmetric_iff_coclosed(double fault) {
  std::mt19937 rng(13);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Grid g(256, 0.0, 2 * kPi, Topology::Circle);
    const bool coclosed = trial % 2 == 0;
    // lambda = 0 with constant h has gamma = h'/h = 0 exactly.
    const WarpedProfile p(fn(g, random_wave(rng, 1.0, 0.2)),
                          coclosed ? Field::constant(g, 1.5) : fn(g, random_wave(rng, 2.0, 0.3)),
                          fn(g, random_wave(rng, 0.5, 1.0)), SU3Background{coclosed ? 0.0 : 1.0});
    const TorsionABC t = compute_abc(p);
    const bool sym = full_torsion(t, p.G).is_symmetric(1e-9 + 100 * fault);
    if (sym != (t.gamma.max_abs() <= 1e-9)) ++mismatches;
  }
  return mismatches;
}

TorsionABC random_abc(std::mt19937& rng, const Grid& g) {
  return {fn(g, random_wave(rng, 0.3, 0.5)), fn(g, random_wave(rng, -0.2, 0.5)),
          fn(g, random_wave(rng, 0.1, 0.5))};
}

double gauge_fix(double fault) {
  std::mt19937 rng(14);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Grid g(1024, 0.0, 2.0, Topology::Interval);
    const TorsionABC t = random_abc(rng, g);
    const GaugeFixed fixed = gauge_fix_gamma(t, 0.0);
    const Field f = fixed.factor.map([&](double v) { return v * (1 + fault * v); });
    worst = std::max(worst, conformal_transform(t, f).gamma.max_abs());
  }
  return worst;
}

double conformal_composition(double fault) {
  std::mt19937 rng(15);
  // The check compares two discrete derivatives, so it needs a fine grid.
  const Grid g(2048, 0.0, 2 * kPi, Topology::Circle);
  const TorsionABC t = random_abc(rng, g);
  const Field f1 = fn(g, random_wave(rng, 2.0, 0.4)), f2 = fn(g, random_wave(rng, 1.5, 0.3));
  Field f12(g);
  for (std::size_t i = 0; i < g.size(); ++i) f12[i] = f1[i] * f2[i] * (1 + fault);
  const TorsionABC a = conformal_transform(conformal_transform(t, f1), f2);
  const TorsionABC b = conformal_transform(t, f12);
  return std::max({max_abs_diff(a.alpha, b.alpha), max_abs_diff(a.beta, b.beta),
                   max_abs_diff(a.gamma, b.gamma)});
}

double round_trip(double fault) {
  const Grid g(512, 0.0, 1.0, Topology::Interval);
  const Field G = fn(g, [](double r) { return 1.0 + 0.3 * r; });
  const Field theta = fn(g, [](double r) { return 1.2 + 0.5 * r + 0.5 * r * r; });
  Field dh(g);
  for (std::size_t i = 0; i < g.size(); ++i) dh[i] = -G[i] * std::cos(theta[i]);
  const Field h = quadrature(dh, 0.0).map([](double v) { return 2.0 + v; });
  const WarpedProfile p(G, h, theta, SU3Background{1.0});
  const WarpedProfile q = reconstruct_profile(compute_abc(p), {1.0}, 2.0 + fault, 0.0, theta[0]);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max({worst, std::abs(q.G[i] / p.G[i] - 1), std::abs(q.h[i] / p.h[i] - 1),
                      std::abs(q.theta[i] / p.theta[i] - 1)});
  return worst;
}

double cy_torsion_free(double fault) {
  const Grid g(128, 0.0, 2 * kPi, Topology::Circle);
  int mismatches = 0;
  for (double eps : {0.0, 1e-3, 0.3}) {
    for (int which = 0; which < 2; ++which) {
      const Field theta = fn(g, [&](double r) { return 0.4 + (which == 0 ? eps * std::sin(r) : 0.0); });
      const Field h = fn(g, [&](double r) { return 1.3 + (which == 1 ? eps * std::cos(r) : 0.0); });
      const WarpedProfile p(Field::constant(g, 1.0), h, theta, SU3Background{fault});
      const TorsionABC t = compute_abc(p);
      const bool tf = torsion_class_relative(t).torsion_free;
      const double scale = std::max(diff(theta).max_abs(), diff(h).max_abs());
      if (tf != (scale <= 1e-9)) ++mismatches;
    }
  }
  return mismatches;
}

// ---- laplacian

double decomposition(double fault) {
  std::mt19937 rng(16);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g(256, 0.0, 2 * kPi, Topology::Circle);
    TorsionABC t = random_abc(rng, g);
    t.gamma = Field::constant(g, 0.0);
    const Field G = fn(g, random_wave(rng, 1.0, 0.2));
    const G2Decomp a = laplacian_g2_decomp(t, G);
    const G2Decomp b = g2_decompose(laplacian_phi(t, G));
    worst = std::max({worst, max_abs_diff(a.x_coeff, b.x_coeff), max_abs_diff(a.s_6, b.s_6),
                      max_abs_diff(a.s_rr, b.s_rr.map([&](double v) { return v + fault; })),
                      max_abs_diff(a.trace_s, b.trace_s)});
  }
  return worst;
}

double coclosed_specialization(double fault) {
  std::mt19937 rng(17);
  const Grid g(128, 0.0, 2 * kPi, Topology::Circle);
  TorsionABC t = random_abc(rng, g);
  t.gamma = Field::constant(g, 0.0);
  const Field G = fn(g, random_wave(rng, 1.0, 0.2));
  const SymThreeForm a = laplacian_phi(t, G);
  const SymThreeForm b = laplacian_phi_coclosed(t.alpha, t.beta.map([&](double v) { return v + fault; }), G);
  return std::max({max_abs_diff(a.re1, b.re1), max_abs_diff(a.im1, b.im1), max_abs_diff(a.re2, b.re2)});
}

double harmonic_torsion_free(double fault) {
  // min over directions of max(|Re1|, |Re2|) / |(alpha, beta)|^2 for constant
  // co-closed torsion; positive means only alpha = beta = 0 is harmonic.
  const Grid g(8, 0.0, 1.0, Topology::Interval);
  const Field G = Field::constant(g, 1.0);
  double worst = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const double phi = 2 * kPi * i / 10000.0;
    const double a = std::cos(phi), b = std::sin(phi);
    const SymThreeForm L =
        laplacian_phi_coclosed(Field::constant(g, a), Field::constant(g, b), G);
    worst = std::min(worst, std::max(std::abs(L.re1[0]), std::abs(L.re2[0])));
  }
  return worst - 10 * fault;
}

// ---- flow

double k_sign(double fault) {
  std::mt19937 rng(18);
  const Grid g(128, 0.0, 2 * kPi, Topology::Circle);
  const WarpedProfile p(fn(g, random_wave(rng, 1.0, 0.2)), Field::constant(g, 1.0),
                        fn(g, random_wave(rng, 0.0, 0.5)), SU3Background{0.0});
  const FlowRates r0 = flow_rhs(p, {0.0, 0.0});
  const FlowRates r2 = flow_rhs(p, {2.0, fault});
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(r0.G_dot[i] / p.G[i] + r2.G_dot[i] / p.G[i]));
  return worst;
}

struct Commuting {
  double discrepancy;
  double gamma;
};

Commuting commuting(double fault) {
  std::mt19937 rng(21);
  const WarpedProfile p = random_nk(rng, 256);
  const FlowParams prm{2.0, 0.2};
  const FlowResult res = evolve({0.0, p}, prm, 0.05);
  if (res.blow_up) throw NumericalError("unexpected blow-up");
  const TorsionABC t0 = compute_abc(p);
  const AbcFlowState abc = evolve_abc({0.0, t0.alpha, t0.beta, p.G}, {2.0, 0.2 + fault}, 0.05);
  const WarpedProfile& last = res.snapshots.back().profile;
  const TorsionABC t1 = compute_abc(last);
  return {std::max({max_abs_diff(t1.alpha, abc.alpha), max_abs_diff(t1.beta, abc.beta),
                    max_abs_diff(last.G, abc.G)}),
          t1.gamma.max_abs()};
}

double separable_tracking(double fault) {
  const double l1 = 1.0, th = 1.0;
  const double T = separable_cy_blowup_time(l1, th);
  FlowOptions opt;
  opt.snapshot_stride = 1;
  const FlowResult res = evolve({0.0, separable_cy_profile(l1, th, 64)}, {2.0, 0.0}, 0.9 * T, {}, opt);
  if (res.blow_up) throw NumericalError("unexpected blow-up before G_t^2 = 0.1");
  double worst = 0.0;
  for (const FlowState& s : res.snapshots) {
    const SeparableCY exact = separable_cy(l1 + fault, th, s.t, 0.0);
    const TorsionABC t = compute_abc(s.profile);
    worst = std::max({worst, std::abs(s.profile.G.max() / exact.G - 1),
                      std::abs(s.profile.G.min() / exact.G - 1),
                      std::abs(t.alpha.max() / exact.alpha - 1), std::abs(t.alpha.min() / exact.alpha - 1)});
  }
  return worst;
}

double separable_blowup(double fault) {
  double worst = 0.0;
  for (const auto& [l1, th] : {std::pair{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}}) {
    const double T = separable_cy_blowup_time(l1, th);
    const FlowResult res = evolve({0.0, separable_cy_profile(l1, th, 64)}, {2.0, 0.0}, 2 * T);
    if (!res.blow_up) return INFINITY;
    worst = std::max(worst, std::abs(res.blow_up->t_last / (T * (1 + fault)) - 1));
  }
  return worst;
}

// ---- Calabi-Yau solitons

double first_integral(double fault) {
  const double Q = std::sqrt(4 - 0.25);
  struct Run {
    SolitonState ics;
    double C;
    double span;
  };
  const Run runs[] = {{{1, 0, 0}, 0.0, 10.0}, {{2, 0, 0}, 0.5, 10.0}, {{1.5, 0, 0}, 1.0, 3 * 2 * kPi / Q}};
  double worst = 0.0;
  for (const Run& r : runs) {
    const SolitonSolution s = solve_soliton(r.ics, {r.C, 0}, 0.0, {0, r.span});
    const double R2 = first_integral_R2(r.ics.alpha, r.ics.l, r.C + fault);
    for (const SolitonSample& p : s.samples) worst = std::max(worst, std::abs(first_integral_R2(p.alpha, p.l, r.C) - R2));
  }
  return worst;
}

double closed_form_residual(double fault) {
  double worst = 0.0;
  for (const CYFamily& f : cy_families()) {
    const double C = f.C + fault;
    for (int i = 0; i < 1000; ++i) {
      const double r = f.r0 - 8 + 16.0 * i / 999;
      const CYPoint p = cy_closed_form(f, r);
      const double da = ddr([&](double x) { return cy_closed_form(f, x).alpha; }, r);
      const double dl = ddr([&](double x) { return cy_closed_form(f, x).l; }, r);
      const double dt = ddr([&](double x) { return cy_closed_form(f, x).theta; }, r);
      worst = std::max({worst, std::abs(da - p.alpha * p.l),
                        std::abs(dl - (-p.alpha * p.alpha + 2 * C * p.alpha)), std::abs(dt - p.alpha)});
    }
  }
  return worst;
}

double closed_form_vs_integration(double fault) {
  StepControl ctl;
  ctl.rtol = 1e-12;
  ctl.atol = 1e-14;
  std::vector<double> out;
  for (int i = 0; i <= 50; ++i) out.push_back(0.1 * i);
  std::vector<CYFamily> fams = cy_families();
  fams.push_back(CYFamily::make(2.0, 1.0, 0, 0, 1));
  fams.push_back(CYFamily::make(-0.3, 2.5, 0, 0, -1));
  double worst = 0.0;
  for (const CYFamily& g : fams) {
    const CYFamily f = CYFamily::make(g.C, g.R, 0.0, g.theta0, g.sign);
    const SolitonSolution s = solve_soliton({f.alpha0() + fault, 0, 0}, {f.C, 0}, 0.0, {0, 5}, ctl, f.theta0, out);
    for (const SolitonSample& p : s.samples) {
      const CYPoint c = cy_closed_form(f, p.r);
      worst = std::max({worst, std::abs(p.alpha - c.alpha), std::abs(p.l - c.l), std::abs(p.theta - c.theta)});
    }
  }
  return worst;
}

double periodicity_integer(double fault) {
  double worst = 0.0;
  // (C, R) with Q = 1, 2, 2, 4.
  for (const auto& [C, R] : {std::pair{1.0, std::sqrt(3.0)}, {1.0, 0.0}, {1.25, 1.5}, {2.5, 3.0}})
    worst = std::max(worst, cy_periodicity(C, R, 2 * kPi * (1 + fault)).max_mismatch);
  return worst;
}

double periodicity_irrational(double fault) {
  return cy_periodicity(1.0, fault != 0.0 ? 0.0 : std::sqrt(2.0)).max_mismatch;
}

double hyperbolic_limits(double fault) {
  double worst = 0.0;
  for (double C : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const double R = std::sqrt(1 + 4 * C * C);
    for (int s : {1, -1}) {
      const CYFamily f = CYFamily::make(C, R, 0, 0, s);
      const double Q = f.Q() + fault;
      const CYPoint a = cy_closed_form(f, 20), b = cy_closed_form(f, -20);
      worst = std::max({worst, std::abs(a.l + Q), std::abs(b.l - Q), std::abs(a.alpha), std::abs(b.alpha)});
    }
  }
  return worst;
}

double kmt(double fault) {
  double worst = 0.0;
  for (double b : {-1.0, 1.0, -2.5, 0.7}) {
    for (double c : {-0.5, 0.5, 3.0}) {
      const CYFamily f = kmt_family(b, c);
      for (int i = 0; i <= 1000; ++i) {
        const double r = -5 + 0.01 * i;
        const KMTPoint k = kmt_reduction(b + fault, c, r);
        const CYPoint p = cy_closed_form(f, r);
        worst = std::max({worst, std::abs(k.l - p.l), std::abs(k.theta - p.theta), std::abs(k.alpha - p.alpha)});
      }
    }
  }
  return worst;
}

// ---- nearly-Kaehler solitons

double catalog_sweep(double fault) {
  double worst = 0.0;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 20; ++j) {
      const double C = -2 + 0.1 * i, mu = -1 + 0.1 * j;
      for (NKCatalogEntry e : nk_constant_catalog(C, mu)) {
        e.mu += fault;
        for (double l0 : {0.0, 1.7}) worst = std::max(worst, catalog_residual(e, C, l0));
      }
    }
  return worst;
}

double catalog_special(double fault) {
  double worst = 0.0;
  for (double C : {-13.0, -1.0, -0.4}) {
    bool found = false;
    for (const auto& e : nk_constant_catalog(C, 12 * C * C / 169 * (1 + fault)))
      if (e.id == 5 && e.branch == "+") {
        worst = std::max({worst, std::abs(*e.alpha + *e.beta), catalog_residual(e, C)});
        found = true;
      }
    if (!found) return INFINITY;
  }
  for (double C : {-1.5, 0.8}) {
    double best = INFINITY;
    for (const auto& e : nk_constant_catalog(C, C * C / 3 * (1 + fault)))
      if (e.id == 5) best = std::min(best, std::abs(*e.alpha - 6 * *e.beta) + catalog_residual(e, C));
    worst = std::max(worst, best);
  }
  for (const auto& e : nk_constant_catalog(1.0, -0.5 + fault))
    if (e.id == 4) worst = std::max(worst, std::abs(*e.alpha + *e.beta) / 7);
  return worst;
}

double catalog_completeness(double fault) {
  double worst = 0.0;
  for (const auto& [C, mu] : {std::pair{1.0, 0.05}, {-0.7, -0.1}, {-1.0, 12.0 / 169}}) {
    std::vector<std::pair<double, double>> expected;
    for (const auto& e : nk_constant_catalog(C, mu + fault)) {
      if (e.l_arbitrary && e.l_slope != 0) continue;
      const double a = e.alpha.value_or(0), b = e.beta.value_or(0);
      if (std::abs(a) <= 5 && std::abs(b) <= 5) expected.emplace_back(a, b);
    }
    const auto found = l_zero_grid_search(C, mu);
    auto nearest = [](const auto& p, const auto& set) {
      double best = INFINITY;
      for (const auto& q : set) best = std::min(best, std::hypot(p.first - q.first, p.second - q.second));
      return best;
    };
    for (const auto& p : found) worst = std::max(worst, nearest(p, expected));
    for (const auto& p : expected) worst = std::max(worst, nearest(p, found));
  }
  return worst;
}

double conserved_F(double fault) {
  const double alpha = 0.7, C = 0.3, mu = -0.2;
  const OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    const ConstantAlphaRates r = constant_alpha_rhs(alpha, y[0], y[1], C, mu);
    dy[0] = r.beta;
    dy[1] = r.l;
  };
  const double F0 = nk_conserved_F({alpha, 0.1, 0.5}, C + fault, mu);
  double drift = 0.0;
  OdeOptions opt;
  opt.keep_trajectory = false;
  opt.observer = [&](double, std::span<const double> y) {
    drift = std::max(drift, std::abs(nk_conserved_F({alpha, y[0], y[1]}, C, mu) - F0));
    return true;
  };
  integrate_ode(rhs, {0.1, 0.5}, 0, 3, StepControl{}, opt);
  return drift;
}

double l_zero_refused(double fault) {
  try {
    solve_soliton({0, 0, 1}, {0, fault != 0.0 ? 0.0 : 1.0}, 1.0, {0, 2});
  } catch (const SingularAtLZero&) {
    return 0.0;
  }
  return 1.0;
}

std::vector<Check> build_checks() {
  using C = Comparison;
  std::vector<Check> v;
  v.push_back({"numerics", "diff-quartic-exact", 1e-12, C::AtMost, diff_quartic});
  v.push_back({"numerics", "diff-quadrature-order", 3.7, C::AtLeast, quadrature_order});
  v.push_back({"numerics", "ode-linear-within-10-rtol", 1.0, C::AtMost, ode_linear});
  v.push_back({"geometry", "lambda0-beta-exact", 0.0, C::AtMost, lambda0_beta});
  v.push_back({"geometry", "trace-alpha-minus-6beta", 1e-12, C::AtMost, trace_identity});
  v.push_back({"geometry", "symmetric-iff-coclosed", 0.0, C::AtMost, symmetric_iff_coclosed});
  v.push_back({"geometry", "gauge-fix-gamma", 1e-8, C::AtMost, gauge_fix});
  v.push_back({"geometry", "conformal-composition", 1e-10, C::AtMost, conformal_composition});
  v.push_back({"geometry", "reconstruct-round-trip", 1e-5, C::AtMost, round_trip});
  v.push_back({"geometry", "cy-torsion-free-iff", 0.0, C::AtMost, cy_torsion_free});
  v.push_back({"laplacian", "g2-decomposition-consistency", 1e-12, C::AtMost, decomposition});
  v.push_back({"laplacian", "coclosed-specialization-exact", 0.0, C::AtMost, coclosed_specialization});
  v.push_back({"laplacian", "harmonic-coclosed-torsion-free", 0.5, C::AtLeast, harmonic_torsion_free});
  v.push_back({"flow", "k0-k2-opposite-sign", 0.0, C::AtMost, k_sign});
  v.push_back({"flow", "commuting-diagram", 1e-5, C::AtMost,
               [](double f) { return commuting(f).discrepancy; }});
  v.push_back({"flow", "coclosed-preserved", 1e-7, C::AtMost,
               [](double f) { return commuting(0.0).gamma + f; }});
  v.push_back({"flow", "separable-tracking", 1e-4, C::AtMost, separable_tracking});
  v.push_back({"flow", "separable-blowup-time", 1e-2, C::AtMost, separable_blowup});
  v.push_back({"cy-soliton", "first-integral-drift", 1e-8, C::AtMost, first_integral});
  v.push_back({"cy-soliton", "closed-form-residual", 1e-10, C::AtMost, closed_form_residual});
  v.push_back({"cy-soliton", "closed-form-vs-integration", 1e-6, C::AtMost, closed_form_vs_integration});
  v.push_back({"cy-soliton", "periodicity-integer-q", 1e-10, C::AtMost, periodicity_integer});
  v.push_back({"cy-soliton", "periodicity-q-squared-2-not-periodic", 1e-6, C::AtLeast, periodicity_irrational});
  v.push_back({"cy-soliton", "hyperbolic-asymptotics", 1e-3, C::AtMost, hyperbolic_limits});
  v.push_back({"cy-soliton", "kmt-recovery", 1e-12, C::AtMost, kmt});
  v.push_back({"nk-soliton", "catalog-residual", 1e-12, C::AtMost, catalog_sweep});
  v.push_back({"nk-soliton", "catalog-special-values", 1e-12, C::AtMost, catalog_special});
  v.push_back({"nk-soliton", "catalog-completeness-grid", 5e-3, C::AtMost, catalog_completeness});
  v.push_back({"nk-soliton", "conserved-F-drift", 1e-8, C::AtMost, conserved_F});
  v.push_back({"nk-soliton", "l-zero-refused", 0.0, C::AtMost, l_zero_refused});
  return v;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

const std::vector<Check>& all_checks() {
  static const std::vector<Check> checks = build_checks();
  return checks;
}

std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const Check& c : all_checks())
    if (std::find(names.begin(), names.end(), c.suite) == names.end()) names.push_back(c.suite);
  names.push_back("all");
  return names;
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

Json Report::to_json(bool timing) const {
  Json arr = Json::array();
  for (const CheckResult& c : checks) {
    Json j = {{"suite", c.suite},
              {"name", c.name},
              {"status", c.pass ? "pass" : "fail"},
              {"measured", std::isfinite(c.measured) ? Json(c.measured) : Json(nullptr)},
              {"tolerance", c.tolerance},
              {"comparison", c.comparison == Comparison::AtMost ? "<=" : ">="}};
    if (timing) j["elapsed_s"] = c.elapsed_s;
    if (!c.error.empty()) j["error"] = c.error;
    arr.push_back(std::move(j));
  }
  return {{"all_pass", all_pass()}, {"checks", std::move(arr)}};
}

std::string Report::to_table(bool timing) const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-11s %-38s %-6s %12s %3s %-10s", "suite", "check", "status",
                "measured", "", "tolerance");
  os << line << (timing ? "   elapsed" : "") << '\n';
  for (const CheckResult& c : checks) {
    std::snprintf(line, sizeof line, "%-11s %-38s %-6s %12s %3s %-10s", c.suite.c_str(),
                  c.name.c_str(), c.pass ? "PASS" : "FAIL", format_number(c.measured).c_str(),
                  c.comparison == Comparison::AtMost ? "<=" : ">=",
                  format_number(c.tolerance).c_str());
    os << line;
    if (timing) {
      std::snprintf(line, sizeof line, " %8.3fs", c.elapsed_s);
      os << line;
    }
    if (!c.error.empty()) os << "  (" << c.error << ")";
    os << '\n';
  }
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
  os << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
  return os.str();
}

Report run_suite(const std::string& suite, const std::string& inject_fault) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown suite \"" + suite + "\" (" + list + ")");
  }
  // Fault targets are "name" or "suite/name".
  auto targeted = [&](const Check& c) {
    return c.name == inject_fault || c.suite + "/" + c.name == inject_fault;
  };
  if (!inject_fault.empty() && std::none_of(all_checks().begin(), all_checks().end(), targeted))
    throw ConfigError("unknown check \"" + inject_fault + "\" for fault injection");

  Report report;
  for (const Check& c : all_checks()) {
    if (suite != "all" && c.suite != suite) continue;
    CheckResult r{c.suite, c.name, false, NAN, c.tolerance, c.comparison, 0.0, ""};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.measured = c.run(targeted(c) ? kFault : 0.0);
      r.pass = c.comparison == Comparison::AtMost ? r.measured <= c.tolerance : r.measured >= c.tolerance;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.checks.push_back(std::move(r));
  }
  return report;
}

}  // namespace g2flow::app
