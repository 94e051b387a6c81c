#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "g2flow/errors.hpp"
#include "g2flow/flow.hpp"

using namespace g2flow;
namespace {
constexpr double kPi = std::numbers::pi;

Field fn(const Grid& g, auto f) { return Field::from_function(g, f); }
Field cst(const Grid& g, double c) { return Field::constant(g, c); }

// Co-closed nearly-Kaehler data: h' = -G cos(theta) with h, G given in closed form.
WarpedProfile random_nk(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1, 1);
  double c[3], ph[3], b[3], ps[3];
  for (int k = 0; k < 3; ++k) {
    c[k] = 0.08 * u(rng) / (k + 1);
    ph[k] = kPi * u(rng);
    b[k] = 0.1 * u(rng) / (k + 1);
    ps[k] = kPi * u(rng);
  }
  const double h0 = 2.0 + 0.5 * u(rng);
  Grid g(n, 0, 2 * kPi, Topology::Circle);
  auto h = [=](double r) {
    double v = h0;
    for (int k = 0; k < 3; ++k) v += c[k] * std::cos((k + 1) * r + ph[k]);
    return v;
  };
  auto dh = [=](double r) {
    double v = 0;
    for (int k = 0; k < 3; ++k) v -= (k + 1) * c[k] * std::sin((k + 1) * r + ph[k]);
    return v;
  };
  auto G = [=](double r) {
    double v = 1;
    for (int k = 0; k < 3; ++k) v += b[k] * std::cos((k + 1) * r + ps[k]);
    return v;
  };
  auto th = [=](double r) { return kPi / 2 + std::asin(dh(r) / G(r)); };
  return WarpedProfile(fn(g, G), fn(g, h), fn(g, th), {1.0});
}
}  // namespace

TEST_CASE("psi_dot_from_rates") {
  Grid g(16, 0, 1, Topology::Interval);
  WarpedProfile p(cst(g, 2), cst(g, 3), cst(g, 0), {1.0});
  auto z = psi_dot_from_rates(cst(g, 0), cst(g, 0), cst(g, 0), p);
  CHECK(z.re1.max_abs() == 0.0);
  auto a = psi_dot_from_rates(p.G, cst(g, 0), cst(g, 0), p);
  CHECK(a.re1[0] == 1.0);
  CHECK(a.im1[0] == 0.0);
  CHECK(a.re2[0] == 0.0);
  auto b = psi_dot_from_rates(cst(g, 0), p.h, cst(g, 0), p);
  CHECK(b.re1[0] == 3.0);
  CHECK(b.re2[0] == 4.0);
}

TEST_CASE("abc_dot_from_rates") {
  Grid g(128, 0, 2 * kPi, Topology::Circle);
  WarpedProfile p(cst(g, 1), cst(g, 2), fn(g, [](double r) { return 1.0 + 0.2 * std::sin(r); }), {1.0});
  auto t = compute_abc(p);
  auto z = abc_dot_from_rates(cst(g, 0), cst(g, 0), cst(g, 0), t, p);
  CHECK(z.alpha_dot.max_abs() == 0.0);
  CHECK(z.beta_dot.max_abs() == 0.0);
  CHECK(z.gamma_dot.max_abs() == 0.0);

  const double c = 0.7;
  auto s = abc_dot_from_rates(cst(g, 0), p.h.map([c](double v) { return c * v; }), cst(g, 0), t, p);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(s.beta_dot[i] == doctest::Approx(-c * t.beta[i]));

  TorsionABC flat{cst(g, 1), cst(g, 0.5), cst(g, 0)};
  WarpedProfile q(cst(g, 1), cst(g, 2), cst(g, kPi / 2), {1.0});
  auto gdot = abc_dot_from_rates(q.G.map([c](double v) { return c * v; }), cst(g, 0), cst(g, 0), flat, q);
  CHECK(gdot.gamma_dot.max_abs() == 0.0);
}

TEST_CASE("abc_dot_from_rates matches a time difference quotient") {
  std::mt19937 rng(3);
  WarpedProfile p = random_nk(rng, 256);
  const Grid& g = p.grid();
  Field Gd = fn(g, [](double r) { return 0.3 * std::cos(r); });
  Field hd = fn(g, [](double r) { return 0.2 * std::sin(2 * r); });
  Field td = fn(g, [](double r) { return 0.1 * std::cos(3 * r); });
  auto t = compute_abc(p);
  auto rates = abc_dot_from_rates(Gd, hd, td, t, p);
  const double eps = 1e-5;
  auto shifted = [&](double s) {
    Field G(g), h(g), th(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      G[i] = p.G[i] + s * Gd[i];
      h[i] = p.h[i] + s * hd[i];
      th[i] = p.theta[i] + s * td[i];
    }
    return compute_abc(WarpedProfile(G, h, th, {1.0}));
  };
  auto tp = shifted(eps), tm = shifted(-eps);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(rates.alpha_dot[i] == doctest::Approx((tp.alpha[i] - tm.alpha[i]) / (2 * eps)).epsilon(1e-5));
    CHECK(rates.beta_dot[i] == doctest::Approx((tp.beta[i] - tm.beta[i]) / (2 * eps)).epsilon(1e-5));
    CHECK(rates.gamma_dot[i] == doctest::Approx((tp.gamma[i] - tm.gamma[i]) / (2 * eps)).epsilon(1e-4));
  }
}

TEST_CASE("flow_rhs examples") {
  Grid g(128, 0, 2 * kPi, Topology::Circle);
  WarpedProfile tf(cst(g, 1), cst(g, 1), cst(g, 0.3), {0.0});
  auto z = flow_rhs(tf, {2.0, 1.0});
  CHECK(z.G_dot.max_abs() == 0.0);
  CHECK(z.theta_dot.max_abs() == 0.0);
  CHECK(z.h_dot.max_abs() == 0.0);

  std::mt19937 rng(5);
  WarpedProfile p = random_nk(rng, 256);
  auto t = compute_abc(p);
  Field trace(g = p.grid());
  for (std::size_t i = 0; i < g.size(); ++i) trace[i] = t.alpha[i] - 6 * t.beta[i];
  Field dtrace = diff(trace);
  auto r0 = flow_rhs(p, {0.0, 0.0});
  auto r2 = flow_rhs(p, {2.0, 0.4});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = t.alpha[i], b = t.beta[i];
    CHECK(r0.G_dot[i] / p.G[i] == doctest::Approx(a * a + 3 * b * b));
    CHECK(r0.theta_dot[i] == doctest::Approx(-dtrace[i] / p.G[i]));
    CHECK(r0.h_dot[i] / p.h[i] == doctest::Approx(3 * b * b - a * b));
    CHECK(r2.G_dot[i] / p.G[i] == doctest::Approx(-a * a + 3 * b * b + 12 * a * b + 0.8 * a));
    CHECK(r2.h_dot[i] / p.h[i] == doctest::Approx(-9 * b * b + a * b - 0.8 * b));
  }

  WarpedProfile bad(cst(g, 1), fn(g, [](double r) { return 2 + std::sin(r); }), cst(g, 1.0), {1.0});
  CHECK_THROWS_AS(flow_rhs(bad, {}), NotCoClosed);
}

TEST_CASE("k = 0 and k = 2 enter with opposite sign when beta = 0") {
  Grid g(128, 0, 2 * kPi, Topology::Circle);
  WarpedProfile p(fn(g, [](double r) { return 1 + 0.3 * std::cos(r); }), cst(g, 1.5),
                  fn(g, [](double r) { return std::sin(r) + 0.2 * std::cos(2 * r); }), {0.0});
  auto r0 = flow_rhs(p, {0.0, 0.0});
  auto r2 = flow_rhs(p, {2.0, 0.0});
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(r0.G_dot[i] / p.G[i] + r2.G_dot[i] / p.G[i] == 0.0);
    CHECK(r0.theta_dot[i] + r2.theta_dot[i] == 0.0);
  }
}

TEST_CASE("abc_flow_rhs examples") {
  Grid g(256, 0, 2 * kPi, Topology::Circle);
  auto z = abc_flow_rhs({cst(g, 0), cst(g, 0), cst(g, 0)}, cst(g, 1), {2.0, 0.0});
  CHECK(z.alpha_dot.max_abs() == 0.0);

  Field a = fn(g, [](double r) { return 0.5 + 0.3 * std::sin(r); });
  auto cy = abc_flow_rhs({a, cst(g, 0), cst(g, 0)}, cst(g, 1), {2.0, 0.0});
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.node(i), v = a[i];
    CHECK(cy.alpha_dot[i] == doctest::Approx(-0.3 * std::sin(r) + v * v * v).epsilon(1e-7));
  }

  const double al = 0.7, be = 0.4, C = 0.3;
  auto k1 = abc_flow_rhs({cst(g, al), cst(g, be), cst(g, 0)}, cst(g, 1), {1.0, C});
  CHECK(k1.alpha_dot[0] == doctest::Approx(-6 * be * al * al - 3 * be * be * al - C * al * al));
  CHECK(k1.beta_dot[0] == doctest::Approx(3 * be * be * be + C * be * be));
}

TEST_CASE("abc_flow_rhs is the flow velocity pushed through abc_dot_from_rates") {
  std::mt19937 rng(9);
  WarpedProfile p = random_nk(rng, 512);
  FlowParams prm{2.0, 0.3};
  auto rates = flow_rhs(p, prm);
  auto t = compute_abc(p);
  t.gamma = cst(p.grid(), 0.0);
  auto via_rates = abc_dot_from_rates(rates.G_dot, rates.h_dot, rates.theta_dot, t, p);
  auto direct = abc_flow_rhs(t, p.G, prm);
  CHECK(max_abs_diff(via_rates.alpha_dot, direct.alpha_dot) < 1e-6);
  CHECK(max_abs_diff(via_rates.beta_dot, direct.beta_dot) < 1e-6);
  // Co-closedness is preserved.
  CHECK(via_rates.gamma_dot.max_abs() < 1e-5);
}

TEST_CASE("torsion-free data is a fixed point") {
  Grid g(64, 0, 2 * kPi, Topology::Circle);
  WarpedProfile p(cst(g, 1.3), cst(g, 0.8), cst(g, 0.5), {0.0});
  auto res = evolve({0.0, p}, {2.0, 0.7}, 1.0);
  REQUIRE_FALSE(res.blow_up);
  const auto& last = res.snapshots.back();
  CHECK(last.t == 1.0);
  CHECK(max_abs_diff(last.profile.G, p.G) < 1e-12);
  CHECK(max_abs_diff(last.profile.h, p.h) < 1e-12);
  CHECK(max_abs_diff(last.profile.theta, p.theta) < 1e-12);
}

TEST_CASE("commuting diagram on random co-closed data") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 2; ++trial) {
    WarpedProfile p = random_nk(rng, 256);
    FlowParams prm{2.0, 0.2};
    auto res = evolve({0.0, p}, prm, 0.05);
    REQUIRE_FALSE(res.blow_up);
    auto t0 = compute_abc(p);
    auto abc = evolve_abc({0.0, t0.alpha, t0.beta, p.G}, prm, 0.05);
    auto t1 = compute_abc(res.snapshots.back().profile);
    CHECK(max_abs_diff(t1.alpha, abc.alpha) < 1e-5);
    CHECK(max_abs_diff(t1.beta, abc.beta) < 1e-5);
    CHECK(max_abs_diff(res.snapshots.back().profile.G, abc.G) < 1e-5);
    CHECK(t1.gamma.max_abs() < 1e-7);
  }
}

TEST_CASE("separable Calabi-Yau closed form") {
  auto s0 = separable_cy(1.0, 1.0, 0.0, 0.0);
  CHECK(s0.G == 1.0);
  CHECK(s0.alpha == 1.0);
  auto s1 = separable_cy(1.0, 1.0, 0.375, 0.0);
  CHECK(s1.alpha == doctest::Approx(2.0));
  CHECK(s1.G == doctest::Approx(0.5));
  CHECK(separable_cy_blowup_time(1.0, 2.0) == 0.125);
  CHECK_THROWS_AS(separable_cy(1.0, 1.0, 0.5, 0.0), BeyondBlowUp);
  double prev = 0;
  for (double t = 0; t < 0.5; t += 0.01) {
    const double a = separable_cy(1.0, 1.0, t, 0.0).alpha;
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("separable Calabi-Yau evolution and blow-up") {
  const double l1 = 2.0, th = 1.0;
  const double T = separable_cy_blowup_time(l1, th);
  WarpedProfile p = separable_cy_profile(l1, th, 64);
  FlowOptions opt;
  opt.snapshot_stride = 1;
  auto res = evolve({0.0, p}, {2.0, 0.0}, 0.9 * T, {}, opt);
  REQUIRE_FALSE(res.blow_up);
  for (const auto& s : res.snapshots) {
    const auto exact = separable_cy(l1, th, s.t, 0.0);
    CHECK(std::abs(s.profile.G.max() / exact.G - 1) < 1e-4);
    CHECK(std::abs(compute_abc(s.profile).alpha.max() / exact.alpha - 1) < 1e-4);
  }
  auto full = evolve({0.0, p}, {2.0, 0.0}, 2 * T);
  REQUIRE(full.blow_up);
  CHECK(full.blow_up->t_last < T);
  CHECK(full.blow_up->t_last > 0.99 * T);
}

TEST_CASE("localized collapse is reported, small data decays") {
  Grid g(128, 0, 2 * kPi, Topology::Circle);
  auto run = [&](double amp) {
    WarpedProfile p(cst(g, 1), cst(g, 1), fn(g, [amp](double r) { return amp * std::sin(r); }), {0.0});
    return evolve({0.0, p}, {2.0, 0.0}, 2.0);
  };
  auto small = run(1.0);
  CHECK_FALSE(small.blow_up);
  CHECK(small.diagnostics.back().max_abs_alpha < 0.1);
  auto big = run(3.0);
  REQUIRE(big.blow_up);
  CHECK(big.blow_up->t_last < 0.1);
  for (const auto& d : big.diagnostics) CHECK(std::isfinite(d.max_abs_alpha));
}

TEST_CASE("trajectory csv") {
  Grid g(8, 0, 1, Topology::Circle);
  WarpedProfile p(cst(g, 1), cst(g, 1), cst(g, 0), {0.0});
  std::ostringstream os;
  write_trajectory_csv(os, {{0.0, p}, {0.5, p}});
  std::string s = os.str();
  CHECK(s.rfind("t,r,G,h,theta,alpha,beta,gamma,tau1,traceT\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 17);
}
