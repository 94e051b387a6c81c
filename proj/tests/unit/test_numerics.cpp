#include <cmath>
#include <numbers>

#include "doctest.h"
#include "g2flow/errors.hpp"
#include "g2flow/numerics.hpp"

using namespace g2flow;
namespace {
constexpr double kPi = std::numbers::pi;

double max_err(const Field& f, double (*exact)(double)) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    e = std::max(e, std::abs(f[i] - exact(f.grid().node(i))));
  return e;
}
}  // namespace

TEST_CASE("grid layout") {
  Grid c(8, 0.0, 2.0, Topology::Circle);
  CHECK(c.spacing() == doctest::Approx(0.25));
  Grid i(9, 0.0, 2.0, Topology::Interval);
  CHECK(i.spacing() == doctest::Approx(0.25));
  CHECK(i.node(8) == doctest::Approx(2.0));
  CHECK_THROWS_AS(Grid(7, 0.0, 1.0, Topology::Circle), InvalidArgument);
  CHECK_THROWS_AS(Grid(16, 1.0, 1.0, Topology::Circle), InvalidArgument);
}

TEST_CASE("diff of a constant vanishes") {
  Grid g(32, -1.0, 3.0, Topology::Interval);
  CHECK(diff(Field::constant(g, 4.5)).max_abs() < 1e-12);
  Grid c(32, 0.0, 1.0, Topology::Circle);
  CHECK(diff(Field::constant(c, -2.0)).max_abs() == 0.0);
}

TEST_CASE("diff of sin on the circle") {
  Grid g(256, 0.0, 2 * kPi, Topology::Circle);
  Field f = Field::from_function(g, [](double r) { return std::sin(r); });
  CHECK(max_err(diff(f), [](double r) { return std::cos(r); }) < 1e-7);
}

TEST_CASE("diff is exact on quartics on intervals") {
  Grid g(64, 0.0, 1.0, Topology::Interval);
  Field lin = Field::from_function(g, [](double r) { return r; });
  CHECK(max_err(diff(lin), [](double) { return 1.0; }) < 1e-10);
  Field q = Field::from_function(g, [](double r) { return r * r * r * r - 2 * r * r; });
  CHECK(max_err(diff(q), [](double r) { return 4 * r * r * r - 4 * r; }) < 1e-11);
}

TEST_CASE("diff honours a winding jump") {
  Grid g(128, 0.0, 2 * kPi, Topology::Circle);
  Field theta = Field::from_function(g, [](double r) { return r + 0.3 * std::sin(r); });
  Field d = diff(theta, 2 * kPi);
  CHECK(max_err(d, [](double r) { return 1.0 + 0.3 * std::cos(r); }) < 1e-6);
}

TEST_CASE("quadrature examples") {
  Grid g(64, 0.0, 3.0, Topology::Interval);
  CHECK(quadrature(Field::constant(g, 0.0), 0.0).max_abs() == 0.0);
  Field F = quadrature(Field::constant(g, 1.0), 0.0);
  CHECK(max_err(F, [](double r) { return r; }) < 1e-12);

  Grid g2(256, 0.0, 2 * kPi, Topology::Interval);
  Field c = Field::from_function(g2, [](double r) { return std::cos(r); });
  CHECK(max_err(quadrature(c, 0.0), [](double r) { return std::sin(r); }) < 1e-8);

  // Interior base point.
  Field F2 = quadrature(c, 1.0);
  CHECK(max_err(F2, [](double r) { return std::sin(r) - std::sin(1.0); }) < 2e-8);
}

TEST_CASE("diff after quadrature converges at fourth order") {
  auto f = [](double r) { return std::exp(std::sin(r)) * std::cos(3 * r); };
  double errs[3];
  int k = 0;
  for (std::size_t n : {64, 128, 256}) {
    Grid g(n, 0.0, 2.0, Topology::Interval);
    Field v = Field::from_function(g, f);
    errs[k++] = max_abs_diff(diff(quadrature(v, 0.0)), v);
  }
  CHECK(std::log2(errs[0] / errs[1]) > 3.5);
  CHECK(std::log2(errs[1] / errs[2]) > 3.5);
}

TEST_CASE("ode: constant solution") {
  auto rhs = [](double, std::span<const double>, std::span<double> d) {
    d[0] = d[1] = 0.0;
  };
  auto res = integrate_ode(rhs, {1.0, 2.0}, 0.0, 3.0, {});
  CHECK(res.trajectory.back().y[0] == 1.0);
  CHECK(res.trajectory.back().y[1] == 2.0);
}

TEST_CASE("ode: exponential growth") {
  auto rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0]; };
  StepControl ctl;
  auto res = integrate_ode(rhs, {1.0}, 0.0, 1.0, ctl);
  CHECK(std::abs(res.trajectory.back().y[0] - std::exp(1.0)) < 10 * ctl.rtol * std::exp(1.0));

  // Backward direction.
  auto back = integrate_ode(rhs, {std::exp(1.0)}, 1.0, 0.0, ctl);
  CHECK(std::abs(back.trajectory.back().y[0] - 1.0) < 1e-8);
}

TEST_CASE("ode: dense output at requested times") {
  auto rhs = [](double, std::span<const double> y, std::span<double> d) {
    d[0] = y[1];
    d[1] = -y[0];
  };
  OdeOptions opt;
  for (int i = 0; i <= 10; ++i) opt.output_times.push_back(0.3 * i);
  auto res = integrate_ode(rhs, {0.0, 1.0}, 0.0, 3.0, {}, opt);
  REQUIRE(res.trajectory.size() == 11);
  for (const auto& p : res.trajectory) {
    CHECK(std::abs(p.y[0] - std::sin(p.t)) < 1e-7);
    CHECK(std::abs(p.y[1] - std::cos(p.t)) < 1e-7);
  }
}

TEST_CASE("ode: finite-time blow-up underflows the step") {
  auto rhs = [](double, std::span<const double> y, std::span<double> d) { d[0] = y[0] * y[0]; };
  try {
    integrate_ode(rhs, {1.0}, 0.0, 2.0, {});
    FAIL("expected StepSizeUnderflow");
  } catch (const StepSizeUnderflow& e) {
    CHECK(e.t_last() < 1.0);
    CHECK(e.t_last() > 0.99);
  }
}

TEST_CASE("ode: step budget") {
  auto rhs = [](double t, std::span<const double>, std::span<double> d) { d[0] = std::cos(100 * t); };
  StepControl ctl;
  ctl.max_steps = 5;
  CHECK_THROWS_AS(integrate_ode(rhs, {0.0}, 0.0, 10.0, ctl), MaxStepsExceeded);
}
