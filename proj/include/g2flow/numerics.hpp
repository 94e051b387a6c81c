#pragma once

// Uniform 1D grids on the interval factor L, fourth-order differentiation and
// quadrature, and an adaptive Dormand-Prince 5(4) integrator with dense output.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace g2flow {

enum class Topology { Circle, Interval };

/// Uniform grid. Circle grids exclude r_max (identified with r_min);
/// Interval grids include both endpoints.
class Grid {
 public:
  Grid(std::size_t n, double r_min, double r_max, Topology topology);

  std::size_t size() const noexcept { return n_; }
  double r_min() const noexcept { return r_min_; }
  double r_max() const noexcept { return r_max_; }
  Topology topology() const noexcept { return topology_; }
  bool periodic() const noexcept { return topology_ == Topology::Circle; }
  double length() const noexcept { return r_max_ - r_min_; }
  double spacing() const noexcept { return dr_; }
  double node(std::size_t i) const noexcept {
    return r_min_ + static_cast<double>(i) * dr_;
  }
  std::vector<double> nodes() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_;
  double r_min_;
  double r_max_;
  Topology topology_;
  double dr_;
};

/// Real samples on a grid.
class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, std::vector<double> values);

  static Field constant(const Grid& grid, double c);
  static Field from_function(const Grid& grid,
                             const std::function<double(double)>& f);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  bool all_finite() const noexcept;
  double max_abs() const noexcept;
  double min_abs() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  /// Pointwise map.
  template <class F>
  Field map(F&& f) const {
    Field out(grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) out[i] = f(values_[i]);
    return out;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// max_i |a_i - b_i|; fields must share a grid.
double max_abs_diff(const Field& a, const Field& b);
void require_same_grid(const Field& a, const Field& b, const char* what);

/// d/dr with fourth-order stencils: periodic central differences on Circle
/// grids, central interior plus one-sided end stencils on Interval grids.
///
/// `jump` is f(r + L) - f(r) on a Circle grid, for quantities such as an
/// unwrapped phase that wind around the circle; it is ignored on intervals.
Field diff(const Field& f, double jump = 0.0);

/// F(r) = integral of f from r0 to r, using per-cell integrals of the local
/// cubic interpolant. F(r0) = 0 even when r0 is not a node.
Field quadrature(const Field& f, double r0);

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-12;
  double dt_init = 1e-3;
  double dt_min = 1e-12;
  std::size_t max_steps = 10'000'000;

  void validate() const;
};

using State = std::vector<double>;
using OdeRhs =
    std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
/// Called with each output point. Returning false stops the integration early.
using OdeObserver = std::function<bool(double t, std::span<const double> y)>;

struct TrajectoryPoint {
  double t;
  State y;
};
using Trajectory = std::vector<TrajectoryPoint>;

struct OdeOptions {
  /// When non-empty, output only at these (increasing) times via dense output;
  /// otherwise at t0 and after every accepted step.
  std::vector<double> output_times;
  OdeObserver observer;
  /// Whether to collect the output points into the returned trajectory.
  bool keep_trajectory = true;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double t_final = 0.0;
  bool stopped_by_observer = false;
};

struct OdeResult {
  Trajectory trajectory;
  OdeStats stats;
};

/// Adaptive Dormand-Prince 5(4) integration from t0 to t1 (either direction).
/// Per-step error (max norm) is kept below atol + rtol * |y|.
/// Throws StepSizeUnderflow when the controller asks for dt < dt_min and
/// MaxStepsExceeded after ctl.max_steps attempts.
OdeResult integrate_ode(const OdeRhs& rhs, State y0, double t0, double t1,
                        const StepControl& ctl, const OdeOptions& options = {});

}  // namespace g2flow
