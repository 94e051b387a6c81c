#include "g2flow/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "g2flow/errors.hpp"

namespace g2flow {

Grid::Grid(std::size_t n, double r_min, double r_max, Topology topology)
    : n_(n), r_min_(r_min), r_max_(r_max), topology_(topology), dr_(0.0) {
  if (n < 8) throw InvalidArgument("grid needs at least 8 nodes");
  if (!std::isfinite(r_min) || !std::isfinite(r_max) || !(r_max > r_min))
    throw InvalidArgument("grid requires finite r_max > r_min");
  const double cells = topology == Topology::Circle ? static_cast<double>(n)
                                                    : static_cast<double>(n - 1);
  dr_ = (r_max - r_min) / cells;
}

std::vector<double> Grid::nodes() const {
  std::vector<double> r(n_);
  for (std::size_t i = 0; i < n_; ++i) r[i] = node(i);
  return r;
}

Field::Field(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw InvalidArgument("field length " + std::to_string(values_.size()) +
                          " does not match grid size " +
                          std::to_string(grid_.size()));
}

Field Field::constant(const Grid& grid, double c) {
  return Field(grid, std::vector<double>(grid.size(), c));
}

Field Field::from_function(const Grid& grid,
                           const std::function<double(double)>& f) {
  Field out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Field::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Field::min_abs() const noexcept {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values_) m = std::min(m, std::abs(v));
  return m;
}

double Field::min() const noexcept {
  return *std::min_element(values_.begin(), values_.end());
}

double Field::max() const noexcept {
  return *std::max_element(values_.begin(), values_.end());
}

void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (!(a.grid() == b.grid()))
    throw InvalidArgument(std::string(what) + ": fields live on different grids");
}

double max_abs_diff(const Field& a, const Field& b) {
  require_same_grid(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Field diff(const Field& f, double jump) {
  if (!f.all_finite()) throw InvalidArgument("diff: non-finite input");
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  const double inv = 1.0 / (12.0 * g.spacing());
  Field out(g);

  if (g.periodic()) {
    // Samples beyond the seam are continued as f(r + L) = f(r) + jump.
    auto at = [&](std::ptrdiff_t i) {
      const auto ni = static_cast<std::ptrdiff_t>(n);
      std::ptrdiff_t k = ((i % ni) + ni) % ni;
      double wraps = static_cast<double>((i - k) / ni);
      return f[static_cast<std::size_t>(k)] + wraps * jump;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::ptrdiff_t>(i);
      out[i] = (8.0 * (at(k + 1) - at(k - 1)) - (at(k + 2) - at(k - 2))) * inv;
    }
    return out;
  }

  // Written as differences so that constants differentiate to exactly zero.
  auto end = [&](std::size_t i0, std::ptrdiff_t step) {
    auto d = [&](std::ptrdiff_t k) {
      return f[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i0) + k * step)] - f[i0];
    };
    return 48.0 * d(1) - 36.0 * d(2) + 16.0 * d(3) - 3.0 * d(4);
  };
  auto near_end = [&](std::size_t i0, std::ptrdiff_t step) {
    auto d = [&](std::ptrdiff_t k) {
      return f[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i0) + k * step)] - f[i0];
    };
    return 18.0 * d(1) - 6.0 * d(2) + d(3) - 3.0 * d(-1);
  };
  out[0] = end(0, 1) * inv;
  out[1] = near_end(1, 1) * inv;
  for (std::size_t i = 2; i + 2 < n; ++i)
    out[i] = (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) * inv;
  out[n - 2] = -near_end(n - 2, -1) * inv;
  out[n - 1] = -end(n - 1, -1) * inv;
  return out;
}

namespace {

// Integral over [0, s] of the cubic through (offsets[j], values[j]) with unit
// spacing. Three-point Gauss-Legendre is exact for the cubic.
double partial_cubic_integral(const std::array<double, 4>& offsets,
                              const std::array<double, 4>& values, double s) {
  static constexpr std::array<double, 3> kNodes = {-0.7745966692414834, 0.0,
                                                   0.7745966692414834};
  static constexpr std::array<double, 3> kWeights = {5.0 / 9.0, 8.0 / 9.0,
                                                     5.0 / 9.0};
  double sum = 0.0;
  for (std::size_t q = 0; q < 3; ++q) {
    const double x = 0.5 * s * (kNodes[q] + 1.0);
    double p = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      double l = 1.0;
      for (std::size_t m = 0; m < 4; ++m)
        if (m != j) l *= (x - offsets[m]) / (offsets[j] - offsets[m]);
      p += l * values[j];
    }
    sum += kWeights[q] * p;
  }
  return 0.5 * s * sum;
}

}  // namespace

Field quadrature(const Field& f, double r0) {
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  const double dr = g.spacing();
  const double r_hi = g.periodic() ? g.r_max() : g.node(n - 1);
  if (!(r0 >= g.r_min() - 1e-12 * g.length() && r0 <= r_hi + 1e-12 * g.length()))
    throw InvalidArgument("quadrature: r0 outside grid range");

  // Stencil for cell [r_i, r_{i+1}]: indices and values of the four
  // interpolation points, expressed as offsets relative to node i.
  auto stencil = [&](std::size_t i, std::array<double, 4>& off,
                     std::array<double, 4>& val) {
    std::ptrdiff_t first;
    if (g.periodic()) {
      first = static_cast<std::ptrdiff_t>(i) - 1;
    } else {
      first = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - 1, 0,
                                         static_cast<std::ptrdiff_t>(n) - 4);
    }
    const auto ni = static_cast<std::ptrdiff_t>(n);
    for (std::size_t j = 0; j < 4; ++j) {
      const std::ptrdiff_t k = first + static_cast<std::ptrdiff_t>(j);
      off[j] = static_cast<double>(k - static_cast<std::ptrdiff_t>(i));
      val[j] = f[static_cast<std::size_t>(((k % ni) + ni) % ni)];
    }
  };

  // Cumulative integral from r_min at every node.
  std::vector<double> cum(n, 0.0);
  std::array<double, 4> off{}, val{};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    stencil(i, off, val);
    cum[i + 1] = cum[i] + dr * partial_cubic_integral(off, val, 1.0);
  }

  // Cumulative integral at r0.
  const std::size_t cells = g.periodic() ? n : n - 1;
  double s = (r0 - g.r_min()) / dr;
  std::size_t cell = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0,
                                                         static_cast<double>(cells - 1)));
  stencil(cell, off, val);
  const double at_r0 =
      cum[cell] + dr * partial_cubic_integral(off, val, s - static_cast<double>(cell));

  Field out(g);
  for (std::size_t i = 0; i < n; ++i) out[i] = cum[i] - at_r0;
  return out;
}

void StepControl::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw InvalidArgument("StepControl: rtol and atol must be positive");
  if (!(dt_init > 0.0) || !(dt_min > 0.0) || !(dt_min < dt_init))
    throw InvalidArgument("StepControl: need 0 < dt_min < dt_init");
  if (max_steps == 0) throw InvalidArgument("StepControl: max_steps must be positive");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (order 4).
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

}  // namespace

OdeResult integrate_ode(const OdeRhs& rhs, State y0, double t0, double t1,
                        const StepControl& ctl, const OdeOptions& options) {
  ctl.validate();
  if (!std::isfinite(t0) || !std::isfinite(t1) || t0 == t1)
    throw InvalidArgument("integrate_ode: need finite t0 != t1");
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const std::size_t m = y0.size();

  OdeResult result;
  OdeStats& stats = result.stats;

  auto emit = [&](double t, std::span<const double> y) {
    if (options.keep_trajectory)
      result.trajectory.push_back({t, State(y.begin(), y.end())});
    if (options.observer && !options.observer(t, y)) {
      stats.stopped_by_observer = true;
      return false;
    }
    return true;
  };

  std::size_t next_out = 0;
  const auto& outs = options.output_times;
  const bool dense = !outs.empty();

  State y = std::move(y0);
  double t = t0;
  if (!dense) {
    if (!emit(t, y)) {
      stats.t_final = t;
      return result;
    }
  } else {
    while (next_out < outs.size() && dir * (outs[next_out] - t0) <= 0.0) {
      if (!emit(outs[next_out], y)) {
        stats.t_final = t;
        return result;
      }
      ++next_out;
    }
  }

  std::vector<State> k(7, State(m));
  State ytmp(m), ynew(m), err(m);
  std::array<State, 5> rcont;
  for (auto& v : rcont) v.resize(m);

  auto call = [&](double tt, const State& yy, State& out) {
    rhs(tt, yy, out);
    ++stats.rhs_evals;
  };

  call(t, y, k[0]);
  double h = ctl.dt_init;
  bool last_rejected = false;
  std::size_t attempts = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++attempts > ctl.max_steps) throw MaxStepsExceeded(t);
    if (h < ctl.dt_min) throw StepSizeUnderflow(t, h);

    double step = h;
    bool final_step = false;
    if (step >= std::abs(t1 - t)) {
      step = std::abs(t1 - t);
      final_step = true;
    }
    const double hs = dir * step;

    for (std::size_t i = 0; i < m; ++i) ytmp[i] = y[i] + hs * a21 * k[0][i];
    call(t + c2 * hs, ytmp, k[1]);
    for (std::size_t i = 0; i < m; ++i)
      ytmp[i] = y[i] + hs * (a31 * k[0][i] + a32 * k[1][i]);
    call(t + c3 * hs, ytmp, k[2]);
    for (std::size_t i = 0; i < m; ++i)
      ytmp[i] = y[i] + hs * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    call(t + c4 * hs, ytmp, k[3]);
    for (std::size_t i = 0; i < m; ++i)
      ytmp[i] = y[i] + hs * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] +
                             a54 * k[3][i]);
    call(t + c5 * hs, ytmp, k[4]);
    for (std::size_t i = 0; i < m; ++i)
      ytmp[i] = y[i] + hs * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] +
                             a64 * k[3][i] + a65 * k[4][i]);
    call(t + hs, ytmp, k[5]);
    for (std::size_t i = 0; i < m; ++i)
      ynew[i] = y[i] + hs * (a71 * k[0][i] + a73 * k[2][i] + a74 * k[3][i] +
                             a75 * k[4][i] + a76 * k[5][i]);
    call(t + hs, ynew, k[6]);

    double err_norm = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = hs * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] +
                             e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
      const double scale =
          ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double ratio = std::abs(e) / scale;
      if (!std::isfinite(ratio) || !std::isfinite(ynew[i])) finite = false;
      err_norm = std::max(err_norm, ratio);
    }

    if (!finite) {
      ++stats.rejected;
      h = 0.25 * step;
      last_rejected = true;
      continue;
    }

    if (err_norm > 1.0) {
      ++stats.rejected;
      const double fac = std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      h = step * fac;
      last_rejected = true;
      continue;
    }

    // Accepted.
    ++stats.accepted;
    if (dense) {
      for (std::size_t i = 0; i < m; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = hs * k[0][i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - hs * k[6][i] - bspl;
        rcont[4][i] = hs * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] +
                            d5 * k[4][i] + d6 * k[5][i] + d7 * k[6][i]);
      }
    }
    const double t_new = final_step ? t1 : t + hs;

    if (dense) {
      State yout(m);
      while (next_out < outs.size() && dir * (outs[next_out] - t_new) <= 0.0) {
        const double theta = (outs[next_out] - t) / hs;
        const double theta1 = 1.0 - theta;
        for (std::size_t i = 0; i < m; ++i)
          yout[i] = rcont[0][i] +
                    theta * (rcont[1][i] +
                             theta1 * (rcont[2][i] +
                                       theta * (rcont[3][i] + theta1 * rcont[4][i])));
        if (!emit(outs[next_out], yout)) {
          stats.t_final = t_new;
          return result;
        }
        ++next_out;
      }
    }

    t = t_new;
    y.swap(ynew);
    std::swap(k[0], k[6]);
    if (!dense && !emit(t, y)) {
      stats.t_final = t;
      return result;
    }

    double fac = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 10.0;
    fac = std::clamp(fac, 0.2, 10.0);
    if (last_rejected) fac = std::min(fac, 1.0);
    // Keep the nominal step when this one was clipped to land on t1.
    h = (final_step ? std::max(h, step) : step) * fac;
    last_rejected = false;
  }

  stats.t_final = t;
  return result;
}

}  // namespace g2flow
