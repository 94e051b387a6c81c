#include "g2flow/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "g2flow/errors.hpp"

namespace g2flow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The two polynomial right-hand sides of the k-general system.
double l_rate(double a, double b, double k, double C, double mu) {
  return (1.0 - k) * a * a + 3.0 * b * b + 6.0 * k * a * b + k * C * a - mu;
}
double h_rate(double a, double b, double k, double C, double mu) {
  return 3.0 * (1.0 - 2.0 * k) * b * b + (k - 1.0) * a * b - k * C * b - mu;
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

SolitonRates soliton_rhs_general_k(const SolitonState& s, const SolitonParams& p,
                                   double l_tol) {
  if (std::abs(s.l) <= l_tol)
    throw SingularAtLZero("soliton system is a constraint at l = 0");
  const double k = p.k;
  SolitonRates out;
  out.l = l_rate(s.alpha, s.beta, k, p.C, p.mu);
  out.beta = -h_rate(s.alpha, s.beta, k, p.C, p.mu) * (s.alpha + s.beta) / s.l;
  if (k == 1.0) {
    out.alpha = kNaN;
    out.constraint_only = true;
  } else {
    out.alpha = s.alpha * s.l / (k - 1.0) + 6.0 * out.beta;
  }
  return out;
}

SolitonRates soliton_rhs_nk(const SolitonState& s, const SolitonParams& p, double l_tol) {
  SolitonParams q = p;
  q.k = 2.0;
  return soliton_rhs_general_k(s, q, l_tol);
}

CYRates cy_soliton_rhs(double alpha, double l, double C) {
  return {alpha * l, -alpha * alpha + 2.0 * C * alpha};
}

double first_integral_R2(double alpha, double l, double C) {
  const double d = alpha - 2.0 * C;
  return l * l + d * d;
}

std::string to_string(CYKind k) {
  switch (k) {
    case CYKind::Parabolic: return "parabolic";
    case CYKind::Hyperbolic: return "hyperbolic";
    case CYKind::Trigonometric: return "trig";
  }
  return "unknown";
}

CYFamily CYFamily::make(double C, double R, double r0, double theta0, int sign) {
  if (!std::isfinite(C) || !std::isfinite(R) || !std::isfinite(r0) || !std::isfinite(theta0))
    throw DomainError("CY family parameters must be finite");
  if (R < 0.0) throw DomainError("CY family needs R >= 0");
  if (sign != 1 && sign != -1) throw DomainError("CY family sign must be +1 or -1");
  if (R == 0.0 && C == 0.0) throw DomainError("R = C = 0 is the torsion-free point");
  const double disc = R * R - 4.0 * C * C;
  CYKind kind;
  if (std::abs(disc) <= 1e-12 * std::max(R * R, 4.0 * C * C))
    kind = CYKind::Parabolic;
  else
    kind = disc > 0.0 ? CYKind::Hyperbolic : CYKind::Trigonometric;
  return {kind, C, R, r0, theta0, sign};
}

double CYFamily::Q() const {
  if (kind == CYKind::Parabolic) return 0.0;
  return std::sqrt(std::abs(R * R - 4.0 * C * C));
}

double CYFamily::alpha0() const {
  if (kind == CYKind::Parabolic) return 4.0 * C;
  return 2.0 * C + sign * R;
}

namespace {

CYPoint parabolic(const CYFamily& f, double rt) {
  const double C = f.C;
  const double den = 4.0 * C * C * rt * rt + 1.0;
  return {4.0 * C / den, -8.0 * C * C * rt / den, 2.0 * std::atan(2.0 * C * rt) + f.theta0};
}

CYPoint hyperbolic(const CYFamily& f, double rt) {
  const double C = f.C, R = f.R, Q = f.Q(), s = f.sign;
  const double shift = f.theta0 - 2.0 * std::atan((2.0 * C - s * R) / Q);
  CYPoint out;
  if (rt * Q >= 0.0) {
    const double x = std::exp(-rt * Q);
    const double d = x * R - 2.0 * s * C;
    const double den = d * d + Q * Q;
    out.alpha = s * 2.0 * R * Q * Q * x / den;
    out.l = R * R * Q * (x * x - 1.0) / den;
    out.theta = 2.0 * std::atan((2.0 * C - s * x * R) / Q) + shift;
  } else {
    // Same expressions divided through by x^2 = e^{-2 rt Q}, which overflows here.
    const double y = std::exp(rt * Q);
    const double d = R - 2.0 * s * C * y;
    const double den = d * d + Q * Q * y * y;
    out.alpha = s * 2.0 * R * Q * Q * y / den;
    out.l = R * R * Q * (1.0 - y * y) / den;
    out.theta = 2.0 * std::atan((2.0 * C * y - s * R) / (Q * y)) + shift;
  }
  return out;
}

// 2 arctan(k tan(phi)) continued through the poles of tan.
double continuous_half_angle(double k, double phi) {
  const double a = std::atan2(std::abs(k) * std::sin(phi), std::cos(phi));
  const double unwrapped = a + 2.0 * kPi * std::round((phi - a) / (2.0 * kPi));
  return 2.0 * sgn(k) * unwrapped;
}

CYPoint trigonometric(const CYFamily& f, double r, bool principal) {
  const double C = f.C, R = f.R, Q = f.Q();
  const double offset = f.sign > 0 ? kPi / Q : 0.0;
  const double rt = r - f.r0 + offset;
  const double den = 2.0 * C + R * std::cos(rt * Q);
  CYPoint out;
  out.alpha = Q * Q / den;
  out.l = Q * R * std::sin(rt * Q) / den;
  const double k = (2.0 * C - R) / Q;
  const double phi = rt * Q / 2.0;
  const double anchor = continuous_half_angle(k, offset * Q / 2.0);
  if (principal)
    out.theta = 2.0 * std::atan(k * std::tan(phi)) - anchor + f.theta0;
  else
    out.theta = continuous_half_angle(k, phi) - anchor + f.theta0;
  return out;
}

}  // namespace

CYPoint cy_closed_form(const CYFamily& f, double r, bool principal_branch) {
  if (!std::isfinite(r)) throw DomainError("cy_closed_form: r must be finite");
  switch (f.kind) {
    case CYKind::Parabolic:
      if (f.C == 0.0) throw DomainError("parabolic family needs C != 0");
      return parabolic(f, r - f.r0);
    case CYKind::Hyperbolic:
      if (!(f.R * f.R > 4.0 * f.C * f.C)) throw DomainError("hyperbolic family needs R^2 > 4C^2");
      return hyperbolic(f, r - f.r0);
    case CYKind::Trigonometric:
      if (!(f.R * f.R < 4.0 * f.C * f.C)) throw DomainError("trig family needs R^2 < 4C^2");
      return trigonometric(f, r, principal_branch);
  }
  throw DomainError("unknown CY family");
}

CYPeriodicity cy_periodicity(double C, double R, double circumference, double tol) {
  CYPeriodicity out;
  if (!(circumference > 0.0)) throw InvalidArgument("circumference must be positive");
  if (!(R >= 0.0) || R * R >= 4.0 * C * C) return out;
  const CYFamily f = CYFamily::make(C, R);
  if (f.kind != CYKind::Trigonometric) return out;
  out.Q = f.Q();
  const double nearest = std::round(out.Q);
  if (std::abs(out.Q - nearest) <= 1e-12 * std::max(1.0, out.Q))
    out.n = static_cast<long>(nearest);
  const double half = out.Q / 2.0, q2half = out.Q * out.Q / 2.0;
  out.q_is_2n = std::abs(half - std::round(half)) <= 1e-12 * std::max(1.0, half);
  out.q_squared_is_2n = std::abs(q2half - std::round(q2half)) <= 1e-12 * std::max(1.0, q2half);

  constexpr int kSamples = 64;
  for (int i = 0; i < kSamples; ++i) {
    const double r = circumference * i / kSamples;
    const CYPoint a = cy_closed_form(f, r);
    const CYPoint b = cy_closed_form(f, r + circumference);
    out.max_mismatch = std::max({out.max_mismatch, std::abs(a.alpha - b.alpha),
                                 std::abs(a.l - b.l), std::abs(std::cos(a.theta) - std::cos(b.theta)),
                                 std::abs(std::sin(a.theta) - std::sin(b.theta))});
  }
  out.periodic = out.max_mismatch <= tol;
  return out;
}

double residual(const SolitonJet& j, const SolitonParams& p, double lambda,
                bool include_coclosed) {
  const double a = j.alpha, b = j.beta, l = j.l, k = p.k;
  const double e1 = j.dl - l_rate(a, b, k, p.C, p.mu);
  const double e2 = (k - 1.0) * (j.dalpha - 6.0 * j.dbeta) - a * l;
  const double e3 = h_rate(a, b, k, p.C, p.mu) * (a + b) + j.dbeta * l;
  const double s = a + b;
  const double e4 = j.dbeta * j.dbeta - j.ddbeta * s + j.dbeta * (j.dalpha + j.dbeta) - a * b * s * s;
  double worst = std::max({std::abs(e1), std::abs(e2), std::abs(e3)});
  if (include_coclosed) worst = std::max(worst, std::abs(e4));
  if (lambda == 0.0) worst = std::max({worst, std::abs(b), std::abs(j.dbeta)});
  return worst;
}

double residual(const Field& alpha, const Field& beta, const Field& l,
                const SolitonParams& p, double lambda, bool include_coclosed) {
  require_same_grid(alpha, beta, "soliton residual");
  require_same_grid(alpha, l, "soliton residual");
  const Field da = diff(alpha), db = diff(beta), dl = diff(l);
  const Field ddb = diff(db);
  double worst = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const SolitonJet j{alpha[i], beta[i], l[i], da[i], db[i], dl[i], ddb[i]};
    worst = std::max(worst, residual(j, p, lambda, include_coclosed));
  }
  return worst;
}

std::vector<NKCatalogEntry> nk_constant_catalog(double C, double mu) {
  std::vector<NKCatalogEntry> out;
  out.push_back({1, 0.0, 0.0, true, -mu, mu, "any (C, mu)", ""});

  const double d2 = C * C - 9.0 * mu;
  if (d2 >= 0.0) {
    const double sq = std::sqrt(d2);
    for (double s : {1.0, -1.0}) {
      const double b = (-C + s * sq) / 9.0;
      out.push_back({2, 0.0, b, true, 2.0 * b * (6.0 * b + C), mu, "mu <= C^2/9",
                     s > 0 ? "+" : "-"});
      if (sq == 0.0) break;
    }
  }

  if (std::abs(mu - C * C / 12.0) <= 1e-14 * std::max(1.0, C * C))
    out.push_back({3, 0.0, -C / 6.0, true, 0.0, mu, "mu = C^2/12", ""});

  const double d4 = C * C - 10.0 * mu;
  if (d4 >= 0.0) {
    const double sq = std::sqrt(d4);
    for (double s : {1.0, -1.0}) {
      const double a = (C + s * sq) / 10.0;
      out.push_back({4, a, -a, false, 0.0, mu, "mu <= C^2/10", s > 0 ? "+" : "-"});
      if (sq == 0.0) break;
    }
  }

  if (mu >= 0.0) {
    const double sigma = std::sqrt(3.0 * mu);
    for (double s : {1.0, -1.0}) {
      out.push_back({5, 4.0 * s * sigma + 2.0 * C, s * sigma / 3.0, false, 0.0, mu, "mu >= 0",
                     s > 0 ? "+" : "-"});
      if (sigma == 0.0) break;
    }
  }
  for (NKCatalogEntry& e : out) {
    const double a = e.alpha.value_or(0.0), b = e.beta.value_or(0.0);
    e.coclosed_defect = std::abs(a * b * (a + b) * (a + b));
  }
  return out;
}

double catalog_residual(const NKCatalogEntry& e, double C, double l_sample) {
  SolitonJet j;
  j.alpha = e.alpha.value_or(0.0);
  j.beta = e.beta.value_or(0.0);
  j.l = e.l_arbitrary ? l_sample : 0.0;
  j.dl = e.l_slope;
  return residual(j, SolitonParams{C, e.mu, 2.0}, 1.0, false);
}

double nk_conserved_F(const SolitonState& s, double C, double mu) {
  const double a = s.alpha, b = s.beta;
  return a * s.l * s.l + 12.0 * (b * b * b + 6.0 * a * b * b - (a * a - 2.0 * C * a + mu) * b);
}

ConstantAlphaRates constant_alpha_rhs(double alpha, double beta, double l, double C, double mu) {
  return {-alpha * l / 6.0, l_rate(alpha, beta, 2.0, C, mu)};
}

namespace {

struct LZeroSystem {
  double C, mu;
  // P1 = l' at l = 0, P2 = the cleared beta equation at l = 0, with gradients.
  void eval(double a, double b, double P[2], double J[2][2]) const {
    const double q = 9.0 * b * b - a * b + 2.0 * C * b + mu;
    const double s = a + b;
    P[0] = -a * a + 3.0 * b * b + 12.0 * a * b + 2.0 * C * a - mu;
    P[1] = q * s;
    J[0][0] = -2.0 * a + 12.0 * b + 2.0 * C;
    J[0][1] = 6.0 * b + 12.0 * a;
    J[1][0] = -b * s + q;
    J[1][1] = (18.0 * b - a + 2.0 * C) * s + q;
  }

  std::optional<std::pair<double, double>> newton(double a, double b, double step_cap) const {
    const double a0 = a, b0 = b;
    // Newton is only linear at the tangential (double) roots of the special
    // values, hence the generous iteration count.
    for (int it = 0; it < 100; ++it) {
      double P[2], J[2][2];
      eval(a, b, P, J);
      const double scale = 1.0 + a * a + b * b + std::abs(C * a) + std::abs(mu);
      if (std::abs(P[0]) + std::abs(P[1]) <= 1e-14 * scale * (1.0 + std::abs(a + b)))
        return std::make_pair(a, b);
      const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
      if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
      a -= (P[0] * J[1][1] - P[1] * J[0][1]) / det;
      b -= (J[0][0] * P[1] - J[1][0] * P[0]) / det;
      if (std::hypot(a - a0, b - b0) > step_cap) return std::nullopt;
    }
    return std::nullopt;
  }
};

// Greedy clustering; centre = mean of members.
std::vector<std::pair<double, double>> cluster(const std::vector<std::pair<double, double>>& pts,
                                               double radius) {
  std::vector<std::pair<double, double>> centres;
  std::vector<double> counts;
  for (const auto& [a, b] : pts) {
    bool merged = false;
    for (std::size_t c = 0; c < centres.size() && !merged; ++c) {
      auto& [ca, cb] = centres[c];
      if (std::hypot(a - ca, b - cb) <= radius) {
        const double w = counts[c];
        ca = (ca * w + a) / (w + 1.0);
        cb = (cb * w + b) / (w + 1.0);
        counts[c] += 1.0;
        merged = true;
      }
    }
    if (!merged) {
      centres.emplace_back(a, b);
      counts.push_back(1.0);
    }
  }
  return centres;
}

}  // namespace

std::vector<std::pair<double, double>> l_zero_grid_search(double C, double mu, double box,
                                                          double delta) {
  if (!(box > 0.0) || !(delta > 0.0)) throw InvalidArgument("grid search needs box, delta > 0");
  const LZeroSystem sys{C, mu};
  const long m = static_cast<long>(std::llround(2.0 * box / delta));
  // First-order test: the zero set of P passes within about delta of (a, b)
  // when |P| <= delta (|P_a| + |P_b|). Near-tangent crossings leave long
  // bands of hits, so hits are only seeds for Newton.
  std::vector<std::pair<double, double>> hits;
  for (long i = 0; i <= m; ++i) {
    const double a = -box + static_cast<double>(i) * delta;
    for (long j = 0; j <= m; ++j) {
      const double b = -box + static_cast<double>(j) * delta;
      double P[2], J[2][2];
      sys.eval(a, b, P, J);
      if (std::abs(P[0]) > delta * (std::abs(J[0][0]) + std::abs(J[0][1]))) continue;
      if (std::abs(P[1]) > delta * (std::abs(J[1][0]) + std::abs(J[1][1]))) continue;
      hits.emplace_back(a, b);
    }
  }
  std::vector<std::pair<double, double>> roots;
  for (const auto& [a, b] : cluster(hits, 5.0 * delta)) {
    const auto r = sys.newton(a, b, 100.0 * delta);
    roots.push_back(r.value_or(std::make_pair(a, b)));
  }
  return cluster(roots, delta);
}

KMTPoint kmt_reduction(double b, double c, double r) {
  const double e = c * std::exp(b * r);
  const double e2 = e * e;
  if (!std::isfinite(e2)) {
    // c^2 e^{2br} overflowed: l -> -b, theta -> sign(c) pi.
    return {-b, sgn(c) * kPi, 0.0};
  }
  return {b * (1.0 - e2) / (1.0 + e2), 2.0 * std::atan(e), 2.0 * b * e / (1.0 + e2)};
}

CYFamily kmt_family(double b, double c) {
  if (b == 0.0 || c == 0.0) throw DomainError("kmt_family: b = 0 or c = 0 is a constant solution");
  const double Q = std::abs(b);
  const int sign = static_cast<int>(sgn(b) * sgn(c));
  return CYFamily::make(0.0, Q, -std::log(std::abs(c)) / b, sgn(c) * kPi / 2.0, sign);
}

SolitonSolution solve_soliton(const SolitonState& ics, const SolitonParams& p, double lambda,
                              std::pair<double, double> r_span, const StepControl& ctl,
                              double theta0, const std::vector<double>& output) {
  const bool cy = lambda == 0.0;
  if (cy && ics.beta != 0.0) throw InvalidArgument("Calabi-Yau solitons need beta = 0");
  if (cy && p.mu != 0.0) throw InvalidArgument("Calabi-Yau solitons force mu = 0");
  const double C = p.C;

  OdeRhs rhs;
  if (cy) {
    rhs = [C](double, std::span<const double> y, std::span<double> dy) {
      const CYRates r = cy_soliton_rhs(y[0], y[2], C);
      dy[0] = r.alpha;
      dy[1] = 0.0;
      dy[2] = r.l;
      dy[3] = y[0];
    };
  } else {
    if (std::abs(ics.l) <= kLZeroTolerance)
      throw SingularAtLZero("initial l = 0 lies on the constraint set");
    if (p.k == 1.0) throw InvalidArgument("k = 1 soliton system is a constraint, not an ODE");
    rhs = [p](double, std::span<const double> y, std::span<double> dy) {
      if (std::abs(y[2]) <= kLZeroTolerance || !std::isfinite(y[2])) {
        std::fill(dy.begin(), dy.end(), kNaN);
        return;
      }
      const SolitonRates r = soliton_rhs_general_k({y[0], y[1], y[2]}, p);
      dy[0] = r.alpha;
      dy[1] = r.beta;
      dy[2] = r.l;
      dy[3] = y[0];
    };
  }

  SolitonSolution sol;
  const double R2_0 = cy ? first_integral_R2(ics.alpha, ics.l, C) : kNaN;
  const double l_sign = sgn(ics.l);
  double last_l = ics.l;
  auto observer = [&](double r, std::span<const double> y) {
    SolitonSample s{r, y[0], y[1], y[2], y[3], kNaN};
    if (cy) {
      s.R2 = first_integral_R2(y[0], y[2], C);
      sol.max_R2_drift = std::max(sol.max_R2_drift, std::abs(s.R2 - R2_0));
    } else if (sgn(y[2]) != l_sign) {
      throw SingularAtLZero("trajectory crosses l = 0 near r = " + std::to_string(r));
    }
    last_l = y[2];
    sol.samples.push_back(s);
    return true;
  };

  OdeOptions opt;
  opt.output_times = output;
  opt.observer = observer;
  opt.keep_trajectory = false;
  try {
    sol.stats = integrate_ode(rhs, {ics.alpha, ics.beta, ics.l, theta0}, r_span.first,
                              r_span.second, ctl, opt)
                    .stats;
  } catch (const StepSizeUnderflow& e) {
    if (!cy && std::abs(last_l) < 1e-6)
      throw SingularAtLZero("trajectory approaches l = 0 near r = " + std::to_string(e.t_last()));
    throw;
  }
  return sol;
}

void write_phase_portrait_csv(std::ostream& out, const SolitonSolution& s) {
  out << "r,alpha,l,theta,R2\n";
  char buf[256];
  for (const SolitonSample& p : s.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", p.r, p.alpha, p.l, p.theta,
                  p.R2);
    out << buf;
  }
}

}  // namespace g2flow
