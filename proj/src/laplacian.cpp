#include "g2flow/laplacian.hpp"

#include <algorithm>
#include <cmath>

#include "g2flow/errors.hpp"

namespace g2flow {

SymThreeForm SymThreeForm::phi(const Grid& grid) {
  return {Field::constant(grid, 1.0), Field::constant(grid, 0.0),
          Field::constant(grid, 1.0)};
}

namespace {

void require_form_grid(const SymThreeForm& chi) {
  require_same_grid(chi.re1, chi.im1, "3-form");
  require_same_grid(chi.re1, chi.re2, "3-form");
}

}  // namespace

G2Decomp g2_decompose(const SymThreeForm& chi) {
  require_form_grid(chi);
  const Grid& g = chi.grid();
  Field x(g), s_rr(g), s_6(g), tr(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    x[i] = chi.im1[i];
    s_rr[i] = 3.0 * chi.re2[i] - 2.0 * chi.re1[i];
    s_6[i] = chi.re1[i];
    tr[i] = 3.0 * chi.re2[i] + 4.0 * chi.re1[i];
  }
  return {std::move(x), std::move(s_rr), std::move(s_6), std::move(tr)};
}

SymThreeForm star_d(const SymThreeForm& chi, const WarpedProfile& p) {
  require_form_grid(chi);
  require_same_grid(chi.re1, p.G, "star_d");
  const Grid& g = p.grid();
  const double lambda = p.lambda();
  const Field dtheta = diff(p.theta, p.theta_jump());
  const Field dh = diff(p.h);
  const Field dre = diff(chi.re1);
  const Field dim = diff(chi.im1);
  Field re1(g), im1(g), re2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double G = p.G[i], h = p.h[i];
    const double s = std::sin(p.theta[i]), c = std::cos(p.theta[i]);
    const double a = chi.re1[i], b = chi.im1[i], B = chi.re2[i];
    const double log_h = dh[i] / h;
    re1[i] = (dim[i] + 3.0 * log_h * b + dtheta[i] * a - 3.0 * lambda * B * G * s / h) / G;
    im1[i] = (-dre[i] - 3.0 * log_h * a + dtheta[i] * b - 3.0 * lambda * B * G * c / h) / G;
    re2[i] = -4.0 * lambda / h * (s * a + c * b);
  }
  return {std::move(re1), std::move(im1), std::move(re2)};
}

SymThreeForm star_d_phi(const WarpedProfile& p) {
  return star_d(SymThreeForm::phi(p.grid()), p);
}

DStar d_star(const SymThreeForm& chi, const WarpedProfile& p) {
  require_form_grid(chi);
  require_same_grid(chi.re1, p.G, "d_star");
  const Grid& g = p.grid();
  const double lambda = p.lambda();
  const Field dh = diff(p.h);
  const Field dB = diff(chi.re2);
  Field five(g), two(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double G = p.G[i], h = p.h[i], B = chi.re2[i];
    const double mix = lambda * (std::cos(p.theta[i]) * chi.re1[i] -
                                 std::sin(p.theta[i]) * chi.im1[i]);
    five[i] = 0.5 * dB[i] * h / G + 2.0 * dh[i] * B / G + 2.0 * mix;
    two[i] = 0.25 * dB[i] * h / G + dh[i] * B / G + mix;
  }
  return {std::move(five), std::move(two)};
}

SymThreeForm laplacian_phi_coclosed(const Field& alpha, const Field& beta,
                                    const Field& G) {
  require_same_grid(alpha, beta, "laplacian");
  require_same_grid(alpha, G, "laplacian");
  const Grid& g = alpha.grid();
  const Field da = diff(alpha);
  const Field db = diff(beta);
  Field re1(g), im1(g), re2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = alpha[i], b = beta[i];
    re1[i] = a * a - 3.0 * b * a + 12.0 * b * b;
    im1[i] = (6.0 * db[i] - da[i]) / G[i];
    re2[i] = -4.0 * b * (a - 3.0 * b);
  }
  return {std::move(re1), std::move(im1), std::move(re2)};
}

SymThreeForm laplacian_phi(const TorsionABC& t, const Field& G) {
  require_same_grid(t.alpha, t.gamma, "laplacian");
  SymThreeForm out = laplacian_phi_coclosed(t.alpha, t.beta, G);
  if (t.gamma.max_abs() == 0.0) return out;

  const Grid& g = t.grid();
  const Field db = diff(t.beta);
  const Field dgamma = diff(t.gamma);
  const Field dG = diff(G);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double c = t.gamma[i];
    if (c == 0.0 && dgamma[i] == 0.0) continue;
    const double a = t.alpha[i], b = t.beta[i], Gi = G[i];
    const double inv_g2 = 1.0 / (Gi * Gi);
    // Derivative of gamma along the unit normal, times G: gamma' - gamma G'/G.
    const double dgam = dgamma[i] - c * dG[i] / Gi;
    double frac_re1 = 0.0, frac_re2 = 0.0;
    if (c != 0.0) {
      const double sum = a + b;
      const double threshold = 1e-13 * std::max({std::abs(a), std::abs(b), 1.0});
      if (std::abs(sum) < threshold)
        throw SingularDenominator("alpha + beta vanishes where gamma != 0 at r=" +
                                  std::to_string(g.node(i)));
      frac_re1 = (c * (4.0 * b - 3.0 * a) + 7.0 * db[i]) / sum;
      frac_re2 = (c * (3.0 * b - 2.0 * a) + 5.0 * db[i]) / sum;
    }
    out.re1[i] += 3.0 * inv_g2 * (-dgam + c * frac_re1);
    out.im1[i] += -6.0 * c * a / Gi;
    out.re2[i] += 4.0 * inv_g2 * (-dgam + c * frac_re2);
  }
  return out;
}

G2Decomp laplacian_g2_decomp(const TorsionABC& t, const Field& G, double tol) {
  require_same_grid(t.alpha, t.gamma, "laplacian_g2_decomp");
  require_same_grid(t.alpha, G, "laplacian_g2_decomp");
  const double scale = std::max({1.0, t.alpha.max_abs(), t.beta.max_abs()});
  if (t.gamma.max_abs() > tol * scale)
    throw NotCoClosed("laplacian_g2_decomp requires gamma = 0");
  const Grid& g = t.grid();
  const Field da = diff(t.alpha);
  const Field db = diff(t.beta);
  Field x(g), s_rr(g), s_6(g), tr(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = t.alpha[i], b = t.beta[i];
    x[i] = (6.0 * db[i] - da[i]) / G[i];
    s_rr[i] = -2.0 * a * (a + 3.0 * b) + 12.0 * b * b;
    s_6[i] = a * a - 3.0 * b * a + 12.0 * b * b;
    tr[i] = s_rr[i] + 6.0 * s_6[i];
  }
  return {std::move(x), std::move(s_rr), std::move(s_6), std::move(tr)};
}

}  // namespace g2flow
