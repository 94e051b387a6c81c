#pragma once

// Calculus of SU(3)-equivariant 3-forms
//   chi = 1/2 A F^3 Omega + 1/2 conj(A F^3 Omega) + G h^2 B dr ^ omega,
// with F = h e^{i theta/3}, stored as (Re A, Im A, B).

#include "g2flow/geometry.hpp"
#include "g2flow/numerics.hpp"

namespace g2flow {

struct SymThreeForm {
  Field re1;  // Re A
  Field im1;  // Im A
  Field re2;  // B

  const Grid& grid() const noexcept { return re1.grid(); }
  /// phi itself: (1, 0, 1).
  static SymThreeForm phi(const Grid& grid);
};

/// chi = X -| psi + i_phi(s), with X = x_coeff G^{-1} d/dr and
/// s = s_rr G^2 dr^2 + s_6 h^2 g_6.
struct G2Decomp {
  Field x_coeff;
  Field s_rr;
  Field s_6;
  Field trace_s;

  /// Eigenvalues of s with one index raised: (s_rr, s_6 repeated six times).
  const Field& s_sharp_r() const noexcept { return s_rr; }
  const Field& s_sharp_6() const noexcept { return s_6; }
};

G2Decomp g2_decompose(const SymThreeForm& chi);

/// Components of *d(chi).
SymThreeForm star_d(const SymThreeForm& chi, const WarpedProfile& p);
/// *d(phi), through star_d with chi = phi.
SymThreeForm star_d_phi(const WarpedProfile& p);

/// d*chi = five_form_coeff G h^3 dr ^ omega^2 and
/// *d*chi = 4 h^{-1} two_form_coeff (G^{-1} d/dr) -| phi.
struct DStar {
  Field five_form_coeff;
  Field two_form_coeff;
};
DStar d_star(const SymThreeForm& chi, const WarpedProfile& p);

/// Hodge Laplacian of phi from its torsion. Written with a single division by
/// (alpha + beta), multiplied by gamma, so gamma = 0 nodes are regular.
/// Throws SingularDenominator where gamma != 0 and |alpha + beta| underflows.
SymThreeForm laplacian_phi(const TorsionABC& t, const Field& G);

/// Laplacian of a co-closed phi: (alpha^2 - 3 alpha beta + 12 beta^2,
/// G^{-1}(6 beta' - alpha'), -4 beta (alpha - 3 beta)). laplacian_phi
/// evaluates exactly this expression before adding its gamma terms.
SymThreeForm laplacian_phi_coclosed(const Field& alpha, const Field& beta,
                                    const Field& G);

/// G2-decomposition of the Laplacian of a co-closed phi, in closed form.
/// Throws NotCoClosed when max |gamma| exceeds tol * max(1, |alpha|, |beta|).
G2Decomp laplacian_g2_decomp(const TorsionABC& t, const Field& G,
                             double tol = kClassTolerance);

}  // namespace g2flow
