#pragma once

#include <functional>

#include "bdpp/bergman.hpp"
#include "bdpp/types.hpp"
#include "bdpp/weights.hpp"

namespace bdpp {

// Scalar symbol of a Toeplitz compression.  Either a plain compactly
// supported function, or exp(-scale * u) - 1, which inherits u's compact
// support and keeps I + T positive definite for every real scale.
struct Symbol {
  enum class Form { plain, exp_minus_one };
  Form form = Form::plain;
  TestFunction u;
  double scale = 1.0;

  static Symbol plain(const TestFunction& g);
  static Symbol exp_minus_one(const TestFunction& u, double scale);

  double eval(const CVec& z) const;
  bool is_zero() const { return u.is_zero(); }
};

// Matrix of the compressed multiplication operator f -> P(g f) in the
// orthonormal basis: M_ij = <e_i, g e_j>.  Hermitian by construction.
struct ToeplitzMatrix {
  CMat M;
  double k = 1.0;
  Symbol symbol;

  int dim() const { return static_cast<int>(M.rows()); }
};

ToeplitzMatrix toeplitz_matrix(const TruncatedBasis& basis, const Symbol& symbol);

// Operator route: Re tr M.
double trace_toeplitz(const ToeplitzMatrix& T);
// Quadrature route: integral of K(z,z) g(z) e^{-k phi(z)} over the grid.
double trace_formula_rhs(const TruncatedBasis& basis, const Symbol& symbol);

// log det(I + M) via Cholesky.  Throws (naming the smallest eigenvalue) if
// I + M is not positive definite.
double log_fredholm_det(const CMat& M);
double log_fredholm_det(const ToeplitzMatrix& T);

// Expansion route: sum over m <= dim of (1/m!) times the m-fold nested
// quadrature of det[K(z_a, z_b)] prod_a g(z_a) d mu(z_a).  Exact for
// projection kernels since higher terms vanish.  Deliberately O(nodes^dim);
// refuses when the basis dimension exceeds max_dim or the symbol support
// covers too many nodes.
double fredholm_det_series(const TruncatedBasis& basis, const Symbol& symbol, int max_dim = 3);

struct DerivativeCheck {
  double fd = 0.0;     // central difference of log det(I + M(t)) at t0
  double trace = 0.0;  // Re tr[(I + M(t0))^{-1} M'(t0)], M' by the same stencil
};

DerivativeCheck logdet_derivative_check(const std::function<CMat(double)>& path, double t0,
                                        double h);

// |log det(I + A M A^{-1}) - log det(I + M)| where A maps the `from` basis
// to the `to` basis of the same polynomial space (similarity invariance).
double basis_change_logdet_gap(const TruncatedBasis& from, const TruncatedBasis& to,
                               const CMat& M);

// Inverse-kernel identity: solving (I + M) x = coefficients of K_phi(., w)
// must reproduce the kernel of the shifted weight phi + (scale/k) u at the
// same k, grid and degree.  Returns the sup over deterministic probe pairs
// (20 quasi-random points inside supp u, 5 outside) of the mismatch,
// relative to the largest kernel value seen.
double toeplitz_inverse_kernel_residual(const TruncatedBasis& basis_phi,
                                        const TruncatedBasis& basis_shift,
                                        const TestFunction& u, double scale);

} // namespace bdpp
