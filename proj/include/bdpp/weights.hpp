#pragma once

#include <functional>
#include <vector>

#include "bdpp/geometry.hpp"
#include "bdpp/types.hpp"

namespace bdpp {

// Smooth real weight on C^n together with its complex Hessian
// H_{jk} = d^2 f / (dz_j dconj(z_k)), an n x n Hermitian matrix field.
struct WeightFunction {
  int n = 1;
  std::function<double(const CVec&)> eval;
  std::function<CMat(const CVec&)> hessian;

  // c * |z|^2; complex Hessian c * I.
  static WeightFunction quadratic(double c, int n);
  // sum_j c_j |z_j|^2; complex Hessian diag(c).
  static WeightFunction quadratic_diagonal(const std::vector<double>& cs);
  // Arbitrary smooth weight; Hessian by finite differences with step
  // h = fd_scale * (1 + |z|).
  static WeightFunction custom(std::function<double(const CVec&)> f, int n,
                               double fd_scale = 1e-4);
};

// Compactly supported perturbation: identically zero outside the closed ball
// B(center, radius); eval and hessian enforce that by construction.
struct TestFunction {
  int n = 1;
  CVec center;
  double radius = 0.0;
  double amplitude = 0.0;
  bool identically_zero = true;

  static TestFunction zero(int n);
  // amplitude * exp(-s/(1-s)) with s = |z-center|^2/radius^2, the classic
  // C^infinity bump; Hessian in closed form.
  static TestFunction bump(const CVec& center, double radius, double amplitude);
  // Arbitrary smooth profile inside the support ball (forced to 0 outside);
  // Hessian by finite differences on the truncated function.
  static TestFunction custom(std::function<double(const CVec&)> f, const CVec& center,
                             double radius, double fd_scale = 1e-4);

  double eval(const CVec& z) const;
  CMat hessian(const CVec& z) const;
  bool is_zero() const { return identically_zero; }
  // c * u with the same support; c = 0 collapses to the zero function.
  TestFunction scaled(double c) const;
  // Support ball strictly inside the domain (positive margin).
  bool support_inside(const DomainSpec& domain) const;

 private:
  std::function<double(const CVec&)> eval_fn_;
  std::function<CMat(const CVec&)> hess_fn_;
};

// Complex Hessian by central differences on the 2n real coordinates:
// d/dz d/dconj(z) = 1/4 (dxx + dyy) + i/4 (dxy - dyx), Hermitized.
CMat complex_hessian_fd(const std::function<double(const CVec&)>& f, const CVec& z, double h);

// Smallest eigenvalue of a Hermitian matrix (closed form for n <= 2).
double hermitian_lambda_min(const CMat& H);

struct AdmissibilityReport {
  double lambda_min_t0 = 0.0;  // min over grid nodes of lambda_min(H_phi)
  double lambda_min_t1 = 0.0;  // same for H_phi + H_u
  bool admissible = false;     // both endpoint minima strictly positive
};

// t -> lambda_min(H_phi + t H_u) is concave, so positivity on [0,1] follows
// from positivity at the endpoints.  Throws if supp(u) is not strictly
// inside the grid's domain.
AdmissibilityReport check_admissible(const WeightFunction& phi, const TestFunction& u,
                                     const QuadratureGrid& grid);

// phi + t*u as a WeightFunction (same dimension).
WeightFunction shifted_weight(const WeightFunction& phi, const TestFunction& u, double t);

} // namespace bdpp
