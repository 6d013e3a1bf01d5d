#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bdpp/geometry.hpp"
#include "bdpp/types.hpp"
#include "bdpp/weights.hpp"

namespace bdpp {

struct MultiIndex {
  int a[2] = {0, 0};  // exponents; a[1] stays 0 when n == 1
  int degree = 0;
};

// All monomial exponents in n variables with total degree <= D, ordered by
// (degree, lexicographic).  The order is part of the contract: Gram rows,
// coefficient columns and pivot indices all refer to it.
struct MultiIndexSet {
  int n = 1;
  int D = 0;
  std::vector<MultiIndex> idx;

  static MultiIndexSet total_degree(int n, int D);
  int size() const { return static_cast<int>(idx.size()); }
};

// Orthonormal polynomial basis of the weighted space on a fixed grid:
// e_i = sum_alpha coeff(i, alpha) z^alpha with <e_i, e_j> = delta_ij in
// L^2(e^{-k phi} dlambda) discretized on the grid.  pivot[i] is the monomial
// whose elimination produced e_i and degree[i] its total degree.
struct TruncatedBasis {
  double k = 1.0;
  int D = 0;
  MultiIndexSet indices;
  CMat coeff;  // dim() x indices.size()
  std::vector<int> pivot;
  std::vector<int> degree;
  std::shared_ptr<const QuadratureGrid> grid;
  WeightFunction weight;

  int dim() const { return static_cast<int>(coeff.rows()); }
  int n() const { return indices.n; }
};

// Degree cutoff schedule: ceil(c * k * r^2) + 10 with r the circumradius of
// the domain about the origin.  With c = 3 the mass of the dropped tail is
// below 1e-10 for every k >= 1 (Poisson tail bound).
int degree_for_scale(double k, double circumradius, double c = 3.0);

// Resolution floor for degree-D assemblies: disk/bidisk need angular >= 2D+2
// and radial >= D+1 per factor, box needs >= D+1 per real axis.  Throws if
// the grid is too coarse.
void require_gram_resolution(const QuadratureGrid& grid, int D);

// Monomial Gram matrix G_{ab} = <z^a, z^b> under e^{-k phi} on the grid.
CMat gram_matrix(const QuadratureGrid& grid, double k, const WeightFunction& phi, int D);

// Diagonally-pivoted Cholesky of the equilibrated Gram.  Monomials whose
// pivot (their variance unexplained by already-retained ones, relative to
// their own norm) falls below drop_tol are dropped; the rest define an
// orthonormal basis.  Throws if G is indefinite beyond roundoff or nothing
// is retained.
TruncatedBasis orthonormalize(const CMat& G, const MultiIndexSet& indices,
                              std::shared_ptr<const QuadratureGrid> grid, double k,
                              const WeightFunction& phi, double drop_tol = 1e-10);

TruncatedBasis build_basis(std::shared_ptr<const QuadratureGrid> grid, double k,
                           const WeightFunction& phi, int D, double drop_tol = 1e-10);

// Monomial values: row p, column alpha = pts.row(p)^alpha.
CMat monomial_matrix(const CMat& pts, const MultiIndexSet& indices);
// Basis values: row p, column i = e_i(pts.row(p)).
CMat basis_matrix(const TruncatedBasis& basis, const CMat& pts);

// Reproducing kernel K(z, w) = sum_i e_i(z) conj(e_i(w)).
Complex kernel_eval(const TruncatedBasis& basis, const CVec& z, const CVec& w);

// One-point intensity K(z, z) e^{-k phi(z)}.
double bergman_density(const TruncatedBasis& basis, const CVec& z);
// Same at every grid node, assembled blockwise in fixed order.
RVec bergman_density_grid(const TruncatedBasis& basis);

// Semiclassical limit density det(complex Hessian of phi) / pi^n.
double density_limit(const WeightFunction& phi, const CVec& z);

struct Region {
  CVec center;
  double radius = 0.0;
};

// Share of K(z, z) carried by basis functions of top pivot degree, maximized
// over grid nodes in the region (default: ball of half the inradius about
// the centroid).  Small values certify that the degree cutoff does not
// influence kernel values on that region.
double truncation_tail_indicator(const TruncatedBasis& basis,
                                 const std::optional<Region>& region = std::nullopt);

// max_{ij} |<e_i, e_j> - delta_ij| recomputed from the grid.
double gram_residual(const TruncatedBasis& basis);

} // namespace bdpp
