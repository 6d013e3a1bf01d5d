#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "bdpp/types.hpp"

namespace bdpp {

enum class DomainKind { disk, bidisk, box };

// Bounded domain in C^n, n in {1,2}.  Supported shapes: a disk in C, a
// bidisk (product of two disks centered at the origin) in C^2, and an
// axis-aligned box given by one real interval per real coordinate
// (x1, y1[, x2, y2]).
struct DomainSpec {
  DomainKind kind = DomainKind::disk;
  int n = 1;
  Complex center{0.0, 0.0};
  double radius = 1.0;
  double r1 = 1.0, r2 = 1.0;
  std::vector<std::array<double, 2>> intervals;

  static DomainSpec disk(double radius, Complex center = Complex(0.0, 0.0));
  static DomainSpec bidisk(double r1, double r2);
  static DomainSpec box(const std::vector<std::array<double, 2>>& intervals);

  bool contains(const CVec& z) const;
  double volume() const;       // Lebesgue volume, closed form
  double inradius() const;     // radius of the largest ball centered at centroid()
  double circumradius() const; // sup of |z| over the domain, about the origin
  CVec centroid() const;
  // Axis-aligned bounding box in the 2n real coordinates (x1, y1[, x2, y2]).
  void bounding_box(RVec& lo, RVec& hi) const;
};

// Deterministic quadrature rule over a DomainSpec.  Disks get a polar rule
// (Gauss-Legendre in radius, uniform angles); products are tensors of the
// factor rules.  Node order is fixed by construction, so any fixed-order
// reduction over the nodes is reproducible.
struct QuadratureGrid {
  DomainSpec domain;
  std::vector<int> resolution;
  CMat nodes;    // num_nodes x n
  RVec weights;  // strictly positive, sums to domain volume

  int num_nodes() const { return static_cast<int>(nodes.rows()); }
  CVec node(int i) const { return nodes.row(i).transpose(); }
};

// Gauss-Legendre nodes and weights on [-1,1], exactly symmetric about 0.
std::pair<RVec, RVec> gauss_legendre(int m);

// resolution: disk {radial, angular}; bidisk {radial, angular} applied to
// both factors, or {r1, a1, r2, a2}; box one entry per real axis.
// Every entry must be >= 8.
QuadratureGrid build_quadrature(const DomainSpec& domain, const std::vector<int>& resolution);

// Fixed-order pairwise-summed quadrature of a scalar field over the grid.
// Throws if the integrand is non-finite at any node.
Complex integrate(const QuadratureGrid& grid, const std::function<Complex(const CVec&)>& f);
double integrate_real(const QuadratureGrid& grid, const std::function<double(const CVec&)>& f);

} // namespace bdpp
