#pragma once

#include <limits>
#include <vector>

#include "bdpp/geometry.hpp"
#include "bdpp/types.hpp"
#include "bdpp/weights.hpp"

namespace bdpp {

struct EnergyReport {
  double energy = 0.0;
  std::vector<double> per_j;  // n+1 mixed-term contributions, summing to energy
  // Filled by energy_primitive_residual; NaN until then.
  double derivative_check = std::numeric_limits<double>::quiet_NaN();
};

// sigma_j(A, B): coefficient of s^j t^(n-j) in det(sA + tB), per node.
// A and B are Hermitian complex Hessians at the same points.
RVec mixed_determinant_density(const std::vector<CMat>& A, const std::vector<CMat>& B, int j);

// Relative energy of the perturbed weight phi + u against phi:
//   (1/(n+1)!) sum_{j=0}^n j!(n-j)! / pi^n * integral of u sigma_j(H_phi + H_u, H_phi).
// Requires u admissible for phi on the grid; returns 0 immediately for u == 0.
EnergyReport ma_energy(const WeightFunction& phi, const TestFunction& u,
                       const QuadratureGrid& grid);

// d/dt of t -> ma_energy(phi, t u): integral of u det(H_phi + t H_u) / pi^n.
double ma_energy_derivative(const WeightFunction& phi, const TestFunction& u, double t,
                            const QuadratureGrid& grid);

// max over the t grid of |central difference of ma_energy - ma_energy_derivative|.
// Every t +- h must stay inside [0, 1].
double energy_primitive_residual(const WeightFunction& phi, const TestFunction& u,
                                 const std::vector<double>& t_grid, double h,
                                 const QuadratureGrid& grid);

} // namespace bdpp
