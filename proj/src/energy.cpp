#include "bdpp/energy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bdpp/reduction.hpp"

namespace bdpp {

namespace {

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

// Hermitian determinant, real by construction.
double hdet(const CMat& H) {
  return (H.rows() == 1) ? H(0, 0).real() : H.determinant().real();
}

std::vector<int> support_nodes(const QuadratureGrid& grid, const TestFunction& u) {
  std::vector<int> sel;
  for (int i = 0; i < grid.num_nodes(); ++i)
    if ((grid.node(i) - u.center).norm() < u.radius) sel.push_back(i);
  return sel;
}

} // namespace

RVec mixed_determinant_density(const std::vector<CMat>& A, const std::vector<CMat>& B, int j) {
  if (A.size() != B.size()) throw std::invalid_argument("mixed_determinant_density: size mismatch");
  if (A.empty()) return RVec();
  const int n = static_cast<int>(A[0].rows());
  if (j < 0 || j > n) throw std::invalid_argument("mixed_determinant_density: j out of range");
  RVec out(static_cast<Eigen::Index>(A.size()));
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (n == 1) {
      out(static_cast<Eigen::Index>(i)) = (j == 1) ? A[i](0, 0).real() : B[i](0, 0).real();
    } else {
      // det(A + sB) = sigma_2 + sigma_1 s + sigma_0 s^2 in the s-degree
      // ordering of det(sA + tB); three evaluations pin the quadratic.
      const double p0 = hdet(A[i]);
      const double p1 = hdet(A[i] + B[i]);
      const double p2 = hdet(A[i] + 2.0 * B[i]);
      const double c0 = p0;
      const double c2 = 0.5 * (p2 - 2.0 * p1 + p0);
      const double c1 = p1 - c0 - c2;
      out(static_cast<Eigen::Index>(i)) = (j == 2) ? c0 : (j == 1 ? c1 : c2);
    }
  }
  return out;
}

EnergyReport ma_energy(const WeightFunction& phi, const TestFunction& u,
                       const QuadratureGrid& grid) {
  const int n = grid.domain.n;
  EnergyReport rep;
  rep.per_j.assign(static_cast<std::size_t>(n + 1), 0.0);
  if (u.is_zero()) return rep;

  const AdmissibilityReport adm = check_admissible(phi, u, grid);
  if (!adm.admissible)
    throw std::invalid_argument("ma_energy: u is not an admissible perturbation of phi");

  const std::vector<int> sel = support_nodes(grid, u);
  const std::size_t m = sel.size();
  std::vector<CMat> A(m), B(m);
  std::vector<double> uval(m), wt(m);
  for (std::size_t i = 0; i < m; ++i) {
    const CVec z = grid.node(sel[i]);
    const CMat Hu = u.hessian(z);
    B[i] = phi.hessian(z);
    A[i] = B[i] + Hu;
    uval[i] = u.eval(z);
    wt[i] = grid.weights(sel[i]);
  }

  const double pin = std::pow(std::numbers::pi, n);
  for (int j = 0; j <= n; ++j) {
    const RVec sig = mixed_determinant_density(A, B, j);
    std::vector<double> terms(m);
    for (std::size_t i = 0; i < m; ++i)
      terms[i] = wt[i] * uval[i] * sig(static_cast<Eigen::Index>(i));
    rep.per_j[static_cast<std::size_t>(j)] =
        factorial(j) * factorial(n - j) / (factorial(n + 1) * pin) * pairwise_sum(terms);
  }
  rep.energy = pairwise_sum(rep.per_j);
  return rep;
}

double ma_energy_derivative(const WeightFunction& phi, const TestFunction& u, double t,
                            const QuadratureGrid& grid) {
  const int n = grid.domain.n;
  if (u.is_zero()) return 0.0;
  const std::vector<int> sel = support_nodes(grid, u);
  const double pin = std::pow(std::numbers::pi, n);
  std::vector<double> terms(sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) {
    const CVec z = grid.node(sel[i]);
    const CMat H = phi.hessian(z) + t * u.hessian(z);
    terms[i] = grid.weights(sel[i]) * u.eval(z) * hdet(H) / pin;
  }
  return pairwise_sum(terms);
}

double energy_primitive_residual(const WeightFunction& phi, const TestFunction& u,
                                 const std::vector<double>& t_grid, double h,
                                 const QuadratureGrid& grid) {
  if (!(h > 0.0)) throw std::invalid_argument("energy_primitive_residual: h must be positive");
  for (double t : t_grid)
    if (t - h < 0.0 || t + h > 1.0)
      throw std::invalid_argument(
          "energy_primitive_residual: t +- h must stay inside [0, 1]");
  double worst = 0.0;
  for (double t : t_grid) {
    const double ep = ma_energy(phi, u.scaled(t + h), grid).energy;
    const double em = ma_energy(phi, u.scaled(t - h), grid).energy;
    const double fd = (ep - em) / (2.0 * h);
    const double an = ma_energy_derivative(phi, u, t, grid);
    worst = std::max(worst, std::abs(fd - an));
  }
  return worst;
}

} // namespace bdpp
