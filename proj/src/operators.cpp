#include "bdpp/operators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bdpp/reduction.hpp"

namespace bdpp {

namespace {

constexpr int kBlock = 4096;

// Nodes where the symbol is non-zero, with symbol value and measure
// w_i e^{-k phi(z_i)} attached.
struct SupportNodes {
  std::vector<int> index;
  std::vector<double> g;
  std::vector<double> mu;
};

SupportNodes collect_support(const TruncatedBasis& basis, const Symbol& symbol) {
  const QuadratureGrid& grid = *basis.grid;
  SupportNodes s;
  for (int i = 0; i < grid.num_nodes(); ++i) {
    const CVec z = grid.node(i);
    const double gv = symbol.eval(z);
    if (gv == 0.0) continue;
    s.index.push_back(i);
    s.g.push_back(gv);
    s.mu.push_back(grid.weights(i) * std::exp(-basis.k * basis.weight.eval(z)));
  }
  return s;
}

CMat points_at(const QuadratureGrid& grid, const std::vector<int>& index) {
  CMat pts(static_cast<Eigen::Index>(index.size()), grid.nodes.cols());
  for (std::size_t i = 0; i < index.size(); ++i)
    pts.row(static_cast<Eigen::Index>(i)) = grid.nodes.row(index[i]);
  return pts;
}

double van_der_corput(int i, int base) {
  double x = 0.0, f = 1.0 / base;
  while (i > 0) {
    x += f * (i % base);
    i /= base;
    f /= base;
  }
  return x;
}

// Distance from a point to the domain boundary along coordinate axes.
double boundary_margin(const DomainSpec& dom, const CVec& c) {
  switch (dom.kind) {
    case DomainKind::disk:
      return dom.radius - std::abs(c(0) - dom.center);
    case DomainKind::bidisk:
      return std::min(dom.r1 - std::abs(c(0)), dom.r2 - std::abs(c(1)));
    case DomainKind::box: {
      double m = std::numeric_limits<double>::infinity();
      for (int j = 0; j < dom.n; ++j) {
        const double x = c(j).real(), y = c(j).imag();
        m = std::min({m, x - dom.intervals[2 * j][0], dom.intervals[2 * j][1] - x,
                      y - dom.intervals[2 * j + 1][0], dom.intervals[2 * j + 1][1] - y});
      }
      return m;
    }
  }
  return 0.0;
}

} // namespace

Symbol Symbol::plain(const TestFunction& g) {
  Symbol s;
  s.form = Form::plain;
  s.u = g;
  s.scale = 1.0;
  return s;
}

Symbol Symbol::exp_minus_one(const TestFunction& u, double scale) {
  Symbol s;
  s.form = Form::exp_minus_one;
  s.u = u;
  s.scale = scale;
  return s;
}

double Symbol::eval(const CVec& z) const {
  const double v = u.eval(z);
  if (form == Form::plain) return v;
  return (v == 0.0) ? 0.0 : std::expm1(-scale * v);
}

ToeplitzMatrix toeplitz_matrix(const TruncatedBasis& basis, const Symbol& symbol) {
  if (!symbol.is_zero() && symbol.u.n != basis.n())
    throw std::invalid_argument("toeplitz_matrix: dimension mismatch");
  if (!symbol.u.support_inside(basis.grid->domain))
    throw std::invalid_argument("toeplitz_matrix: symbol support not inside the domain");
  const int N = basis.dim();
  ToeplitzMatrix T;
  T.k = basis.k;
  T.symbol = symbol;
  T.M = CMat::Zero(N, N);
  const SupportNodes s = collect_support(basis, symbol);
  const int total = static_cast<int>(s.index.size());
  for (int begin = 0; begin < total; begin += kBlock) {
    const int count = std::min(kBlock, total - begin);
    const std::vector<int> idx(s.index.begin() + begin, s.index.begin() + begin + count);
    const CMat E = basis_matrix(basis, points_at(*basis.grid, idx));
    CMat F = E;
    for (int i = 0; i < count; ++i) F.row(i) *= s.g[begin + i] * s.mu[begin + i];
    T.M.noalias() += E.adjoint() * F;
  }
  T.M = 0.5 * (T.M + T.M.adjoint()).eval();
  return T;
}

double trace_toeplitz(const ToeplitzMatrix& T) { return T.M.trace().real(); }

double trace_formula_rhs(const TruncatedBasis& basis, const Symbol& symbol) {
  const SupportNodes s = collect_support(basis, symbol);
  const int total = static_cast<int>(s.index.size());
  std::vector<double> terms(static_cast<std::size_t>(total));
  for (int begin = 0; begin < total; begin += kBlock) {
    const int count = std::min(kBlock, total - begin);
    const std::vector<int> idx(s.index.begin() + begin, s.index.begin() + begin + count);
    const CMat E = basis_matrix(basis, points_at(*basis.grid, idx));
    for (int i = 0; i < count; ++i)
      terms[static_cast<std::size_t>(begin + i)] =
          E.row(i).squaredNorm() * s.g[begin + i] * s.mu[begin + i];
  }
  return pairwise_sum(terms);
}

double log_fredholm_det(const CMat& M) {
  const int N = static_cast<int>(M.rows());
  const CMat A = CMat::Identity(N, N) + M;
  Eigen::LLT<CMat> llt(A);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()), Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "log_fredholm_det: I + M is not positive definite (min eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    throw std::runtime_error(os.str());
  }
  double ld = 0.0;
  const auto L = llt.matrixLLT();
  for (int i = 0; i < N; ++i) ld += std::log(L(i, i).real());
  return 2.0 * ld;
}

double log_fredholm_det(const ToeplitzMatrix& T) { return log_fredholm_det(T.M); }

double fredholm_det_series(const TruncatedBasis& basis, const Symbol& symbol, int max_dim) {
  const int N = basis.dim();
  if (N > max_dim) {
    std::ostringstream os;
    os << "fredholm_det_series: basis dimension " << N << " exceeds max_dim " << max_dim
       << "; the nested-sum route is only meant for tiny ranks";
    throw std::invalid_argument(os.str());
  }
  const SupportNodes s = collect_support(basis, symbol);
  const int m = static_cast<int>(s.index.size());
  if (m > 600)
    throw std::invalid_argument("fredholm_det_series: symbol support covers too many nodes");
  const CMat E = basis_matrix(basis, points_at(*basis.grid, s.index));
  const CMat K = E * E.adjoint();
  std::vector<double> c(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) c[static_cast<std::size_t>(i)] = s.g[i] * s.mu[i];

  double sum = 1.0;
  if (N >= 1) {
    double t1 = 0.0;
    for (int i = 0; i < m; ++i) t1 += K(i, i).real() * c[static_cast<std::size_t>(i)];
    sum += t1;
  }
  if (N >= 2) {
    double t2 = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double det2 = K(i, i).real() * K(j, j).real() - std::norm(K(i, j));
        t2 += det2 * c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j)];
      }
    sum += 0.5 * t2;
  }
  if (N >= 3) {
    double t3 = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const Complex kij = K(i, j);
        for (int l = 0; l < m; ++l) {
          const Complex det3 = K(i, i) * (K(j, j) * K(l, l) - K(j, l) * K(l, j)) -
                               kij * (K(j, i) * K(l, l) - K(j, l) * K(l, i)) +
                               K(i, l) * (K(j, i) * K(l, j) - K(j, j) * K(l, i));
          t3 += det3.real() * c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j)] *
                c[static_cast<std::size_t>(l)];
        }
      }
    sum += t3 / 6.0;
  }
  if (sum <= 0.0)
    throw std::runtime_error("fredholm_det_series: series sum is not positive");
  return std::log(sum);
}

DerivativeCheck logdet_derivative_check(const std::function<CMat(double)>& path, double t0,
                                        double h) {
  if (!(h > 0.0)) throw std::invalid_argument("logdet_derivative_check: h must be positive");
  const CMat Mp = path(t0 + h);
  const CMat Mm = path(t0 - h);
  DerivativeCheck out;
  out.fd = (log_fredholm_det(Mp) - log_fredholm_det(Mm)) / (2.0 * h);
  const CMat M0 = path(t0);
  const CMat dM = (Mp - Mm) / (2.0 * h);
  const int N = static_cast<int>(M0.rows());
  Eigen::LLT<CMat> llt(CMat(CMat::Identity(N, N) + M0));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("logdet_derivative_check: I + M(t0) is not positive definite");
  out.trace = llt.solve(dM).trace().real();
  return out;
}

double basis_change_logdet_gap(const TruncatedBasis& from, const TruncatedBasis& to,
                               const CMat& M) {
  if (from.dim() != to.dim() || from.indices.size() != to.indices.size())
    throw std::invalid_argument("basis_change_logdet_gap: bases must span the same space");
  // A solves A * C_from = C_to, i.e. it rewrites `to` functions in the
  // `from` coordinates.
  Eigen::CompleteOrthogonalDecomposition<CMat> cod(from.coeff.transpose());
  const CMat A = cod.solve(to.coeff.transpose()).transpose();
  Eigen::PartialPivLU<CMat> lu(A);
  const CMat sim = A * M * lu.inverse();
  const int N = static_cast<int>(sim.rows());
  Eigen::PartialPivLU<CMat> lu2(CMat(CMat::Identity(N, N) + sim));
  double ld = 0.0;
  for (int i = 0; i < N; ++i) ld += std::log(std::abs(lu2.matrixLU()(i, i)));
  return std::abs(ld - log_fredholm_det(M));
}

double toeplitz_inverse_kernel_residual(const TruncatedBasis& basis_phi,
                                        const TruncatedBasis& basis_shift,
                                        const TestFunction& u, double scale) {
  if (basis_phi.n() != basis_shift.n() || basis_phi.D != basis_shift.D ||
      basis_phi.k != basis_shift.k)
    throw std::invalid_argument("toeplitz_inverse_kernel_residual: bases must match in n, D, k");
  if (basis_phi.grid->num_nodes() != basis_shift.grid->num_nodes())
    throw std::invalid_argument("toeplitz_inverse_kernel_residual: bases must share one grid");
  const int n = basis_phi.n();
  const DomainSpec& dom = basis_phi.grid->domain;

  // 20 quasi-random probes inside supp(u), 5 on an axis-aligned ring
  // strictly between the support and the boundary.
  std::vector<CVec> probes;
  if (n == 1) {
    for (int i = 1; probes.size() < 20; ++i) {
      const double r = u.radius * std::sqrt(van_der_corput(i, 2));
      const double th = 2.0 * std::numbers::pi * van_der_corput(i, 3);
      CVec z(1);
      z(0) = u.center(0) + Complex(r * std::cos(th), r * std::sin(th));
      probes.push_back(z);
    }
  } else {
    for (int i = 1; probes.size() < 20; ++i) {
      const double a = 2.0 * van_der_corput(i, 2) - 1.0, b = 2.0 * van_der_corput(i, 3) - 1.0;
      const double cc = 2.0 * van_der_corput(i, 5) - 1.0, dd = 2.0 * van_der_corput(i, 7) - 1.0;
      if (a * a + b * b + cc * cc + dd * dd > 1.0) continue;
      CVec z(2);
      z(0) = u.center(0) + u.radius * Complex(a, b);
      z(1) = u.center(1) + u.radius * Complex(cc, dd);
      probes.push_back(z);
    }
  }
  const double margin = boundary_margin(dom, u.center);
  const double r_out = u.radius + 0.45 * (margin - u.radius);
  if (!(r_out > u.radius))
    throw std::invalid_argument("toeplitz_inverse_kernel_residual: no room outside supp(u)");
  for (int l = 0; l < 5; ++l) {
    const double th = 2.0 * std::numbers::pi * (l + 0.5) / 5.0;
    CVec z = u.center;
    z(l % n) += r_out * Complex(std::cos(th), std::sin(th));
    probes.push_back(z);
  }

  CMat pts(static_cast<Eigen::Index>(probes.size()), n);
  for (std::size_t i = 0; i < probes.size(); ++i)
    pts.row(static_cast<Eigen::Index>(i)) = probes[i].transpose();
  const CMat Ephi = basis_matrix(basis_phi, pts);      // probes x N
  const CMat Eshift = basis_matrix(basis_shift, pts);  // probes x N'

  const ToeplitzMatrix T = toeplitz_matrix(basis_phi, Symbol::exp_minus_one(u, scale));
  const int N = basis_phi.dim();
  Eigen::LLT<CMat> llt(CMat(CMat::Identity(N, N) + T.M));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("toeplitz_inverse_kernel_residual: operator not positive definite");

  // Coefficients of K_phi(., w_j) are conj(E_phi(w_j)); columns solved in bulk.
  const CMat X = llt.solve(Ephi.adjoint().eval());  // N x probes
  const CMat lhs = Ephi * X;                        // (z, w) grid of solved kernels
  const CMat rhs = Eshift * Eshift.adjoint();
  return ((lhs - rhs).cwiseAbs().array() / (1.0 + rhs.cwiseAbs().array())).maxCoeff();
}

} // namespace bdpp
