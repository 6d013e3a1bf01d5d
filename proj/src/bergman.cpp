#include "bdpp/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bdpp {

namespace {

constexpr int kBlock = 4096;

// Row weights sqrt(w_i e^{-k phi(z_i)}) for a node range.
RVec sqrt_measure(const QuadratureGrid& grid, double k, const WeightFunction& phi,
                  int begin, int count) {
  RVec s(count);
  for (int i = 0; i < count; ++i)
    s(i) = std::sqrt(grid.weights(begin + i) * std::exp(-k * phi.eval(grid.node(begin + i))));
  return s;
}

} // namespace

MultiIndexSet MultiIndexSet::total_degree(int n, int D) {
  if (n < 1 || n > 2) throw std::invalid_argument("MultiIndexSet: n must be 1 or 2");
  if (D < 0) throw std::invalid_argument("MultiIndexSet: D must be >= 0");
  MultiIndexSet s;
  s.n = n;
  s.D = D;
  for (int d = 0; d <= D; ++d) {
    if (n == 1) {
      s.idx.push_back({{d, 0}, d});
    } else {
      for (int a1 = d; a1 >= 0; --a1) s.idx.push_back({{a1, d - a1}, d});
    }
  }
  return s;
}

int degree_for_scale(double k, double circumradius, double c) {
  if (!(k > 0.0) || !(circumradius > 0.0) || !(c > 0.0))
    throw std::invalid_argument("degree_for_scale: arguments must be positive");
  return static_cast<int>(std::ceil(c * k * circumradius * circumradius)) + 10;
}

void require_gram_resolution(const QuadratureGrid& grid, int D) {
  const auto& res = grid.resolution;
  auto fail = [&](const char* what) {
    std::ostringstream os;
    os << "require_gram_resolution: " << what << " too coarse for degree " << D;
    throw std::invalid_argument(os.str());
  };
  switch (grid.domain.kind) {
    case DomainKind::disk:
      if (res[0] < D + 1) fail("radial resolution");
      if (res[1] < 2 * D + 2) fail("angular resolution");
      break;
    case DomainKind::bidisk: {
      const int mr2 = res.size() == 4 ? res[2] : res[0];
      const int ma2 = res.size() == 4 ? res[3] : res[1];
      if (res[0] < D + 1 || mr2 < D + 1) fail("radial resolution");
      if (res[1] < 2 * D + 2 || ma2 < 2 * D + 2) fail("angular resolution");
      break;
    }
    case DomainKind::box:
      for (int m : res)
        if (m < D + 1) fail("axis resolution");
      break;
  }
}

CMat monomial_matrix(const CMat& pts, const MultiIndexSet& indices) {
  const int m = static_cast<int>(pts.rows());
  const int n = indices.n;
  if (pts.cols() != n) throw std::invalid_argument("monomial_matrix: dimension mismatch");
  // Cumulative powers per coordinate, then per-index products.
  std::vector<CMat> pw(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    CMat& P = pw[static_cast<std::size_t>(j)];
    P.resize(m, indices.D + 1);
    P.col(0).setOnes();
    for (int a = 1; a <= indices.D; ++a)
      P.col(a) = P.col(a - 1).cwiseProduct(pts.col(j));
  }
  CMat M(m, indices.size());
  for (int c = 0; c < indices.size(); ++c) {
    const MultiIndex& al = indices.idx[static_cast<std::size_t>(c)];
    if (n == 1)
      M.col(c) = pw[0].col(al.a[0]);
    else
      M.col(c) = pw[0].col(al.a[0]).cwiseProduct(pw[1].col(al.a[1]));
  }
  return M;
}

CMat gram_matrix(const QuadratureGrid& grid, double k, const WeightFunction& phi, int D) {
  if (!(k > 0.0)) throw std::invalid_argument("gram_matrix: k must be positive");
  if (phi.n != grid.domain.n) throw std::invalid_argument("gram_matrix: dimension mismatch");
  require_gram_resolution(grid, D);
  const MultiIndexSet indices = MultiIndexSet::total_degree(grid.domain.n, D);
  const int M = indices.size();
  const int total = grid.num_nodes();
  CMat G = CMat::Zero(M, M);
  for (int begin = 0; begin < total; begin += kBlock) {
    const int count = std::min(kBlock, total - begin);
    CMat A = monomial_matrix(grid.nodes.middleRows(begin, count), indices);
    const CVec s = sqrt_measure(grid, k, phi, begin, count).cast<Complex>();
    A.array().colwise() *= s.array();
    G.noalias() += A.adjoint() * A;
  }
  G = 0.5 * (G + G.adjoint()).eval();
  return G;
}

TruncatedBasis orthonormalize(const CMat& G, const MultiIndexSet& indices,
                              std::shared_ptr<const QuadratureGrid> grid, double k,
                              const WeightFunction& phi, double drop_tol) {
  const int M = static_cast<int>(G.rows());
  if (G.cols() != M || M != indices.size())
    throw std::invalid_argument("orthonormalize: Gram/index size mismatch");
  if (!(drop_tol > 0.0) || drop_tol > 1e-2)
    throw std::invalid_argument("orthonormalize: drop_tol must lie in (0, 1e-2]");

  // Equilibrate to unit diagonal so the drop tolerance acts on correlation
  // scale; raw diagonals span many orders of magnitude at large k and a
  // relative-to-max pivot rule would discard genuinely independent
  // high-degree monomials.
  RVec d(M);
  for (int a = 0; a < M; ++a) {
    d(a) = G(a, a).real();
    if (!(d(a) > 0.0))
      throw std::runtime_error("orthonormalize: Gram has a non-positive diagonal entry");
  }
  const RVec s = d.array().rsqrt().matrix();
  const CVec sc = s.cast<Complex>();
  CMat Gh = (sc.asDiagonal() * G * sc.asDiagonal()).eval();

  // Diagonally-pivoted left-looking Cholesky on the equilibrated Gram.
  std::vector<int> pivots;
  std::vector<char> used(static_cast<std::size_t>(M), 0);
  RVec delta = RVec::Ones(M);
  CMat L = CMat::Zero(M, M);  // column r filled at step r, rows = original indices
  for (int r = 0; r < M; ++r) {
    int p = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < M; ++a)
      if (!used[static_cast<std::size_t>(a)] && delta(a) > best) {
        best = delta(a);
        p = a;
      }
    if (p < 0) break;
    if (best < -1e-8)
      throw std::runtime_error("orthonormalize: Gram is indefinite beyond roundoff");
    if (best <= drop_tol) break;
    used[static_cast<std::size_t>(p)] = 1;
    pivots.push_back(p);
    const double lrr = std::sqrt(best);
    L(p, r) = lrr;
    for (int a = 0; a < M; ++a) {
      if (used[static_cast<std::size_t>(a)]) continue;
      Complex c = Gh(a, p);
      for (int t = 0; t < r; ++t) c -= L(a, t) * std::conj(L(p, t));
      L(a, r) = c / lrr;
      delta(a) -= std::norm(L(a, r));
    }
  }
  const int N = static_cast<int>(pivots.size());
  if (N == 0) throw std::runtime_error("orthonormalize: no monomial retained");

  // Invert the retained triangular block.  The Gram conjugates the first
  // argument, so Gh = Lp Lp^H makes e_i = sum_{j<=i} conj(inv(Lp)_{ij}) mhat_{p_j}
  // the orthonormal family; forgetting the conjugate only shows up once the
  // Gram has genuinely complex entries.
  CMat Lp = CMat::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j <= i; ++j) Lp(i, j) = L(pivots[static_cast<std::size_t>(i)], j);
  const CMat Linv = Lp.triangularView<Eigen::Lower>().solve(CMat::Identity(N, N));

  TruncatedBasis b;
  b.k = k;
  b.D = indices.D;
  b.indices = indices;
  b.coeff = CMat::Zero(N, M);
  b.pivot = pivots;
  b.degree.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const int pi = pivots[static_cast<std::size_t>(i)];
    b.degree[static_cast<std::size_t>(i)] = indices.idx[static_cast<std::size_t>(pi)].degree;
    for (int j = 0; j <= i; ++j) {
      const int pj = pivots[static_cast<std::size_t>(j)];
      b.coeff(i, pj) = std::conj(Linv(i, j)) * s(pj);
    }
  }
  b.grid = std::move(grid);
  b.weight = phi;
  return b;
}

TruncatedBasis build_basis(std::shared_ptr<const QuadratureGrid> grid, double k,
                           const WeightFunction& phi, int D, double drop_tol) {
  if (!grid) throw std::invalid_argument("build_basis: null grid");
  const CMat G = gram_matrix(*grid, k, phi, D);
  const MultiIndexSet indices = MultiIndexSet::total_degree(grid->domain.n, D);
  return orthonormalize(G, indices, std::move(grid), k, phi, drop_tol);
}

CMat basis_matrix(const TruncatedBasis& basis, const CMat& pts) {
  return monomial_matrix(pts, basis.indices) * basis.coeff.transpose();
}

Complex kernel_eval(const TruncatedBasis& basis, const CVec& z, const CVec& w) {
  CMat pts(2, basis.n());
  pts.row(0) = z.transpose();
  pts.row(1) = w.transpose();
  const CMat E = basis_matrix(basis, pts);
  return (E.row(0) * E.row(1).adjoint())(0, 0);
}

double bergman_density(const TruncatedBasis& basis, const CVec& z) {
  CMat pts(1, basis.n());
  pts.row(0) = z.transpose();
  const CMat E = basis_matrix(basis, pts);
  return E.row(0).squaredNorm() * std::exp(-basis.k * basis.weight.eval(z));
}

RVec bergman_density_grid(const TruncatedBasis& basis) {
  const QuadratureGrid& grid = *basis.grid;
  const int total = grid.num_nodes();
  RVec dens(total);
  for (int begin = 0; begin < total; begin += kBlock) {
    const int count = std::min(kBlock, total - begin);
    const CMat E = basis_matrix(basis, grid.nodes.middleRows(begin, count));
    for (int i = 0; i < count; ++i)
      dens(begin + i) =
          E.row(i).squaredNorm() * std::exp(-basis.k * basis.weight.eval(grid.node(begin + i)));
  }
  return dens;
}

double density_limit(const WeightFunction& phi, const CVec& z) {
  const CMat H = phi.hessian(z);
  const double det = (phi.n == 1) ? H(0, 0).real() : H.determinant().real();
  return det / std::pow(std::numbers::pi, phi.n);
}

double truncation_tail_indicator(const TruncatedBasis& basis,
                                 const std::optional<Region>& region) {
  const QuadratureGrid& grid = *basis.grid;
  Region reg;
  if (region) {
    reg = *region;
    if (reg.center.size() != basis.n())
      throw std::invalid_argument("truncation_tail_indicator: region dimension mismatch");
  } else {
    reg.center = grid.domain.centroid();
    reg.radius = 0.5 * grid.domain.inradius();
  }
  const int Dtop = *std::max_element(basis.degree.begin(), basis.degree.end());
  std::vector<int> sel;
  for (int i = 0; i < grid.num_nodes(); ++i)
    if ((grid.node(i) - reg.center).norm() <= reg.radius) sel.push_back(i);
  if (sel.empty())
    throw std::runtime_error("truncation_tail_indicator: no grid node in the region");
  CMat pts(static_cast<Eigen::Index>(sel.size()), basis.n());
  for (std::size_t i = 0; i < sel.size(); ++i)
    pts.row(static_cast<Eigen::Index>(i)) = grid.nodes.row(sel[i]);
  const CMat E = basis_matrix(basis, pts);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < E.rows(); ++i) {
    double top = 0.0, all = 0.0;
    for (int j = 0; j < basis.dim(); ++j) {
      const double a = std::norm(E(i, j));
      all += a;
      if (basis.degree[static_cast<std::size_t>(j)] == Dtop) top += a;
    }
    if (all > 0.0) worst = std::max(worst, top / all);
  }
  return worst;
}

double gram_residual(const TruncatedBasis& basis) {
  const QuadratureGrid& grid = *basis.grid;
  const int total = grid.num_nodes();
  const int N = basis.dim();
  CMat G = CMat::Zero(N, N);
  for (int begin = 0; begin < total; begin += kBlock) {
    const int count = std::min(kBlock, total - begin);
    CMat E = basis_matrix(basis, grid.nodes.middleRows(begin, count));
    const CVec s = sqrt_measure(grid, basis.k, basis.weight, begin, count).cast<Complex>();
    E.array().colwise() *= s.array();
    G.noalias() += E.adjoint() * E;
  }
  return (G - CMat::Identity(N, N)).cwiseAbs().maxCoeff();
}

} // namespace bdpp
