#include "bdpp/dpp.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bdpp/reduction.hpp"
#include "bdpp/rng.hpp"

namespace bdpp {

namespace {

// Single-point basis evaluation, cheap enough for the proposal loop.
CVec basis_at(const TruncatedBasis& basis, const CVec& z) {
  CMat pts(1, basis.n());
  pts.row(0) = z.transpose();
  return basis_matrix(basis, pts).row(0).transpose();
}

} // namespace

DppSampler::DppSampler(const TruncatedBasis& basis, double envelope_factor) : basis_(basis) {
  if (!(envelope_factor > 1.0))
    throw std::invalid_argument("DppSampler: envelope_factor must exceed 1");
  env_ = envelope_factor * bergman_density_grid(basis_).maxCoeff();
  basis_.grid->domain.bounding_box(lo_, hi_);
}

PointConfiguration DppSampler::sample(std::uint64_t seed, std::uint64_t index) const {
  const int N = basis_.dim();
  const int n = basis_.n();
  const DomainSpec& dom = basis_.grid->domain;
  RngStream rng(seed, index);

  PointConfiguration cfg;
  cfg.points.resize(N, n);
  cfg.k = basis_.k;
  cfg.seed = seed;
  cfg.index = index;

  CMat F = CMat::Identity(N, N);  // orthonormal frame of the residual space
  constexpr long long kStageLimit = 2'000'000;

  for (int m = N; m > 0; --m) {
    long long proposals = 0;
    for (;;) {
      if (++proposals > kStageLimit) {
        std::ostringstream os;
        os << "DppSampler: acceptance rate below 1e-4 at stage " << m << " (seed " << seed
           << ", index " << index << ")";
        throw std::runtime_error(os.str());
      }
      CVec z(n);
      for (int j = 0; j < n; ++j) {
        const double x = lo_(2 * j) + (hi_(2 * j) - lo_(2 * j)) * rng.next_double();
        const double y = lo_(2 * j + 1) + (hi_(2 * j + 1) - lo_(2 * j + 1)) * rng.next_double();
        z(j) = Complex(x, y);
      }
      const double uacc = rng.next_double();
      if (!dom.contains(z)) continue;
      const CVec ev = basis_at(basis_, z);
      const CVec c = F.topRows(m) * ev;
      const double rho = c.squaredNorm() * std::exp(-basis_.k * basis_.weight.eval(z));
      const double a = rho / env_;
      if (a > 1.0) {
        std::ostringstream os;
        os << "DppSampler: envelope violated (ratio " << a << "); raise envelope_factor";
        throw std::runtime_error(os.str());
      }
      if (uacc >= a) continue;

      cfg.points.row(N - m) = z.transpose();

      // Deflate: rotate the frame so one row aligns with the accepted
      // direction, annihilate that direction in every row, drop the most
      // aligned row, then re-orthonormalize (MGS, two passes).
      const double cn = c.norm();
      int istar = 0;
      double best = -1.0;
      for (int i = 0; i < m; ++i)
        if (std::abs(c(i)) > best) {
          best = std::abs(c(i));
          istar = i;
        }
      const Eigen::RowVectorXcd g = (c.adjoint() * F.topRows(m)) / cn;
      F.topRows(m).noalias() -= (c / cn) * g;
      for (int r = istar; r < m - 1; ++r) F.row(r) = F.row(r + 1);

      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < m - 1; ++i) {
          for (int j = 0; j < i; ++j) {
            const Complex proj = F.row(j).dot(F.row(i));
            F.row(i) -= proj * F.row(j);
          }
          const double nm = F.row(i).norm();
          if (nm < 1e-10)
            throw std::runtime_error("DppSampler: degenerate frame after deflation");
          F.row(i) /= nm;
        }
      }
      break;
    }
  }
  return cfg;
}

PointConfiguration sample_dpp(const TruncatedBasis& basis, std::uint64_t seed) {
  return DppSampler(basis).sample(seed, 0);
}

McEstimate estimate_laplace_functional(const TruncatedBasis& basis, const TestFunction& u,
                                       double scale, int n_samples, std::uint64_t seed,
                                       int threads) {
  if (n_samples < 100)
    throw std::invalid_argument("estimate_laplace_functional: need at least 100 samples");
  if (threads < 1) threads = 1;
  const DppSampler sampler(basis);
  std::vector<double> vals(static_cast<std::size_t>(n_samples));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_samples) return;
      const PointConfiguration cfg =
          sampler.sample(seed, static_cast<std::uint64_t>(i));
      double s = 0.0;
      for (int p = 0; p < cfg.size(); ++p)
        s += u.eval(cfg.points.row(p).transpose());
      vals[static_cast<std::size_t>(i)] = std::exp(-scale * s);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McEstimate est;
  est.n_samples = n_samples;
  est.seed = seed;
  est.mean = pairwise_sum(vals) / n_samples;
  std::vector<double> dev(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double d = vals[i] - est.mean;
    dev[i] = d * d;
  }
  est.stderr_ = std::sqrt(pairwise_sum(dev) / (static_cast<double>(n_samples) *
                                               (static_cast<double>(n_samples) - 1.0)));
  return est;
}

IntensityHistogram empirical_intensity(const std::vector<PointConfiguration>& samples,
                                       const TruncatedBasis& basis, int radial, int angular) {
  if (radial < 1 || angular < 1)
    throw std::invalid_argument("empirical_intensity: need at least one bin per direction");
  const DomainSpec& dom = basis.grid->domain;
  if (dom.kind != DomainKind::disk)
    throw std::invalid_argument("empirical_intensity: binning is defined for disk domains");

  IntensityHistogram h;
  h.counts = RMat::Zero(radial, angular);
  h.expected = RMat::Zero(radial, angular);
  h.n_samples = static_cast<int>(samples.size());

  // Equal-area annuli: boundary_j = R sqrt(j / radial).
  const double R = dom.radius;
  auto bin_of = [&](const Complex& z) {
    const Complex d = z - dom.center;
    const double r = std::abs(d);
    int br = std::min(radial - 1, static_cast<int>(std::floor((r * r) / (R * R) * radial)));
    double th = std::arg(d);
    if (th < 0) th += 2.0 * std::numbers::pi;
    int bt = std::min(angular - 1, static_cast<int>(std::floor(th / (2.0 * std::numbers::pi) *
                                                               angular)));
    return std::pair<int, int>(br, bt);
  };

  for (const auto& cfg : samples)
    for (int p = 0; p < cfg.size(); ++p) {
      const auto [br, bt] = bin_of(cfg.points(p, 0));
      h.counts(br, bt) += 1.0;
    }

  // Expected counts by a dedicated polar rule per bin, so bin boundaries do
  // not shave quadrature mass off neighboring bins.
  const auto [xr, wr] = gauss_legendre(24);
  const int ma = 64;
  for (int br = 0; br < radial; ++br) {
    const double a = R * std::sqrt(static_cast<double>(br) / radial);
    const double b = R * std::sqrt(static_cast<double>(br + 1) / radial);
    for (int bt = 0; bt < angular; ++bt) {
      const double alpha = 2.0 * std::numbers::pi * bt / angular;
      const double dth = 2.0 * std::numbers::pi / angular / ma;
      double acc = 0.0;
      for (int i = 0; i < 24; ++i) {
        const double r = 0.5 * (a + b) + 0.5 * (b - a) * xr(i);
        const double wrad = 0.5 * (b - a) * wr(i) * r;
        for (int t = 0; t < ma; ++t) {
          const double th = alpha + dth * (t + 0.5);
          CVec z(1);
          z(0) = dom.center + Complex(r * std::cos(th), r * std::sin(th));
          acc += wrad * dth * bergman_density(basis, z);
        }
      }
      h.expected(br, bt) = acc;
    }
  }
  return h;
}

double expected_pair_count(const TruncatedBasis& basis, const Region& A, const Region& B) {
  const QuadratureGrid& grid = *basis.grid;
  const RVec dens = bergman_density_grid(basis);
  std::vector<int> ia, ib;
  for (int i = 0; i < grid.num_nodes(); ++i) {
    const double da = (grid.node(i) - A.center).norm();
    const double db = (grid.node(i) - B.center).norm();
    if (da <= A.radius) ia.push_back(i);
    if (db <= B.radius) ib.push_back(i);
  }
  auto pts_of = [&](const std::vector<int>& sel) {
    CMat pts(static_cast<Eigen::Index>(sel.size()), basis.n());
    for (std::size_t i = 0; i < sel.size(); ++i)
      pts.row(static_cast<Eigen::Index>(i)) = grid.nodes.row(sel[i]);
    return pts;
  };
  const CMat Ea = basis_matrix(basis, pts_of(ia));
  const CMat Eb = basis_matrix(basis, pts_of(ib));
  const CMat Kab = Ea * Eb.adjoint();
  double s = 0.0;
  for (std::size_t a = 0; a < ia.size(); ++a)
    for (std::size_t b = 0; b < ib.size(); ++b) {
      const int i = ia[a], j = ib[b];
      const double cross = std::norm(Kab(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) *
                           std::exp(-basis.k * (basis.weight.eval(grid.node(i)) +
                                                basis.weight.eval(grid.node(j))));
      s += grid.weights(i) * grid.weights(j) * (dens(i) * dens(j) - cross);
    }
  return s;
}

} // namespace bdpp
