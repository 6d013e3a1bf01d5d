#include "bdpp/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bdpp/reduction.hpp"

namespace bdpp {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

} // namespace

DomainSpec DomainSpec::disk(double radius, Complex center) {
  require(radius > 0.0, "DomainSpec::disk: radius must be positive");
  DomainSpec d;
  d.kind = DomainKind::disk;
  d.n = 1;
  d.radius = radius;
  d.center = center;
  return d;
}

DomainSpec DomainSpec::bidisk(double r1, double r2) {
  require(r1 > 0.0 && r2 > 0.0, "DomainSpec::bidisk: radii must be positive");
  DomainSpec d;
  d.kind = DomainKind::bidisk;
  d.n = 2;
  d.r1 = r1;
  d.r2 = r2;
  return d;
}

DomainSpec DomainSpec::box(const std::vector<std::array<double, 2>>& intervals) {
  require(intervals.size() == 2 || intervals.size() == 4,
          "DomainSpec::box: need 2 or 4 real intervals (x1,y1[,x2,y2])");
  for (const auto& iv : intervals)
    require(iv[0] < iv[1], "DomainSpec::box: each interval needs lo < hi");
  DomainSpec d;
  d.kind = DomainKind::box;
  d.n = static_cast<int>(intervals.size()) / 2;
  d.intervals = intervals;
  return d;
}

bool DomainSpec::contains(const CVec& z) const {
  if (z.size() != n) throw std::invalid_argument("DomainSpec::contains: dimension mismatch");
  switch (kind) {
    case DomainKind::disk:
      return std::abs(z(0) - center) <= radius;
    case DomainKind::bidisk:
      return std::abs(z(0)) <= r1 && std::abs(z(1)) <= r2;
    case DomainKind::box:
      for (int j = 0; j < n; ++j) {
        const double x = z(j).real(), y = z(j).imag();
        if (x < intervals[2 * j][0] || x > intervals[2 * j][1]) return false;
        if (y < intervals[2 * j + 1][0] || y > intervals[2 * j + 1][1]) return false;
      }
      return true;
  }
  return false;
}

double DomainSpec::volume() const {
  switch (kind) {
    case DomainKind::disk:
      return kPi * radius * radius;
    case DomainKind::bidisk:
      return kPi * kPi * r1 * r1 * r2 * r2;
    case DomainKind::box: {
      double v = 1.0;
      for (const auto& iv : intervals) v *= iv[1] - iv[0];
      return v;
    }
  }
  return 0.0;
}

double DomainSpec::inradius() const {
  switch (kind) {
    case DomainKind::disk:
      return radius;
    case DomainKind::bidisk:
      return std::min(r1, r2);
    case DomainKind::box: {
      double h = std::numeric_limits<double>::infinity();
      for (const auto& iv : intervals) h = std::min(h, 0.5 * (iv[1] - iv[0]));
      return h;
    }
  }
  return 0.0;
}

double DomainSpec::circumradius() const {
  switch (kind) {
    case DomainKind::disk:
      return std::abs(center) + radius;
    case DomainKind::bidisk:
      return std::sqrt(r1 * r1 + r2 * r2);
    case DomainKind::box: {
      double s = 0.0;
      for (const auto& iv : intervals)
        s += std::max(iv[0] * iv[0], iv[1] * iv[1]);
      return std::sqrt(s);
    }
  }
  return 0.0;
}

CVec DomainSpec::centroid() const {
  CVec c = CVec::Zero(n);
  switch (kind) {
    case DomainKind::disk:
      c(0) = center;
      break;
    case DomainKind::bidisk:
      break;
    case DomainKind::box:
      for (int j = 0; j < n; ++j)
        c(j) = Complex(0.5 * (intervals[2 * j][0] + intervals[2 * j][1]),
                       0.5 * (intervals[2 * j + 1][0] + intervals[2 * j + 1][1]));
      break;
  }
  return c;
}

void DomainSpec::bounding_box(RVec& lo, RVec& hi) const {
  lo.resize(2 * n);
  hi.resize(2 * n);
  switch (kind) {
    case DomainKind::disk:
      lo << center.real() - radius, center.imag() - radius;
      hi << center.real() + radius, center.imag() + radius;
      break;
    case DomainKind::bidisk:
      lo << -r1, -r1, -r2, -r2;
      hi << r1, r1, r2, r2;
      break;
    case DomainKind::box:
      for (int a = 0; a < 2 * n; ++a) {
        lo(a) = intervals[a][0];
        hi(a) = intervals[a][1];
      }
      break;
  }
}

std::pair<RVec, RVec> gauss_legendre(int m) {
  require(m >= 1, "gauss_legendre: order must be >= 1");
  RVec x(m), w(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration on P_m from the Chebyshev-like initial guess.
    double z = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x(i) = -z;
    x(m - 1 - i) = z;
    const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
    w(i) = wi;
    w(m - 1 - i) = wi;
  }
  if (m % 2 == 1) x(half - 1) = 0.0;
  return {x, w};
}

namespace {

struct Rule1d {
  RVec t;  // nodes
  RVec w;  // weights
};

Rule1d gl_on(double a, double b, int m) {
  auto [x, w] = gauss_legendre(m);
  Rule1d r{RVec(m), RVec(m)};
  const double mid = 0.5 * (a + b), hal = 0.5 * (b - a);
  for (int i = 0; i < m; ++i) {
    r.t(i) = mid + hal * x(i);
    r.w(i) = hal * w(i);
  }
  return r;
}

// Polar rule for a disk of radius R about c: Gauss-Legendre in radius,
// uniform angles (trapezoid on the periodic direction, spectrally accurate).
void polar_nodes(double R, Complex c, int mr, int ma,
                 std::vector<Complex>& z, std::vector<double>& w) {
  const Rule1d rad = gl_on(0.0, R, mr);
  const double dtheta = 2.0 * kPi / ma;
  z.reserve(z.size() + static_cast<std::size_t>(mr) * ma);
  w.reserve(w.size() + static_cast<std::size_t>(mr) * ma);
  for (int i = 0; i < mr; ++i) {
    const double r = rad.t(i);
    const double wr = rad.w(i) * r * dtheta;
    for (int l = 0; l < ma; ++l) {
      const double th = dtheta * l;
      z.push_back(c + Complex(r * std::cos(th), r * std::sin(th)));
      w.push_back(wr);
    }
  }
}

} // namespace

QuadratureGrid build_quadrature(const DomainSpec& domain, const std::vector<int>& resolution) {
  for (int m : resolution)
    require(m >= 8, "build_quadrature: every resolution entry must be >= 8");

  QuadratureGrid g;
  g.domain = domain;
  g.resolution = resolution;

  switch (domain.kind) {
    case DomainKind::disk: {
      require(resolution.size() == 2, "build_quadrature: disk needs {radial, angular}");
      std::vector<Complex> z;
      std::vector<double> w;
      polar_nodes(domain.radius, domain.center, resolution[0], resolution[1], z, w);
      g.nodes.resize(static_cast<Eigen::Index>(z.size()), 1);
      g.weights.resize(static_cast<Eigen::Index>(z.size()));
      for (std::size_t i = 0; i < z.size(); ++i) {
        g.nodes(static_cast<Eigen::Index>(i), 0) = z[i];
        g.weights(static_cast<Eigen::Index>(i)) = w[i];
      }
      break;
    }
    case DomainKind::bidisk: {
      require(resolution.size() == 2 || resolution.size() == 4,
              "build_quadrature: bidisk needs {radial, angular} or {r1, a1, r2, a2}");
      const int mr1 = resolution[0], ma1 = resolution[1];
      const int mr2 = resolution.size() == 4 ? resolution[2] : resolution[0];
      const int ma2 = resolution.size() == 4 ? resolution[3] : resolution[1];
      std::vector<Complex> z1, z2;
      std::vector<double> w1, w2;
      polar_nodes(domain.r1, Complex(0, 0), mr1, ma1, z1, w1);
      polar_nodes(domain.r2, Complex(0, 0), mr2, ma2, z2, w2);
      const std::size_t total = z1.size() * z2.size();
      g.nodes.resize(static_cast<Eigen::Index>(total), 2);
      g.weights.resize(static_cast<Eigen::Index>(total));
      Eigen::Index row = 0;
      for (std::size_t i = 0; i < z1.size(); ++i)
        for (std::size_t j = 0; j < z2.size(); ++j, ++row) {
          g.nodes(row, 0) = z1[i];
          g.nodes(row, 1) = z2[j];
          g.weights(row) = w1[i] * w2[j];
        }
      break;
    }
    case DomainKind::box: {
      require(resolution.size() == static_cast<std::size_t>(2 * domain.n),
              "build_quadrature: box needs one resolution entry per real axis");
      std::vector<Rule1d> ax;
      for (int a = 0; a < 2 * domain.n; ++a)
        ax.push_back(gl_on(domain.intervals[a][0], domain.intervals[a][1], resolution[a]));
      std::size_t total = 1;
      for (const auto& r : ax) total *= static_cast<std::size_t>(r.t.size());
      g.nodes.resize(static_cast<Eigen::Index>(total), domain.n);
      g.weights.resize(static_cast<Eigen::Index>(total));
      std::vector<int> idx(2 * domain.n, 0);
      for (Eigen::Index row = 0; row < static_cast<Eigen::Index>(total); ++row) {
        double wt = 1.0;
        for (int j = 0; j < domain.n; ++j) {
          g.nodes(row, j) = Complex(ax[2 * j].t(idx[2 * j]), ax[2 * j + 1].t(idx[2 * j + 1]));
        }
        for (int a = 0; a < 2 * domain.n; ++a) wt *= ax[a].w(idx[a]);
        g.weights(row) = wt;
        for (int a = 2 * domain.n - 1; a >= 0; --a) {
          if (++idx[a] < static_cast<int>(ax[a].t.size())) break;
          idx[a] = 0;
        }
      }
      break;
    }
  }

  if ((g.weights.array() <= 0.0).any())
    throw std::runtime_error("build_quadrature: non-positive weight");
  const double vol = domain.volume();
  std::vector<double> wv(g.weights.data(), g.weights.data() + g.weights.size());
  const double wsum = pairwise_sum(wv);
  if (std::abs(wsum - vol) > 1e-12 * vol) {
    std::ostringstream os;
    os << "build_quadrature: weight sum " << wsum << " != volume " << vol;
    throw std::runtime_error(os.str());
  }
  return g;
}

Complex integrate(const QuadratureGrid& grid, const std::function<Complex(const CVec&)>& f) {
  const int m = grid.num_nodes();
  std::vector<Complex> terms(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const Complex v = f(grid.node(i));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream os;
      os << "integrate: non-finite integrand at node " << i << " (";
      for (int j = 0; j < grid.nodes.cols(); ++j)
        os << grid.nodes(i, j) << (j + 1 < grid.nodes.cols() ? ", " : ")");
      throw std::runtime_error(os.str());
    }
    terms[static_cast<std::size_t>(i)] = grid.weights(i) * v;
  }
  return pairwise_sum(terms);
}

double integrate_real(const QuadratureGrid& grid, const std::function<double(const CVec&)>& f) {
  const int m = grid.num_nodes();
  std::vector<double> terms(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double v = f(grid.node(i));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "integrate_real: non-finite integrand at node " << i;
      throw std::runtime_error(os.str());
    }
    terms[static_cast<std::size_t>(i)] = grid.weights(i) * v;
  }
  return pairwise_sum(terms);
}

} // namespace bdpp
