#include "bdpp/weights.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdpp {

WeightFunction WeightFunction::quadratic(double c, int n) {
  if (n < 1 || n > 2) throw std::invalid_argument("WeightFunction::quadratic: n must be 1 or 2");
  if (!(c > 0.0)) throw std::invalid_argument("WeightFunction::quadratic: c must be positive");
  WeightFunction w;
  w.n = n;
  w.eval = [c](const CVec& z) { return c * z.squaredNorm(); };
  w.hessian = [c, n](const CVec&) { return CMat(c * CMat::Identity(n, n)); };
  return w;
}

WeightFunction WeightFunction::quadratic_diagonal(const std::vector<double>& cs) {
  const int n = static_cast<int>(cs.size());
  if (n < 1 || n > 2)
    throw std::invalid_argument("WeightFunction::quadratic_diagonal: need 1 or 2 coefficients");
  for (double c : cs)
    if (!(c > 0.0))
      throw std::invalid_argument("WeightFunction::quadratic_diagonal: coefficients must be positive");
  WeightFunction w;
  w.n = n;
  w.eval = [cs, n](const CVec& z) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += cs[static_cast<std::size_t>(j)] * std::norm(z(j));
    return s;
  };
  CMat H = CMat::Zero(n, n);
  for (int j = 0; j < n; ++j) H(j, j) = cs[static_cast<std::size_t>(j)];
  w.hessian = [H](const CVec&) { return H; };
  return w;
}

WeightFunction WeightFunction::custom(std::function<double(const CVec&)> f, int n,
                                      double fd_scale) {
  if (n < 1 || n > 2) throw std::invalid_argument("WeightFunction::custom: n must be 1 or 2");
  WeightFunction w;
  w.n = n;
  w.eval = f;
  w.hessian = [f, fd_scale](const CVec& z) {
    return complex_hessian_fd(f, z, fd_scale * (1.0 + z.norm()));
  };
  return w;
}

namespace {

// exp(-s/(1-s)) and its first two derivatives, s in [0,1).
struct BumpProfile {
  double g, gp, gpp;
};

BumpProfile bump_profile(double s) {
  const double om = 1.0 - s;
  const double g = std::exp(-s / om);
  return {g, -g / (om * om), g * (2.0 * s - 1.0) / (om * om * om * om)};
}

} // namespace

TestFunction TestFunction::zero(int n) {
  if (n < 1 || n > 2) throw std::invalid_argument("TestFunction::zero: n must be 1 or 2");
  TestFunction u;
  u.n = n;
  u.center = CVec::Zero(n);
  u.radius = 0.0;
  u.amplitude = 0.0;
  u.identically_zero = true;
  return u;
}

TestFunction TestFunction::bump(const CVec& center, double radius, double amplitude) {
  const int n = static_cast<int>(center.size());
  if (n < 1 || n > 2) throw std::invalid_argument("TestFunction::bump: center must be in C^1 or C^2");
  if (!(radius > 0.0)) throw std::invalid_argument("TestFunction::bump: radius must be positive");
  TestFunction u;
  u.n = n;
  u.center = center;
  u.radius = radius;
  u.amplitude = amplitude;
  u.identically_zero = (amplitude == 0.0);
  const double rho2 = radius * radius;
  u.eval_fn_ = [center, rho2, amplitude](const CVec& z) {
    const double s = (z - center).squaredNorm() / rho2;
    if (s >= 1.0) return 0.0;
    return amplitude * bump_profile(s).g;
  };
  u.hess_fn_ = [center, rho2, amplitude, n](const CVec& z) {
    const CVec v = z - center;
    const double s = v.squaredNorm() / rho2;
    if (s >= 1.0) return CMat(CMat::Zero(n, n));
    const BumpProfile p = bump_profile(s);
    CMat H = (amplitude * p.gp / rho2) * CMat::Identity(n, n);
    H += (amplitude * p.gpp / (rho2 * rho2)) * (v.conjugate() * v.transpose());
    return H;
  };
  return u;
}

TestFunction TestFunction::custom(std::function<double(const CVec&)> f, const CVec& center,
                                  double radius, double fd_scale) {
  const int n = static_cast<int>(center.size());
  if (n < 1 || n > 2) throw std::invalid_argument("TestFunction::custom: center must be in C^1 or C^2");
  if (!(radius > 0.0)) throw std::invalid_argument("TestFunction::custom: radius must be positive");
  TestFunction u;
  u.n = n;
  u.center = center;
  u.radius = radius;
  u.amplitude = 1.0;
  u.identically_zero = false;
  const double rho2 = radius * radius;
  auto truncated = [f, center, rho2](const CVec& z) {
    if ((z - center).squaredNorm() >= rho2) return 0.0;
    return f(z);
  };
  u.eval_fn_ = truncated;
  u.hess_fn_ = [truncated, center, rho2, fd_scale, n](const CVec& z) {
    if ((z - center).squaredNorm() >= rho2) return CMat(CMat::Zero(n, n));
    return complex_hessian_fd(truncated, z, fd_scale * (1.0 + z.norm()));
  };
  return u;
}

double TestFunction::eval(const CVec& z) const {
  if (z.size() != n) throw std::invalid_argument("TestFunction::eval: dimension mismatch");
  if (identically_zero) return 0.0;
  return eval_fn_(z);
}

CMat TestFunction::hessian(const CVec& z) const {
  if (z.size() != n) throw std::invalid_argument("TestFunction::hessian: dimension mismatch");
  if (identically_zero) return CMat::Zero(n, n);
  return hess_fn_(z);
}

TestFunction TestFunction::scaled(double c) const {
  if (identically_zero || c == 0.0) return TestFunction::zero(n);
  TestFunction u = *this;
  u.amplitude *= c;
  const auto ev = eval_fn_;
  const auto he = hess_fn_;
  u.eval_fn_ = [ev, c](const CVec& z) { return c * ev(z); };
  u.hess_fn_ = [he, c](const CVec& z) { return CMat(c * he(z)); };
  return u;
}

bool TestFunction::support_inside(const DomainSpec& domain) const {
  if (identically_zero) return true;
  if (domain.n != n) return false;
  switch (domain.kind) {
    case DomainKind::disk:
      return std::abs(center(0) - domain.center) + radius < domain.radius;
    case DomainKind::bidisk:
      return std::abs(center(0)) + radius < domain.r1 &&
             std::abs(center(1)) + radius < domain.r2;
    case DomainKind::box:
      for (int j = 0; j < n; ++j) {
        const double x = center(j).real(), y = center(j).imag();
        if (x - radius <= domain.intervals[2 * j][0]) return false;
        if (x + radius >= domain.intervals[2 * j][1]) return false;
        if (y - radius <= domain.intervals[2 * j + 1][0]) return false;
        if (y + radius >= domain.intervals[2 * j + 1][1]) return false;
      }
      return true;
  }
  return false;
}

CMat complex_hessian_fd(const std::function<double(const CVec&)>& f, const CVec& z, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("complex_hessian_fd: step must be positive");
  const int n = static_cast<int>(z.size());
  // Real-coordinate displacement: axis 2j is Re z_j, axis 2j+1 is Im z_j.
  auto shift = [&z, n](int axis, double d) {
    CVec w = z;
    const int j = axis / 2;
    w(j) += (axis % 2 == 0) ? Complex(d, 0.0) : Complex(0.0, d);
    return w;
  };
  const double f0 = f(z);
  auto second = [&](int a, int b) {
    if (a == b) {
      return (f(shift(a, h)) - 2.0 * f0 + f(shift(a, -h))) / (h * h);
    }
    auto shift2 = [&](double da, double db) {
      CVec w = shift(a, da);
      const int j = b / 2;
      w(j) += (b % 2 == 0) ? Complex(db, 0.0) : Complex(0.0, db);
      return w;
    };
    return (f(shift2(h, h)) - f(shift2(h, -h)) - f(shift2(-h, h)) + f(shift2(-h, -h))) /
           (4.0 * h * h);
  };
  CMat H(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double re = 0.25 * (second(2 * j, 2 * k) + second(2 * j + 1, 2 * k + 1));
      const double im = 0.25 * (second(2 * j, 2 * k + 1) - second(2 * j + 1, 2 * k));
      H(j, k) = Complex(re, im);
    }
  H = 0.5 * (H + H.adjoint()).eval();
  for (int j = 0; j < n; ++j) H(j, j) = Complex(H(j, j).real(), 0.0);
  return H;
}

double hermitian_lambda_min(const CMat& H) {
  const int n = static_cast<int>(H.rows());
  if (n == 1) return H(0, 0).real();
  if (n == 2) {
    const double a = H(0, 0).real(), d = H(1, 1).real();
    const double m = 0.5 * (a + d);
    const double q = 0.5 * (a - d);
    return m - std::sqrt(q * q + std::norm(H(0, 1)));
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

AdmissibilityReport check_admissible(const WeightFunction& phi, const TestFunction& u,
                                     const QuadratureGrid& grid) {
  if (phi.n != grid.domain.n || (!u.is_zero() && u.n != grid.domain.n))
    throw std::invalid_argument("check_admissible: dimension mismatch");
  if (!u.support_inside(grid.domain))
    throw std::invalid_argument("check_admissible: supp(u) is not strictly inside the domain");
  double m0 = std::numeric_limits<double>::infinity();
  double m1 = m0;
  for (int i = 0; i < grid.num_nodes(); ++i) {
    const CVec z = grid.node(i);
    const CMat Hphi = phi.hessian(z);
    m0 = std::min(m0, hermitian_lambda_min(Hphi));
    m1 = std::min(m1, hermitian_lambda_min(Hphi + u.hessian(z)));
  }
  return {m0, m1, m0 > 0.0 && m1 > 0.0};
}

WeightFunction shifted_weight(const WeightFunction& phi, const TestFunction& u, double t) {
  if (!u.is_zero() && phi.n != u.n)
    throw std::invalid_argument("shifted_weight: dimension mismatch");
  WeightFunction w;
  w.n = phi.n;
  w.eval = [phi, u, t](const CVec& z) { return phi.eval(z) + t * u.eval(z); };
  w.hessian = [phi, u, t](const CVec& z) { return CMat(phi.hessian(z) + t * u.hessian(z)); };
  return w;
}

} // namespace bdpp
