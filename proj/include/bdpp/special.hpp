#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdpp {

// Regularized incomplete gamma functions P(s,x) = gamma(s,x)/Gamma(s) and
// Q(s,x) = 1 - P(s,x), s > 0, x >= 0.  Series for x < s+1, Lentz continued
// fraction otherwise; both converge to full double precision in this regime.
// Neither path subtracts nearly equal terms, so small results keep their
// relative accuracy (the naive recurrence gamma(s+1,x) = s*gamma(s,x) - ...
// does not, which is why it is not used anywhere).

namespace detail {

inline double gamma_p_series(double s, double x) {
  double ap = s;
  double term = 1.0 / s;
  double sum = term;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17)
      return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
  }
  throw std::runtime_error("gamma_p_series: no convergence");
}

inline double gamma_q_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-17)
      return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
  }
  throw std::runtime_error("gamma_q_cf: no convergence");
}

} // namespace detail

inline double regularized_gamma_p(double s, double x) {
  if (!(s > 0.0) || x < 0.0) throw std::invalid_argument("regularized_gamma_p: need s > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return (x < s + 1.0) ? detail::gamma_p_series(s, x) : 1.0 - detail::gamma_q_cf(s, x);
}

inline double regularized_gamma_q(double s, double x) {
  if (!(s > 0.0) || x < 0.0) throw std::invalid_argument("regularized_gamma_q: need s > 0, x >= 0");
  if (x == 0.0) return 1.0;
  return (x < s + 1.0) ? 1.0 - detail::gamma_p_series(s, x) : detail::gamma_q_cf(s, x);
}

// Lower incomplete gamma gamma(s,x), un-normalized.
inline double lower_incomplete_gamma(double s, double x) {
  return regularized_gamma_p(s, x) * std::exp(std::lgamma(s));
}

// Upper tail of a chi-squared distribution with df degrees of freedom,
// i.e. P(X > x).  Used as the p-value of goodness-of-fit statistics.
inline double chi_squared_sf(double df, double x) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

// P(Poisson(lambda) >= n) for integer n >= 1, via the standard identity
// with the regularized lower incomplete gamma.
inline double poisson_tail_geq(int n, double lambda) {
  if (n <= 0) return 1.0;
  if (lambda <= 0.0) return 0.0;
  return regularized_gamma_p(static_cast<double>(n), lambda);
}

} // namespace bdpp
