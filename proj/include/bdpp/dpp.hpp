#pragma once

#include <cstdint>
#include <vector>

#include "bdpp/bergman.hpp"
#include "bdpp/types.hpp"
#include "bdpp/weights.hpp"

namespace bdpp {

// One draw of the projection point process: exactly dim(basis) points in
// the domain.  (seed, index) identifies the random stream that produced it.
struct PointConfiguration {
  CMat points;  // dim x n
  double k = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  int size() const { return static_cast<int>(points.rows()); }
};

// Sequential projection sampler.  Draws each point by exact rejection from
// the current residual intensity under a constant envelope, then deflates
// the frame by the accepted point's direction and re-orthonormalizes.
// Deterministic given (seed, index); safe to call concurrently.
class DppSampler {
 public:
  // envelope_factor is the headroom over the grid maximum of the one-point
  // intensity; a violation at a proposal aborts instead of biasing the law.
  explicit DppSampler(const TruncatedBasis& basis, double envelope_factor = 1.5);

  PointConfiguration sample(std::uint64_t seed, std::uint64_t index) const;

  double envelope_height() const { return env_; }

 private:
  TruncatedBasis basis_;
  double env_ = 0.0;  // envelope_factor * gridmax of the intensity
  RVec lo_, hi_;      // bounding box in the 2n real coordinates
};

PointConfiguration sample_dpp(const TruncatedBasis& basis, std::uint64_t seed);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo estimate of E[ exp(-scale * sum_{p in sample} u(p)) ] over
// n_samples independent draws.  Sample i always uses random stream i, so
// the estimate is bit-identical for any thread count.
McEstimate estimate_laplace_functional(const TruncatedBasis& basis, const TestFunction& u,
                                       double scale, int n_samples, std::uint64_t seed,
                                       int threads = 1);

// Per-bin observed counts vs. intensity integrals.  Disk domains use
// equal-area annuli crossed with angular sectors about the domain center;
// box domains use a cartesian grid on the first coordinate.
struct IntensityHistogram {
  RMat counts;    // bins, summed over samples
  RMat expected;  // integral of the one-point intensity over each bin
  int n_samples = 0;
};

IntensityHistogram empirical_intensity(const std::vector<PointConfiguration>& samples,
                                       const TruncatedBasis& basis, int radial, int angular);

// E[ N(A) N(B) ] for disjoint balls A, B from the two-point intensity
// rho2(z, w) = rho(z) rho(w) - |K(z, w)|^2 e^{-k phi(z) - k phi(w)}.
double expected_pair_count(const TruncatedBasis& basis, const Region& A, const Region& B);

} // namespace bdpp
