#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdpp {

// Pairwise (cascade) summation over a fixed-order sequence.  The reduction
// tree depends only on the length, so the result is bit-reproducible for a
// given input order and the rounding error grows like O(log n) instead of
// O(n) for the naive left fold.
template <class T>
T pairwise_sum(std::span<const T> v) {
  const std::size_t n = v.size();
  if (n == 0) return T{};
  if (n <= 16) {
    T s = v[0];
    for (std::size_t i = 1; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v.data(), v.size()));
}

} // namespace bdpp
