#pragma once

#include <cmath>
#include <random>

#include "cvtomo/fock.hpp"

namespace testing {

// Ginibre-type random mixed state of the given rank.
inline cvtomo::DensityMatrix random_state(int dim, std::uint64_t seed, int rank = -1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  const int k = rank > 0 ? rank : dim;
  cvtomo::Matrix g(dim, k);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = cvtomo::Complex(n(gen), n(gen));
  return cvtomo::DensityMatrix::normalized(g * g.adjoint());
}

inline double max_abs_diff(const cvtomo::Matrix& a, const cvtomo::Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Composite Simpson rule.
template <typename F>
double simpson(F&& f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace testing
