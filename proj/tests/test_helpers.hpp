#pragma once

#include <cmath>
#include <random>

#include "qflow/spherical_grid.hpp"

namespace qflow::testing {

// Random field with coefficients decaying like amplitude * exp(-decay * l).
inline SpectralField random_field(std::mt19937_64& rng, int band, double amplitude = 1.0,
                                  double decay = 0.0, int max_degree = -1) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  SpectralField f(band);
  const int top = max_degree < 0 ? band : std::min(band, max_degree);
  for (int l = 0; l <= top; ++l)
    for (int m = -l; m <= l; ++m) f(l, m) = amplitude * std::exp(-decay * l) * dist(rng);
  return f;
}

// 1 + small smooth perturbation, positive by construction.
inline SpectralField random_positive_field(std::mt19937_64& rng, int band, double size = 0.2,
                                           int max_degree = 4) {
  SpectralField f = random_field(rng, band, 1.0, 0.0, max_degree);
  f(0, 0) = 0.0;
  double norm = 0.0;
  for (double c : f.coefficients()) norm += std::abs(c);
  // |Y_{l,m}| <= sqrt((2l+1)/(4 pi)), so this bounds the perturbation by `size`.
  const double bound = std::sqrt((2.0 * max_degree + 1.0) / (4.0 * M_PI));
  f *= size / (norm * bound);
  f(0, 0) = std::sqrt(4.0 * M_PI);
  return f;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

}  // namespace qflow::testing
