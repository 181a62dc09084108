#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "smr/geometry.hpp"
#include "smr/image.hpp"
#include "smr/spectral.hpp"

namespace smr::testing {

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline Image random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, double lo = 0.0, double hi = 1.0) {
  Image img(w, h);
  img.data = random_vector(rng, w * h, lo, hi);
  return img;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline ScanGeometry small_geometry(std::size_t n = 32, std::size_t views = 45, std::size_t cells = 64) {
  const double pixel = 18.0 / static_cast<double>(n);
  return make_geometry(180.0, 132.0, cells, 0.4 * 64.0 / static_cast<double>(cells), views, n, n, pixel);
}

/// Three materials, eight bins, analytic power-law attenuation curves on a coarse grid.
struct SyntheticModel {
  SpectralModel model;
  BasisAttenuation basis;
};

inline SyntheticModel synthetic_model(std::size_t bins = 8, std::size_t materials = 3) {
  std::vector<double> e;
  for (int i = 0; i <= 68; ++i) e.push_back(16.0 + 0.5 * i);
  EnergyGrid grid = EnergyGrid::from_energies(e);
  std::vector<double> w = kramers_weights(grid.energies_kev, 51.0, 1.0);
  std::vector<double> edges;
  for (std::size_t b = 0; b <= bins; ++b) edges.push_back(16.0 + 34.0 * static_cast<double>(b) / static_cast<double>(bins));
  SyntheticModel out;
  out.model = SpectralModel::from_weights(grid, w, edges);
  const double scale[] = {0.03, 0.12, 0.05, 0.08};
  const double power[] = {1.2, 2.8, 2.2, 3.0};
  for (std::size_t n = 0; n < materials; ++n) {
    out.basis.names.push_back("m" + std::to_string(n));
    std::vector<double> phi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double v = scale[n] * std::pow(30.0 / grid.energies_kev[i], power[n]);
      if (n == 2 && grid.energies_kev[i] >= 33.17) v *= 5.0;
      phi[i] = v + 0.01;
    }
    out.basis.phi.push_back(phi);
  }
  return out;
}

}  // namespace smr::testing
