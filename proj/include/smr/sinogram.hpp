#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

/// Per-material line integrals p_{n,ray} (mm x fraction), material-major.
struct DecomposedSinogram {
  std::size_t materials = 0;
  std::size_t rays = 0;
  std::vector<double> values;

  DecomposedSinogram() = default;
  DecomposedSinogram(std::size_t n, std::size_t l) : materials(n), rays(l), values(n * l, 0.0) {}

  double& at(std::size_t n, std::size_t ray) { return values[n * rays + ray]; }
  double at(std::size_t n, std::size_t ray) const { return values[n * rays + ray]; }
  std::span<double> row(std::size_t n) { return {values.data() + n * rays, rays}; }
  std::span<const double> row(std::size_t n) const { return {values.data() + n * rays, rays}; }

  bool operator==(const DecomposedSinogram&) const = default;
};

/// Log-domain multi-bin measurements qbar_{m,ray}, bin-major; ray = view * cells + cell.
struct MeasuredProjections {
  std::size_t bins = 0;
  std::size_t views = 0;
  std::size_t cells = 0;
  std::vector<double> values;

  MeasuredProjections() = default;
  MeasuredProjections(std::size_t m, std::size_t v, std::size_t c)
      : bins(m), views(v), cells(c), values(m * v * c, 0.0) {}

  std::size_t rays() const { return views * cells; }
  double& at(std::size_t m, std::size_t ray) { return values[m * rays() + ray]; }
  double at(std::size_t m, std::size_t ray) const { return values[m * rays() + ray]; }
  std::span<double> bin(std::size_t m) { return {values.data() + m * rays(), rays()}; }
  std::span<const double> bin(std::size_t m) const { return {values.data() + m * rays(), rays()}; }

  bool operator==(const MeasuredProjections&) const = default;
};

}  // namespace smr
