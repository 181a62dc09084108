#pragma once

#include <cstddef>

#include "smr/image.hpp"

namespace smr {

struct TvParams {
  double xi = 0.0;
  double smoothing_eps = 1e-8;
  std::size_t n_inner_steps = 10;
  /// Length of each step along the normalised negative gradient, before xi scaling.
  double step_size = 1.0;

  void validate() const;
};

struct NlmParams {
  std::size_t patch_radius = 2;
  std::size_t window_radius = 5;
  double filtering_h = 1.0;

  void validate() const;
};

/// sum over pixels of sqrt(dx^2 + dy^2 + eps^2), forward differences, Neumann boundary.
double tv_value(const Image& image, double eps);

/// Gradient of tv_value with respect to every pixel.
Image tv_gradient(const Image& image, double eps);

/// n_inner_steps of f <- f - xi * step * g / ||g||. A step that would raise
/// tv_value is retried at half length (up to 30 times) and the call stops when
/// none succeeds. xi == 0 returns the input untouched.
Image tv_descent_step(const Image& image, const TvParams& params);

/// Non-local means with clamped borders; weights exp(-patch_ssd / h^2),
/// normalised per pixel. h == 0 keeps only patches identical to the centre patch.
Image nlm_filter(const Image& image, const NlmParams& params);

}  // namespace smr
