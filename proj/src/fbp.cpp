#include <cmath>
#include <numbers>
#include <vector>

#include "smr/geometry.hpp"

namespace smr {

// Equally spaced fan-beam FBP: detector rescaled to the rotation axis,
// cosine pre-weighting, Ram-Lak filter (rectangular window), and
// distance-weighted backprojection with linear detector interpolation.
Image fbp_reconstruct(const ScanGeometry& g, std::span<const double> sinogram) {
  g.validate();
  const std::size_t cells = g.n_detector_cells;
  const std::size_t views = g.n_views;
  if (sinogram.size() != views * cells) {
    throw ShapeError("fbp: sinogram has " + std::to_string(sinogram.size()) + " samples, geometry needs " +
                     std::to_string(views * cells));
  }
  const double sod = g.source_to_center_mm;
  const double scale = sod / g.source_to_detector_mm;
  const double ds = g.cell_pitch_mm * scale;
  const double center = 0.5 * static_cast<double>(cells - 1);

  // Spatial-domain ramp kernel over every lag the detector can produce.
  std::vector<double> kernel(2 * cells - 1);
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    const auto lag = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(cells - 1);
    if (lag == 0) {
      kernel[i] = 1.0 / (4.0 * ds * ds);
    } else if (lag % 2 != 0) {
      const double l = static_cast<double>(lag);
      kernel[i] = -1.0 / (std::numbers::pi * std::numbers::pi * l * l * ds * ds);
    } else {
      kernel[i] = 0.0;
    }
  }

  std::vector<double> filtered(views * cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < static_cast<std::ptrdiff_t>(views); ++v) {
    std::vector<double> weighted(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      const double s = (static_cast<double>(c) - center) * ds;
      weighted[c] = sinogram[v * cells + c] * sod / std::sqrt(sod * sod + s * s);
    }
    for (std::size_t c = 0; c < cells; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < cells; ++k) acc += weighted[k] * kernel[c + cells - 1 - k];
      // half of the ramp (fan-beam convention) times the sample spacing
      filtered[v * cells + c] = 0.5 * ds * acc;
    }
  }

  Image out(g.image_width, g.image_height);
  const double dbeta = 2.0 * std::numbers::pi / static_cast<double>(views);
  std::vector<double> cosv(views), sinv(views);
  for (std::size_t v = 0; v < views; ++v) {
    cosv[v] = std::cos(g.view_angles[v]);
    sinv[v] = std::sin(g.view_angles[v]);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t row = 0; row < static_cast<std::ptrdiff_t>(g.image_height); ++row) {
    const double y = g.pixel_y_mm(static_cast<std::size_t>(row));
    for (std::size_t col = 0; col < g.image_width; ++col) {
      const double x = g.pixel_x_mm(col);
      double acc = 0.0;
      for (std::size_t v = 0; v < views; ++v) {
        const double t = sod - (x * cosv[v] + y * sinv[v]);
        const double lateral = -x * sinv[v] + y * cosv[v];
        const double s = lateral * sod / t;
        const double pos = s / ds + center;
        const auto i0 = static_cast<std::ptrdiff_t>(std::floor(pos));
        if (i0 < 0 || i0 + 1 >= static_cast<std::ptrdiff_t>(cells)) {
          if (i0 == static_cast<std::ptrdiff_t>(cells) - 1 && pos == static_cast<double>(i0)) {
            acc += filtered[v * cells + static_cast<std::size_t>(i0)] * (sod * sod) / (t * t);
          }
          continue;
        }
        const double w = pos - static_cast<double>(i0);
        const double val = (1.0 - w) * filtered[v * cells + static_cast<std::size_t>(i0)] +
                           w * filtered[v * cells + static_cast<std::size_t>(i0) + 1];
        acc += val * (sod * sod) / (t * t);
      }
      out.at(col, static_cast<std::size_t>(row)) = acc * dbeta;
    }
  }
  return out;
}

}  // namespace smr
