#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smr/errors.hpp"

namespace smr {

/// Row-major 2D image of doubles; row 0 is the top of the field of view.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

  std::size_t size() const { return data.size(); }
  double& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }

  bool same_shape(const Image& other) const { return width == other.width && height == other.height; }
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  }
}

/// The per-material fraction images; the reconstruction unknown.
struct MaterialMaps {
  std::vector<std::string> names;
  std::vector<Image> planes;

  MaterialMaps() = default;
  MaterialMaps(std::vector<std::string> material_names, std::size_t width, std::size_t height)
      : names(std::move(material_names)), planes(names.size(), Image(width, height)) {}

  std::size_t materials() const { return planes.size(); }
  std::size_t width() const { return planes.empty() ? 0 : planes.front().width; }
  std::size_t height() const { return planes.empty() ? 0 : planes.front().height; }
  std::size_t pixels() const { return width() * height(); }
};

/// Elementwise max(x, 0) over every plane.
void clamp_nonnegative(MaterialMaps& maps);

}  // namespace smr
