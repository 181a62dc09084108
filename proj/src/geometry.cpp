#include "smr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "smr/simd/kernels.hpp"

namespace smr {

double ScanGeometry::fov_radius_mm() const {
  const double half_width = 0.5 * static_cast<double>(n_detector_cells) * cell_pitch_mm;
  return source_to_center_mm * std::sin(std::atan(half_width / source_to_detector_mm));
}

double ScanGeometry::cell_offset_mm(std::size_t cell) const {
  return (static_cast<double>(cell) - 0.5 * static_cast<double>(n_detector_cells - 1)) * cell_pitch_mm;
}

double ScanGeometry::pixel_x_mm(std::size_t col) const {
  return (static_cast<double>(col) + 0.5 - 0.5 * static_cast<double>(image_width)) * pixel_pitch_mm;
}

double ScanGeometry::pixel_y_mm(std::size_t row) const {
  return (0.5 * static_cast<double>(image_height) - static_cast<double>(row) - 0.5) * pixel_pitch_mm;
}

ScanGeometry::Ray ScanGeometry::ray(std::size_t index) const {
  const std::size_t view = index / n_detector_cells;
  const std::size_t cell = index % n_detector_cells;
  const double c = std::cos(view_angles[view]);
  const double s = std::sin(view_angles[view]);
  const double u = cell_offset_mm(cell);
  Ray r{};
  r.x0 = source_to_center_mm * c;
  r.y0 = source_to_center_mm * s;
  // central direction (-c, -s), detector axis (-s, c)
  r.x1 = r.x0 - source_to_detector_mm * c - u * s;
  r.y1 = r.y0 - source_to_detector_mm * s + u * c;
  return r;
}

void ScanGeometry::validate() const {
  if (!(source_to_center_mm > 0.0)) throw ConfigError("source_to_center_mm must be positive");
  if (!(source_to_detector_mm > source_to_center_mm)) {
    throw ConfigError("source_to_detector_mm must exceed source_to_center_mm");
  }
  if (n_detector_cells < 1) throw ConfigError("detector_cells must be at least 1");
  if (n_views < 1) throw ConfigError("views must be at least 1");
  if (image_width < 1) throw ConfigError("image_width must be at least 1");
  if (image_height < 1) throw ConfigError("image_height must be at least 1");
  if (!(cell_pitch_mm > 0.0)) throw ConfigError("cell_pitch_mm must be positive");
  if (!(pixel_pitch_mm > 0.0)) throw ConfigError("pixel_pitch_mm must be positive");
  if (view_angles.size() != n_views) throw ConfigError("view_angles must hold one angle per view");
}

ScanGeometry make_geometry(double sdd_mm, double sod_mm, std::size_t cells, double pitch_mm,
                           std::size_t views, std::size_t width, std::size_t height,
                           double pixel_mm) {
  ScanGeometry g;
  g.source_to_detector_mm = sdd_mm;
  g.source_to_center_mm = sod_mm;
  g.n_detector_cells = cells;
  g.cell_pitch_mm = pitch_mm;
  g.n_views = views;
  g.image_width = width;
  g.image_height = height;
  g.pixel_pitch_mm = pixel_mm;
  g.view_angles.resize(views);
  for (std::size_t v = 0; v < views; ++v) {
    g.view_angles[v] = 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(views);
  }
  g.validate();
  return g;
}

namespace {

const std::string& require(const KeyValues& config, const std::string& key) {
  auto it = config.find(key);
  if (it == config.end()) throw ConfigError("missing geometry key '" + key + "'");
  return it->second;
}

double positive_number(const KeyValues& config, const std::string& key) {
  const std::string& text = require(config, key);
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("geometry key '" + key + "' is not a number: '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("geometry key '" + key + "' is not a number: '" + text + "'");
  if (!(value > 0.0)) throw ConfigError("geometry key '" + key + "' must be positive");
  return value;
}

std::size_t positive_count(const KeyValues& config, const std::string& key) {
  const double v = positive_number(config, key);
  if (v != std::floor(v)) throw ConfigError("geometry key '" + key + "' must be an integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

ScanGeometry build_geometry(const KeyValues& config) {
  const double sdd = positive_number(config, "source_to_detector_mm");
  const double sod = positive_number(config, "source_to_center_mm");
  const std::size_t cells = positive_count(config, "detector_cells");
  const double pitch = positive_number(config, "cell_pitch_mm");
  const std::size_t views = positive_count(config, "views");
  const std::size_t width = positive_count(config, "image_width");
  const std::size_t height = positive_count(config, "image_height");
  const double pixel = positive_number(config, "pixel_pitch_mm");
  return make_geometry(sdd, sod, cells, pitch, views, width, height, pixel);
}

std::vector<std::pair<std::uint32_t, double>> trace_ray(const ScanGeometry& g, double x0, double y0,
                                                        double x1, double y1) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double length = std::hypot(dx, dy);
  const double px = g.pixel_pitch_mm;
  const double xmin = -0.5 * static_cast<double>(g.image_width) * px;
  const double ymin = -0.5 * static_cast<double>(g.image_height) * px;
  const double xmax = -xmin;
  const double ymax = -ymin;

  double amin = 0.0;
  double amax = 1.0;
  auto clip = [&](double p0, double d, double lo, double hi) {
    if (d == 0.0) return p0 > lo && p0 < hi;
    double a0 = (lo - p0) / d;
    double a1 = (hi - p0) / d;
    if (a0 > a1) std::swap(a0, a1);
    amin = std::max(amin, a0);
    amax = std::min(amax, a1);
    return true;
  };
  if (length == 0.0 || !clip(x0, dx, xmin, xmax) || !clip(y0, dy, ymin, ymax) || !(amax > amin)) {
    return {};
  }

  // Plane crossings strictly inside (amin, amax), each list ascending in alpha.
  auto crossings = [&](double p0, double d, double lo, std::size_t planes) {
    std::vector<double> out;
    if (d == 0.0) return out;
    out.reserve(planes + 1);
    for (std::size_t i = 0; i <= planes; ++i) {
      const double a = (lo + static_cast<double>(i) * px - p0) / d;
      if (a > amin && a < amax) out.push_back(a);
    }
    if (d < 0.0) std::reverse(out.begin(), out.end());
    return out;
  };
  const std::vector<double> ax = crossings(x0, dx, xmin, g.image_width);
  const std::vector<double> ay = crossings(y0, dy, ymin, g.image_height);

  std::vector<double> alphas;
  alphas.reserve(ax.size() + ay.size() + 2);
  alphas.push_back(amin);
  std::merge(ax.begin(), ax.end(), ay.begin(), ay.end(), std::back_inserter(alphas));
  alphas.push_back(amax);

  const auto width = static_cast<std::ptrdiff_t>(g.image_width);
  const auto height = static_cast<std::ptrdiff_t>(g.image_height);
  std::vector<std::pair<std::uint32_t, double>> row;
  row.reserve(alphas.size());
  for (std::size_t k = 0; k + 1 < alphas.size(); ++k) {
    const double span = alphas[k + 1] - alphas[k];
    if (!(span > 0.0)) continue;
    const double mid = 0.5 * (alphas[k] + alphas[k + 1]);
    auto col = static_cast<std::ptrdiff_t>(std::floor((x0 + mid * dx - xmin) / px));
    auto up = static_cast<std::ptrdiff_t>(std::floor((y0 + mid * dy - ymin) / px));
    col = std::clamp<std::ptrdiff_t>(col, 0, width - 1);
    up = std::clamp<std::ptrdiff_t>(up, 0, height - 1);
    const auto pixel = static_cast<std::uint32_t>((height - 1 - up) * width + col);
    const double seg = span * length;
    if (!row.empty() && row.back().first == pixel) {
      row.back().second += seg;
    } else {
      row.emplace_back(pixel, seg);
    }
  }
  return row;
}

SystemMatrix::Row SystemMatrix::row(std::size_t ray) const {
  const std::size_t b = row_offsets_[ray];
  const std::size_t e = row_offsets_[ray + 1];
  return {{row_pixels_.data() + b, e - b}, {row_values_.data() + b, e - b}};
}

void SystemMatrix::finalize() {
  // Column (per pixel) copy in ray order, so back projection sums in a fixed order.
  col_offsets_.assign(pixels_ + 1, 0);
  for (std::uint32_t p : row_pixels_) ++col_offsets_[p + 1];
  for (std::size_t j = 0; j < pixels_; ++j) col_offsets_[j + 1] += col_offsets_[j];
  col_rays_.resize(row_pixels_.size());
  col_values_.resize(row_values_.size());
  std::vector<std::uint64_t> cursor(col_offsets_.begin(), col_offsets_.end() - 1);
  for (std::size_t r = 0; r < rays_; ++r) {
    for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const std::uint64_t slot = cursor[row_pixels_[k]]++;
      col_rays_[slot] = static_cast<std::uint32_t>(r);
      col_values_[slot] = row_values_[k];
    }
  }
  row_sums_.assign(rays_, 0.0);
  for (std::size_t r = 0; r < rays_; ++r) {
    for (std::uint64_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) row_sums_[r] += row_values_[k];
  }
  column_sums_.assign(pixels_, 0.0);
  for (std::size_t j = 0; j < pixels_; ++j) {
    for (std::uint64_t k = col_offsets_[j]; k < col_offsets_[j + 1]; ++k) column_sums_[j] += col_values_[k];
  }
}

SystemMatrix SystemMatrix::from_rows(
    std::size_t pixels, const std::vector<std::vector<std::pair<std::uint32_t, double>>>& rows) {
  SystemMatrix a;
  a.rays_ = rows.size();
  a.pixels_ = pixels;
  a.row_offsets_.assign(rows.size() + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) a.row_offsets_[r + 1] = a.row_offsets_[r] + rows[r].size();
  a.row_pixels_.reserve(a.row_offsets_.back());
  a.row_values_.reserve(a.row_offsets_.back());
  for (const auto& row : rows) {
    for (const auto& [pixel, length] : row) {
      if (pixel >= pixels) throw ShapeError("system matrix row references pixel out of range");
      a.row_pixels_.push_back(pixel);
      a.row_values_.push_back(length);
    }
  }
  a.finalize();
  return a;
}

SystemMatrix build_system_matrix(const ScanGeometry& geometry) {
  geometry.validate();
  const std::size_t rays = geometry.rays();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(rays);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
    const auto ray = geometry.ray(static_cast<std::size_t>(r));
    rows[static_cast<std::size_t>(r)] = trace_ray(geometry, ray.x0, ray.y0, ray.x1, ray.y1);
  }
  return SystemMatrix::from_rows(geometry.pixels(), rows);
}

void SystemMatrix::forward(std::span<const double> image, std::span<double> out) const {
  if (image.size() != pixels_) throw ShapeError("forward projection: image has wrong pixel count");
  if (out.size() != rays_) throw ShapeError("forward projection: output has wrong ray count");
  const auto& k = simd::active();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays_); ++r) {
    const std::size_t b = row_offsets_[r];
    const std::size_t e = row_offsets_[r + 1];
    out[r] = k.gather_dot(row_values_.data() + b, row_pixels_.data() + b, image.data(), e - b);
  }
}

std::vector<double> SystemMatrix::forward(std::span<const double> image) const {
  std::vector<double> out(rays_);
  forward(image, out);
  return out;
}

void SystemMatrix::back(std::span<const double> sinogram, std::span<double> out) const {
  if (sinogram.size() != rays_) throw ShapeError("back projection: sinogram has wrong ray count");
  if (out.size() != pixels_) throw ShapeError("back projection: output has wrong pixel count");
  const auto& k = simd::active();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(pixels_); ++j) {
    const std::size_t b = col_offsets_[j];
    const std::size_t e = col_offsets_[j + 1];
    out[j] = k.gather_dot(col_values_.data() + b, col_rays_.data() + b, sinogram.data(), e - b);
  }
}

std::vector<double> SystemMatrix::back(std::span<const double> sinogram) const {
  std::vector<double> out(pixels_);
  back(sinogram, out);
  return out;
}

std::vector<double> forward_project(const SystemMatrix& a, std::span<const double> image) {
  return a.forward(image);
}

std::vector<double> back_project(const SystemMatrix& a, std::span<const double> sinogram) {
  return a.back(sinogram);
}

DecomposedSinogram project_materials(const SystemMatrix& a, const MaterialMaps& maps) {
  DecomposedSinogram p(maps.materials(), a.rays());
  for (std::size_t n = 0; n < maps.materials(); ++n) a.forward(maps.planes[n].span(), p.row(n));
  return p;
}

}  // namespace smr
