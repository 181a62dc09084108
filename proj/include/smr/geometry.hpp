#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smr/image.hpp"
#include "smr/sinogram.hpp"

namespace smr {

/// Fan-beam scan over a full rotation with a flat, equally spaced detector.
///
/// The image grid is centred on the rotation axis; x grows to the right and
/// y grows upward, with image row 0 at the top. Ray index is
/// view * n_detector_cells + cell.
struct ScanGeometry {
  double source_to_detector_mm = 0.0;
  double source_to_center_mm = 0.0;
  std::size_t n_detector_cells = 0;
  double cell_pitch_mm = 0.0;
  std::size_t n_views = 0;
  std::vector<double> view_angles;  // radians, uniform on [0, 2*pi)
  std::size_t image_width = 0;      // J1
  std::size_t image_height = 0;     // J2
  double pixel_pitch_mm = 0.0;

  std::size_t rays() const { return n_views * n_detector_cells; }
  std::size_t pixels() const { return image_width * image_height; }

  /// Radius of the circle seen by every view.
  double fov_radius_mm() const;

  /// Detector cell centre offset from the central ray, at the detector plane.
  double cell_offset_mm(std::size_t cell) const;

  /// Pixel centre in millimetres.
  double pixel_x_mm(std::size_t col) const;
  double pixel_y_mm(std::size_t row) const;

  struct Ray {
    double x0, y0;  // source
    double x1, y1;  // detector cell centre
  };
  Ray ray(std::size_t index) const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Key-value view used to build a geometry. Recognised keys:
/// source_to_detector_mm, source_to_center_mm, detector_cells, cell_pitch_mm,
/// views, image_width, image_height, pixel_pitch_mm.
using KeyValues = std::map<std::string, std::string>;

ScanGeometry build_geometry(const KeyValues& config);

ScanGeometry make_geometry(double sdd_mm, double sod_mm, std::size_t cells, double pitch_mm,
                           std::size_t views, std::size_t width, std::size_t height,
                           double pixel_mm);

/// Sparse A in both row (per ray) and column (per pixel) order. Immutable.
class SystemMatrix {
 public:
  SystemMatrix() = default;

  std::size_t rays() const { return rays_; }
  std::size_t pixels() const { return pixels_; }
  std::size_t nonzeros() const { return row_values_.size(); }

  struct Row {
    std::span<const std::uint32_t> pixels;
    std::span<const double> lengths;
  };
  Row row(std::size_t ray) const;

  /// Sum of intersection lengths along each ray / through each pixel.
  std::span<const double> row_sums() const { return row_sums_; }
  std::span<const double> column_sums() const { return column_sums_; }

  /// p = A f
  std::vector<double> forward(std::span<const double> image) const;
  void forward(std::span<const double> image, std::span<double> out) const;

  /// f = A^T p, accumulated per pixel in ray order (thread-count independent).
  std::vector<double> back(std::span<const double> sinogram) const;
  void back(std::span<const double> sinogram, std::span<double> out) const;

  bool operator==(const SystemMatrix& other) const = default;

  /// Builds from per-ray rows already in (pixel, length) form.
  static SystemMatrix from_rows(std::size_t pixels,
                                const std::vector<std::vector<std::pair<std::uint32_t, double>>>& rows);

 private:
  friend SystemMatrix build_system_matrix(const ScanGeometry& geometry);
  void finalize();

  std::size_t rays_ = 0;
  std::size_t pixels_ = 0;
  std::vector<std::uint64_t> row_offsets_;
  std::vector<std::uint32_t> row_pixels_;
  std::vector<double> row_values_;
  std::vector<std::uint64_t> col_offsets_;
  std::vector<std::uint32_t> col_rays_;
  std::vector<double> col_values_;
  std::vector<double> row_sums_;
  std::vector<double> column_sums_;
};

/// Exact grid-intersection lengths (Siddon traversal) for one ray segment.
std::vector<std::pair<std::uint32_t, double>> trace_ray(const ScanGeometry& geometry,
                                                        double x0, double y0, double x1, double y1);

SystemMatrix build_system_matrix(const ScanGeometry& geometry);

std::vector<double> forward_project(const SystemMatrix& a, std::span<const double> image);
std::vector<double> back_project(const SystemMatrix& a, std::span<const double> sinogram);

/// Fan-beam filtered backprojection of one sinogram (n_views x n_cells, view major).
Image fbp_reconstruct(const ScanGeometry& geometry, std::span<const double> sinogram);

/// P with row n = A f_n.
DecomposedSinogram project_materials(const SystemMatrix& a, const MaterialMaps& maps);

}  // namespace smr
