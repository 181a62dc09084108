#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "smr/image.hpp"

namespace smr {

/// Filled ellipse in pixel coordinates: (cx, cy) measured in columns/rows from the
/// top-left pixel centre, semi-axes rx, ry, rotated counter-clockwise by angle_rad
/// as seen on screen. A disk has rx == ry.
struct Region {
  double cx = 0.0;
  double cy = 0.0;
  double rx = 0.0;
  double ry = 0.0;
  double angle_rad = 0.0;
  std::size_t material = 0;
  double fraction = 0.0;

  static Region disk(double cx, double cy, double r, std::size_t material, double fraction) {
    return {cx, cy, r, r, 0.0, material, fraction};
  }
};

/// Paints regions in list order; a region sets its own material's value at every
/// pixel whose centre it covers, replacing what earlier regions wrote there.
MaterialMaps make_disk_phantom(std::vector<std::string> names, std::size_t width, std::size_t height,
                               const std::vector<Region>& regions);

/// Region lists in normalised coordinates (unit = half the image width, origin at
/// the image centre, y up), so the same layout scales to any size.
struct NormalisedRegion {
  double u, v, ru, rv, angle_deg;
  std::size_t material;
  double fraction;
};
MaterialMaps make_normalised_phantom(std::vector<std::string> names, std::size_t width, std::size_t height,
                                     const std::vector<NormalisedRegion>& regions);

/// bone, water, iodine: bone annulus around a water disk, two low-density lung
/// ellipses, two small bone inserts, and iodine disks at 0.012, 0.008 and 0.004.
MaterialMaps make_desk_phantom(std::size_t width, std::size_t height);

/// bone, water, iodine: three separate disks (bone 1.0, water 1.0, iodine 0.012).
MaterialMaps make_three_disk_phantom(std::size_t width, std::size_t height);

/// Reads an SMR1 map stack and checks its shape and that every value is nonnegative.
MaterialMaps load_maps(const std::filesystem::path& path, std::vector<std::string> names, std::size_t width,
                       std::size_t height);

}  // namespace smr
