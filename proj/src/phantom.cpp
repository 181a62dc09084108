#include "smr/phantom.hpp"

#include <cmath>
#include <numbers>

#include "smr/io.hpp"

namespace smr {

MaterialMaps make_disk_phantom(std::vector<std::string> names, std::size_t width, std::size_t height,
                               const std::vector<Region>& regions) {
  MaterialMaps maps(std::move(names), width, height);
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const Region& r = regions[k];
    if (r.material >= maps.materials()) {
      throw ConfigError("phantom region " + std::to_string(k) + ": material index " + std::to_string(r.material) +
                        " out of range (" + std::to_string(maps.materials()) + " materials)");
    }
    if (!(r.rx > 0.0) || !(r.ry > 0.0)) throw ConfigError("phantom region " + std::to_string(k) + ": radii must be positive");
    if (!(r.fraction >= 0.0)) throw ConfigError("phantom region " + std::to_string(k) + ": fraction must be nonnegative");
    const double c = std::cos(r.angle_rad);
    const double s = std::sin(r.angle_rad);
    Image& plane = maps.planes[r.material];
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = static_cast<double>(x) - r.cx;
        const double dy = r.cy - static_cast<double>(y);  // screen rows grow downward
        const double a = (dx * c + dy * s) / r.rx;
        const double b = (-dx * s + dy * c) / r.ry;
        if (a * a + b * b <= 1.0) plane.at(x, y) = r.fraction;
      }
    }
  }
  return maps;
}

MaterialMaps make_normalised_phantom(std::vector<std::string> names, std::size_t width, std::size_t height,
                                     const std::vector<NormalisedRegion>& regions) {
  const double half = 0.5 * static_cast<double>(width);
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  std::vector<Region> px;
  px.reserve(regions.size());
  for (const auto& r : regions) {
    px.push_back({cx + r.u * half, cy - r.v * half, r.ru * half, r.rv * half, r.angle_deg * std::numbers::pi / 180.0,
                  r.material, r.fraction});
  }
  return make_disk_phantom(std::move(names), width, height, px);
}

MaterialMaps make_desk_phantom(std::size_t width, std::size_t height) {
  constexpr std::size_t bone = 0, water = 1, iodine = 2;
  const std::vector<NormalisedRegion> regions{
      {0.0, 0.0, 0.86, 0.86, 0.0, bone, 1.0},
      {0.0, 0.0, 0.80, 0.80, 0.0, bone, 0.0},
      {0.0, 0.0, 0.80, 0.80, 0.0, water, 1.0},
      {-0.36, 0.18, 0.17, 0.30, -15.0, water, 0.3},
      {0.36, 0.18, 0.17, 0.30, 15.0, water, 0.3},
      {0.0, -0.50, 0.09, 0.09, 0.0, bone, 1.0},
      {0.0, -0.50, 0.09, 0.09, 0.0, water, 0.0},
      {0.0, 0.55, 0.045, 0.045, 0.0, bone, 1.0},
      {0.0, 0.55, 0.045, 0.045, 0.0, water, 0.0},
      {-0.40, -0.32, 0.11, 0.11, 0.0, iodine, 0.012},
      {0.40, -0.32, 0.11, 0.11, 0.0, iodine, 0.008},
      {0.0, 0.05, 0.11, 0.11, 0.0, iodine, 0.004},
  };
  return make_normalised_phantom({"bone", "water", "iodine"}, width, height, regions);
}

MaterialMaps make_three_disk_phantom(std::size_t width, std::size_t height) {
  const std::vector<NormalisedRegion> regions{
      {-0.40, 0.05, 0.28, 0.28, 0.0, 0, 1.0},
      {0.32, 0.30, 0.30, 0.30, 0.0, 1, 1.0},
      {0.30, -0.40, 0.24, 0.24, 0.0, 2, 0.012},
  };
  return make_normalised_phantom({"bone", "water", "iodine"}, width, height, regions);
}

MaterialMaps load_maps(const std::filesystem::path& path, std::vector<std::string> names, std::size_t width,
                       std::size_t height) {
  const std::size_t n = names.size();
  MaterialMaps maps = read_maps(path, std::move(names));
  if (maps.width() != width || maps.height() != height) {
    throw ShapeError("'" + path.string() + "' is " + std::to_string(maps.width()) + "x" + std::to_string(maps.height()) +
                     ", expected " + std::to_string(width) + "x" + std::to_string(height));
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (double v : maps.planes[m].data) {
      if (!(v >= 0.0)) throw IoError("'" + path.string() + "': negative or non-finite fraction in plane " + std::to_string(m));
    }
  }
  return maps;
}

}  // namespace smr
