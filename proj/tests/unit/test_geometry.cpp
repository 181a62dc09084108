#include <doctest.h>

#include <cmath>
#include <numbers>

#include "smr/geometry.hpp"
#include "support.hpp"

using namespace smr;
using smr::testing::dot;
using smr::testing::norm;
using smr::testing::random_vector;

namespace {

KeyValues geometry_keys() {
  return {{"source_to_detector_mm", "180"}, {"source_to_center_mm", "132"}, {"detector_cells", "512"},
          {"cell_pitch_mm", "0.1"},         {"views", "640"},               {"image_width", "512"},
          {"image_height", "512"},          {"pixel_pitch_mm", "0.075"}};
}

// Chord of the segment (x0,y0)-(x1,y1) through the box [-h, h]^2 by dense sampling.
double sampled_chord(double x0, double y0, double x1, double y1, double h, int samples) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  int inside = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = (i + 0.5) / samples;
    const double x = x0 + t * (x1 - x0);
    const double y = y0 + t * (y1 - y0);
    if (std::abs(x) < h && std::abs(y) < h) ++inside;
  }
  return len * inside / samples;
}

}  // namespace

TEST_CASE("build_geometry accepts the simulation geometry") {
  const ScanGeometry g = build_geometry(geometry_keys());
  CHECK(g.rays() == 327680);
  CHECK(g.view_angles.size() == 640);
  CHECK(g.view_angles.front() == 0.0);
  CHECK(g.view_angles[1] == doctest::Approx(2.0 * std::numbers::pi / 640.0));
  CHECK(g.view_angles.back() < 2.0 * std::numbers::pi);
}

TEST_CASE("physical scanner geometry has a 41.3 mm field of view") {
  auto keys = geometry_keys();
  keys["source_to_detector_mm"] = "440.50";
  keys["source_to_center_mm"] = "182.68";
  keys["views"] = "360";
  keys["cell_pitch_mm"] = "0.4";
  const ScanGeometry g = build_geometry(keys);
  CHECK(g.fov_radius_mm() == doctest::Approx(41.3).epsilon(0.002));
}

TEST_CASE("build_geometry rejects bad configurations naming the key") {
  auto keys = geometry_keys();
  keys["source_to_detector_mm"] = "100";
  keys["source_to_center_mm"] = "100";
  CHECK_THROWS_AS(build_geometry(keys), ConfigError);

  keys = geometry_keys();
  keys.erase("views");
  CHECK_THROWS_WITH_AS(build_geometry(keys), doctest::Contains("views"), ConfigError);

  keys = geometry_keys();
  keys["cell_pitch_mm"] = "-0.1";
  CHECK_THROWS_WITH_AS(build_geometry(keys), doctest::Contains("cell_pitch_mm"), ConfigError);
}

TEST_CASE("axis-aligned ray through a 3x3 grid has chord 3") {
  const ScanGeometry g = make_geometry(180, 132, 1, 1.0, 1, 3, 3, 1.0);
  const auto row = trace_ray(g, -10.0, 0.2, 10.0, 0.2);
  double sum = 0.0;
  for (const auto& [pixel, len] : row) {
    sum += len;
    CHECK(pixel / 3 == 1);  // middle row
  }
  CHECK(sum == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("oblique ray on a 2x2 grid matches the sampled chord") {
  const ScanGeometry g = make_geometry(180, 132, 1, 1.0, 1, 2, 2, 1.0);
  const double x0 = -3.0, y0 = -1.7, x1 = 2.5, y1 = 2.2;
  double sum = 0.0;
  for (const auto& [pixel, len] : trace_ray(g, x0, y0, x1, y1)) {
    CHECK(len >= 0.0);
    sum += len;
  }
  CHECK(sum == doctest::Approx(sampled_chord(x0, y0, x1, y1, 1.0, 1000000)).epsilon(1e-5));
}

TEST_CASE("ray missing the grid has an empty row") {
  const ScanGeometry g = make_geometry(180, 132, 1, 1.0, 1, 4, 4, 1.0);
  CHECK(trace_ray(g, -10.0, 5.0, 10.0, 6.0).empty());
}

TEST_CASE("chord length is conserved on random rays") {
  const ScanGeometry g = make_geometry(180, 132, 1, 1.0, 1, 7, 5, 0.9);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> offset(-2.0, 2.0);
  const double hx = 3.5 * 0.9, hy = 2.5 * 0.9;
  int crossing = 0;
  for (int k = 0; k < 1000; ++k) {
    const double a = angle(rng);
    const double c = std::cos(a), s = std::sin(a), o = offset(rng);
    const double x0 = -20 * c - o * s, y0 = -20 * s + o * c;
    const double x1 = 20 * c - o * s, y1 = 20 * s + o * c;
    double sum = 0.0;
    for (const auto& [pixel, len] : trace_ray(g, x0, y0, x1, y1)) {
      CHECK(len >= 0.0);
      sum += len;
    }
    // Analytic chord through the rectangle by slab clipping.
    double lo = 0.0, hi = 1.0;
    const double dx = x1 - x0, dy = y1 - y0;
    for (auto [p0, d, h] : {std::tuple{x0, dx, hx}, std::tuple{y0, dy, hy}}) {
      if (d == 0.0) continue;
      double t0 = (-h - p0) / d, t1 = (h - p0) / d;
      if (t0 > t1) std::swap(t0, t1);
      lo = std::max(lo, t0);
      hi = std::min(hi, t1);
    }
    const double chord = hi > lo ? (hi - lo) * std::hypot(dx, dy) : 0.0;
    if (chord > 0.0) ++crossing;
    CHECK(std::abs(sum - chord) <= 1e-9);
  }
  CHECK(crossing > 500);
}

TEST_CASE("projector is adjoint and linear") {
  const ScanGeometry g = smr::testing::small_geometry();
  const SystemMatrix a = build_system_matrix(g);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const auto f = random_vector(rng, a.pixels(), -1.0, 1.0);
    const auto p = random_vector(rng, a.rays(), -1.0, 1.0);
    const auto af = forward_project(a, f);
    const auto atp = back_project(a, p);
    CHECK(std::abs(dot(af, p) - dot(f, atp)) <= 1e-10 * norm(af) * norm(p));
  }
  const auto f = random_vector(rng, a.pixels());
  const auto h = random_vector(rng, a.pixels());
  std::vector<double> mix(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) mix[i] = 2.5 * f[i] - 0.75 * h[i];
  const auto lhs = forward_project(a, mix);
  const auto af = forward_project(a, f);
  const auto ah = forward_project(a, h);
  double err = 0.0, scale = 0.0;
  for (std::size_t r = 0; r < lhs.size(); ++r) {
    err = std::max(err, std::abs(lhs[r] - (2.5 * af[r] - 0.75 * ah[r])));
    scale = std::max(scale, std::abs(lhs[r]));
  }
  CHECK(err <= 1e-12 * scale);
}

TEST_CASE("forward projection basics") {
  const ScanGeometry g = smr::testing::small_geometry(64, 8, 129);
  const SystemMatrix a = build_system_matrix(g);
  const std::vector<double> zero(a.pixels(), 0.0);
  for (double v : forward_project(a, zero)) CHECK(v == 0.0);
  CHECK_THROWS_AS(forward_project(a, std::vector<double>(3)), ShapeError);
  CHECK_THROWS_AS(back_project(a, std::vector<double>(3)), ShapeError);

  // Unit disk of radius 6 mm; the central cell of each view passes through the centre.
  std::vector<double> disk(a.pixels(), 0.0);
  for (std::size_t y = 0; y < g.image_height; ++y) {
    for (std::size_t x = 0; x < g.image_width; ++x) {
      if (std::hypot(g.pixel_x_mm(x), g.pixel_y_mm(y)) <= 6.0) disk[y * g.image_width + x] = 1.0;
    }
  }
  const auto p = forward_project(a, disk);
  for (double v : p) CHECK(v >= 0.0);
  for (std::size_t view = 0; view < g.n_views; ++view) {
    CHECK(std::abs(p[view * g.n_detector_cells + 64] - 12.0) <= 2.0 * g.pixel_pitch_mm);
  }
}

TEST_CASE("back projection of a single ray touches exactly its pixels") {
  const ScanGeometry g = smr::testing::small_geometry(16, 4, 16);
  const SystemMatrix a = build_system_matrix(g);
  const std::size_t ray = 2 * g.n_detector_cells + 5;
  std::vector<double> p(a.rays(), 0.0);
  p[ray] = 1.0;
  const auto img = back_project(a, p);
  const auto row = a.row(ray);
  std::vector<bool> on(a.pixels(), false);
  for (auto px : row.pixels) on[px] = true;
  for (std::size_t j = 0; j < img.size(); ++j) CHECK((img[j] != 0.0) == on[j]);
  for (double v : back_project(a, std::vector<double>(a.rays(), 0.0))) CHECK(v == 0.0);
}

TEST_CASE("system matrix construction is deterministic") {
  const ScanGeometry g = smr::testing::small_geometry(24, 30, 40);
  CHECK(build_system_matrix(g) == build_system_matrix(g));
}

TEST_CASE("fbp reconstructs a centred disk") {
  const ScanGeometry g = make_geometry(180, 132, 256, 0.2, 360, 128, 128, 0.28);
  const SystemMatrix a = build_system_matrix(g);
  std::vector<double> disk(a.pixels(), 0.0);
  for (std::size_t y = 0; y < g.image_height; ++y) {
    for (std::size_t x = 0; x < g.image_width; ++x) {
      if (std::hypot(g.pixel_x_mm(x), g.pixel_y_mm(y)) <= 10.0) disk[y * g.image_width + x] = 0.05;
    }
  }
  const Image rec = fbp_reconstruct(g, forward_project(a, disk));
  double sum = 0.0;
  int count = 0;
  for (std::size_t y = 0; y < g.image_height; ++y) {
    for (std::size_t x = 0; x < g.image_width; ++x) {
      if (std::hypot(g.pixel_x_mm(x), g.pixel_y_mm(y)) <= 7.0) {
        sum += rec.at(x, y);
        ++count;
      }
    }
  }
  CHECK(sum / count == doctest::Approx(0.05).epsilon(0.05));

  const Image zero = fbp_reconstruct(g, std::vector<double>(a.rays(), 0.0));
  for (double v : zero.data) CHECK(v == 0.0);
  CHECK_THROWS_AS(fbp_reconstruct(g, std::vector<double>(10)), ShapeError);
}

TEST_CASE("fbp of an impulse concentrates along the ray path") {
  const ScanGeometry g = make_geometry(180, 132, 128, 0.4, 180, 64, 64, 0.56);
  const SystemMatrix a = build_system_matrix(g);
  const std::size_t ray = 40 * g.n_detector_cells + 70;
  std::vector<double> p(a.rays(), 0.0);
  p[ray] = 1.0;
  const Image rec = fbp_reconstruct(g, p);
  const auto row = a.row(ray);
  std::vector<bool> on(a.pixels(), false);
  for (auto px : row.pixels) on[px] = true;
  double on_energy = 0.0, total = 0.0;
  std::size_t on_count = 0;
  for (std::size_t j = 0; j < rec.size(); ++j) {
    total += rec.data[j] * rec.data[j];
    if (on[j]) {
      on_energy += rec.data[j] * rec.data[j];
      ++on_count;
    }
  }
  // The ray support is a few percent of the image but carries most of the energy.
  CHECK(static_cast<double>(on_count) < 0.1 * static_cast<double>(rec.size()));
  CHECK(on_energy > 0.5 * total);
}
