#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <limits>

#include "smr/io.hpp"
#include "smr/phantom.hpp"
#include "support.hpp"

using namespace smr;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "smr_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("image round trip is bit exact") {
  std::mt19937_64 rng(1);
  Image img = smr::testing::random_image(rng, 13, 7, -1e3, 1e3);
  img.data[3] = -0.0;
  img.data[4] = std::numeric_limits<double>::denorm_min();
  write_image(scratch("img.smr"), img);
  const Image back = read_image(scratch("img.smr"));
  CHECK(back.width == 13);
  CHECK(back.height == 7);
  CHECK(std::memcmp(back.data.data(), img.data.data(), img.size() * sizeof(double)) == 0);
  CHECK(std::filesystem::file_size(scratch("img.smr")) == 16 + 13 * 7 * 8);
}

TEST_CASE("multi-plane maps round trip") {
  std::mt19937_64 rng(2);
  MaterialMaps maps({"a", "b", "c"}, 9, 5);
  for (auto& p : maps.planes) p.data = smr::testing::random_vector(rng, 45);
  write_maps(scratch("maps.smr"), maps);
  const MaterialMaps back = read_maps(scratch("maps.smr"), {"a", "b", "c"});
  CHECK(back.names == maps.names);
  for (std::size_t n = 0; n < 3; ++n) CHECK(back.planes[n].data == maps.planes[n].data);
  const MaterialMaps loaded = load_maps(scratch("maps.smr"), {"a", "b", "c"}, 9, 5);
  CHECK(loaded.planes[2].data == maps.planes[2].data);
  CHECK_THROWS_AS(load_maps(scratch("maps.smr"), {"a", "b", "c"}, 5, 9), ShapeError);
  CHECK_THROWS_AS(read_maps(scratch("maps.smr"), {"a", "b"}), ShapeError);
}

TEST_CASE("header is little endian with the documented layout") {
  RawArray a{2, 3, 1, {1, 2, 3, 4, 5, 6}};
  write_raw(scratch("raw.smr"), a);
  std::ifstream in(scratch("raw.smr"), std::ios::binary);
  unsigned char head[16];
  in.read(reinterpret_cast<char*>(head), 16);
  CHECK(std::string(reinterpret_cast<char*>(head), 4) == "SMR1");
  CHECK(head[4] == 2);
  CHECK(head[8] == 3);
  CHECK(head[12] == 1);
  CHECK(head[5] == 0);
  const RawArray back = read_raw(scratch("raw.smr"));
  CHECK(back.values == a.values);
}

TEST_CASE("bad magic and truncation are reported") {
  {
    std::ofstream out(scratch("bad.smr"), std::ios::binary);
    out << "NOPE000000000000";
  }
  CHECK_THROWS_WITH_AS(read_raw(scratch("bad.smr")), doctest::Contains("magic"), IoError);

  write_raw(scratch("trunc.smr"), RawArray{1, 2, 2, {1, 2, 3, 4}});
  std::filesystem::resize_file(scratch("trunc.smr"), 16 + 20);
  CHECK_THROWS_WITH_AS(read_raw(scratch("trunc.smr")), doctest::Contains("expected 48 bytes, found 36"), IoError);
  CHECK_THROWS_AS(read_raw(scratch("does_not_exist.smr")), IoError);
}

TEST_CASE("negative fractions are rejected on load") {
  MaterialMaps maps({"a"}, 4, 4);
  maps.planes[0].data[6] = -1e-3;
  write_maps(scratch("neg.smr"), maps);
  CHECK_THROWS_AS(load_maps(scratch("neg.smr"), {"a"}, 4, 4), IoError);
}

TEST_CASE("sinogram round trip") {
  std::mt19937_64 rng(3);
  MeasuredProjections q(3, 4, 5);
  q.values = smr::testing::random_vector(rng, 60, -3.0, 0.0);
  write_sinogram(scratch("sino.smr"), q);
  CHECK(read_sinogram(scratch("sino.smr")) == q);
}

TEST_CASE("number formatting round trips") {
  std::mt19937_64 rng(4);
  for (double v : smr::testing::random_vector(rng, 200, -1e6, 1e6)) CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::isinf(parse_double("inf")));
  CHECK(std::isnan(parse_double("nan")));
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), IoError);
}

TEST_CASE("convergence csv round trip") {
  std::vector<IterationMetrics> rows{{1, "bone", 0.5, 12.0, 0.7, 100.0},
                                     {1, "water", 0.25, std::numeric_limits<double>::infinity(), 1.0, 3.5},
                                     {2, "bone", 0.125, 18.0, 0.8, std::nan("")}};
  write_convergence(scratch("conv.csv"), rows);
  std::ifstream in(scratch("conv.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,material,rmse,psnr,ssim,objective");
  const auto back = read_convergence(scratch("conv.csv"));
  REQUIRE(back.size() == 3);
  CHECK(back[1].material == "water");
  CHECK(std::isinf(back[1].psnr));
  CHECK(std::isnan(back[2].objective));
  CHECK(back[2].rmse == 0.125);
  CHECK_THROWS_AS(write_convergence(scratch("empty.csv"), {}), IoError);
}

TEST_CASE("pgm export maps the window to 16 bits") {
  Image img(3, 1);
  img.data = {-1.0, 0.5, 2.0};
  write_pgm(scratch("w.pgm"), img, 0.0, 1.0);
  std::ifstream in(scratch("w.pgm"), std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  in.get();
  unsigned char px[6];
  in.read(reinterpret_cast<char*>(px), 6);
  CHECK(magic == "P5");
  CHECK(w == 3);
  CHECK(h == 1);
  CHECK(maxv == 65535);
  CHECK((px[0] << 8 | px[1]) == 0);
  CHECK((px[2] << 8 | px[3]) == 32768);
  CHECK((px[4] << 8 | px[5]) == 65535);
  CHECK_THROWS_AS(write_pgm(scratch("x.pgm"), img, 1.0, 1.0), ConfigError);
}
