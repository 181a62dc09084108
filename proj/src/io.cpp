#include "smr/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace smr {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'M', 'R', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t swap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
  return r;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw IoError(std::string(what) + " too large for the raw format");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_raw(const std::filesystem::path& path, const RawArray& array) {
  const std::size_t expected = static_cast<std::size_t>(array.count0) * array.count1 * array.count2;
  if (array.values.size() != expected) throw ShapeError("write_raw: value count does not match header");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), 4);
  put_u32(out, array.count0);
  put_u32(out, array.count1);
  put_u32(out, array.count2);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(array.values.data()),
              static_cast<std::streamsize>(array.values.size() * sizeof(double)));
  } else {
    for (double v : array.values) {
      auto bits = swap64(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RawArray read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) {
    throw IoError("'" + path.string() + "': file is " + std::to_string(bytes.size()) + " bytes, shorter than the header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw IoError("'" + path.string() + "': bad magic, expected SMR1");
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  RawArray array;
  array.count0 = get_u32(u + 4);
  array.count1 = get_u32(u + 8);
  array.count2 = get_u32(u + 12);
  const std::size_t count = static_cast<std::size_t>(array.count0) * array.count1 * array.count2;
  const std::size_t expected = kHeaderBytes + count * sizeof(double);
  if (bytes.size() != expected) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  array.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes.data() + kHeaderBytes + i * 8, 8);
    if constexpr (std::endian::native != std::endian::little) bits = swap64(bits);
    array.values[i] = std::bit_cast<double>(bits);
  }
  return array;
}

void write_maps(const std::filesystem::path& path, const MaterialMaps& maps) {
  RawArray a;
  a.count0 = checked_u32(maps.materials(), "material count");
  a.count1 = checked_u32(maps.width(), "width");
  a.count2 = checked_u32(maps.height(), "height");
  a.values.reserve(maps.materials() * maps.pixels());
  for (const auto& plane : maps.planes) {
    if (plane.width != maps.width() || plane.height != maps.height()) throw ShapeError("write_maps: planes differ in size");
    a.values.insert(a.values.end(), plane.data.begin(), plane.data.end());
  }
  write_raw(path, a);
}

MaterialMaps read_maps(const std::filesystem::path& path, std::vector<std::string> names) {
  RawArray a = read_raw(path);
  if (names.empty()) {
    for (std::uint32_t n = 0; n < a.count0; ++n) names.push_back("material" + std::to_string(n));
  }
  if (names.size() != a.count0) {
    throw ShapeError("'" + path.string() + "' holds " + std::to_string(a.count0) + " planes, expected " +
                     std::to_string(names.size()));
  }
  MaterialMaps maps(std::move(names), a.count1, a.count2);
  const std::size_t plane = static_cast<std::size_t>(a.count1) * a.count2;
  for (std::size_t n = 0; n < maps.materials(); ++n) {
    std::copy_n(a.values.begin() + static_cast<std::ptrdiff_t>(n * plane), plane, maps.planes[n].data.begin());
  }
  return maps;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  RawArray a;
  a.count0 = 1;
  a.count1 = checked_u32(image.width, "width");
  a.count2 = checked_u32(image.height, "height");
  a.values = image.data;
  write_raw(path, a);
}

Image read_image(const std::filesystem::path& path) {
  RawArray a = read_raw(path);
  if (a.count0 != 1) throw ShapeError("'" + path.string() + "' holds " + std::to_string(a.count0) + " planes, expected 1");
  Image img(a.count1, a.count2);
  img.data = std::move(a.values);
  return img;
}

void write_sinogram(const std::filesystem::path& path, const MeasuredProjections& q) {
  RawArray a;
  a.count0 = checked_u32(q.bins, "bin count");
  a.count1 = checked_u32(q.views, "view count");
  a.count2 = checked_u32(q.cells, "cell count");
  a.values = q.values;
  write_raw(path, a);
}

MeasuredProjections read_sinogram(const std::filesystem::path& path) {
  RawArray a = read_raw(path);
  MeasuredProjections q(a.count0, a.count1, a.count2);
  q.values = std::move(a.values);
  return q;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) throw IoError("not a number: '" + text + "'");
  return v;
}

void write_convergence(const std::filesystem::path& path, const std::vector<IterationMetrics>& rows) {
  if (rows.empty()) throw IoError("no diagnostics to write to '" + path.string() + "'");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "iteration,material,rmse,psnr,ssim,objective\n";
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.material << ',' << format_double(r.rmse) << ',' << format_double(r.psnr) << ','
        << format_double(r.ssim) << ',' << format_double(r.objective) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<IterationMetrics> read_convergence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "iteration,material,rmse,psnr,ssim,objective") {
    throw IoError("'" + path.string() + "': unexpected convergence header");
  }
  std::vector<IterationMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw IoError("'" + path.string() + "': expected 6 columns in '" + line + "'");
    IterationMetrics r;
    r.iteration = static_cast<std::size_t>(std::stoull(cells[0]));
    r.material = cells[1];
    r.rmse = parse_double(cells[2]);
    r.psnr = parse_double(cells[3]);
    r.ssim = parse_double(cells[4]);
    r.objective = parse_double(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

void write_pgm(const std::filesystem::path& path, const Image& image, double low, double high) {
  if (!(high > low)) throw ConfigError("display window must have high > low");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::vector<unsigned char> row(image.width * 2);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double t = std::clamp((image.at(x, y) - low) / (high - low), 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      row[2 * x] = static_cast<unsigned char>(v >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace smr
