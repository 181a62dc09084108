#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smr/image.hpp"
#include "smr/metrics.hpp"
#include "smr/sinogram.hpp"

namespace smr {

/// Contents of an SMR1 container: a 16-byte header ("SMR1" then three
/// little-endian u32 counts) followed by count0*count1*count2 little-endian doubles.
struct RawArray {
  std::uint32_t count0 = 0;
  std::uint32_t count1 = 0;
  std::uint32_t count2 = 0;
  std::vector<double> values;
};

void write_raw(const std::filesystem::path& path, const RawArray& array);
RawArray read_raw(const std::filesystem::path& path);

/// Maps are stored as (N, J1, J2): planes of width J1 and height J2.
void write_maps(const std::filesystem::path& path, const MaterialMaps& maps);
MaterialMaps read_maps(const std::filesystem::path& path, std::vector<std::string> names = {});

void write_image(const std::filesystem::path& path, const Image& image);
Image read_image(const std::filesystem::path& path);

/// Sinograms are stored as (M, n_views, n_cells).
void write_sinogram(const std::filesystem::path& path, const MeasuredProjections& q);
MeasuredProjections read_sinogram(const std::filesystem::path& path);

/// CSV with header iteration,material,rmse,psnr,ssim,objective.
void write_convergence(const std::filesystem::path& path, const std::vector<IterationMetrics>& rows);
std::vector<IterationMetrics> read_convergence(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double; inf/-inf/nan spelled out.
std::string format_double(double v);
double parse_double(const std::string& text);

/// 16-bit binary PGM; values mapped linearly from [low, high] to [0, 65535] and clipped.
void write_pgm(const std::filesystem::path& path, const Image& image, double low, double high);

}  // namespace smr
