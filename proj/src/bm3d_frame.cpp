#include "smr/bm3d_frame.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "smr/simd/kernels.hpp"

namespace smr {

double Bm3dParams::effective_match_threshold() const {
  if (match_threshold >= 0.0) return match_threshold;
  const double b = static_cast<double>(block_size);
  return match_scale * sigma * sigma * b * b;
}

void Bm3dParams::validate() const {
  if (block_size < 2) throw ConfigError("bm3d block_size must be at least 2");
  if (max_group_size == 0 || !std::has_single_bit(max_group_size)) {
    throw ConfigError("bm3d max_group_size must be a power of two");
  }
  if (search_window < block_size) throw ConfigError("bm3d search_window must be at least block_size");
  if (reference_step == 0) throw ConfigError("bm3d reference_step must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("bm3d sigma must be nonnegative");
}

std::size_t GroupSpectrum::total_retained() const {
  std::size_t total = 0;
  for (std::size_t r : retained) total += r;
  return total;
}

std::vector<double> dct_matrix(std::size_t n) {
  std::vector<double> c(n * n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      c[k * n + i] = alpha * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(k) / (2.0 * nn));
    }
  }
  return c;
}

// Multilevel orthonormal Haar on `count` (a power of two) entries spaced by `stride`.
// Output order: coarsest average first, then details from coarse to fine.
void haar_forward(double* values, std::size_t count, std::size_t stride) {
  std::vector<double> tmp(count);
  for (std::size_t len = count; len > 1; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double a = values[(2 * i) * stride];
      const double b = values[(2 * i + 1) * stride];
      tmp[i] = (a + b) * std::numbers::sqrt2 * 0.5;
      tmp[half + i] = (a - b) * std::numbers::sqrt2 * 0.5;
    }
    for (std::size_t i = 0; i < len; ++i) values[i * stride] = tmp[i];
  }
}

void haar_inverse(double* values, std::size_t count, std::size_t stride) {
  std::vector<double> tmp(count);
  for (std::size_t len = 2; len <= count; len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double s = values[i * stride];
      const double d = values[(half + i) * stride];
      tmp[2 * i] = (s + d) * std::numbers::sqrt2 * 0.5;
      tmp[2 * i + 1] = (s - d) * std::numbers::sqrt2 * 0.5;
    }
    for (std::size_t i = 0; i < len; ++i) values[i * stride] = tmp[i];
  }
}

namespace {

std::vector<std::size_t> reference_positions(std::size_t extent, std::size_t block, std::size_t step) {
  std::vector<std::size_t> out;
  const std::size_t last = extent - block;
  for (std::size_t p = 0; p <= last; p += step) out.push_back(p);
  if (out.back() != last) out.push_back(last);
  return out;
}

// out = C * block * C^T for a b x b block (row-major), via two passes.
void dct2(const std::vector<double>& c, std::size_t b, const double* in, std::size_t in_stride, double* out,
          std::vector<double>& tmp) {
  for (std::size_t y = 0; y < b; ++y) {
    for (std::size_t k = 0; k < b; ++k) {
      double s = 0.0;
      for (std::size_t x = 0; x < b; ++x) s += c[k * b + x] * in[y * in_stride + x];
      tmp[y * b + k] = s;
    }
  }
  for (std::size_t k = 0; k < b; ++k) {
    for (std::size_t kx = 0; kx < b; ++kx) {
      double s = 0.0;
      for (std::size_t y = 0; y < b; ++y) s += c[k * b + y] * tmp[y * b + kx];
      out[k * b + kx] = s;
    }
  }
}

void idct2(const std::vector<double>& c, std::size_t b, const double* in, double* out, std::vector<double>& tmp) {
  for (std::size_t y = 0; y < b; ++y) {
    for (std::size_t kx = 0; kx < b; ++kx) {
      double s = 0.0;
      for (std::size_t k = 0; k < b; ++k) s += c[k * b + y] * in[k * b + kx];
      tmp[y * b + kx] = s;
    }
  }
  for (std::size_t y = 0; y < b; ++y) {
    for (std::size_t x = 0; x < b; ++x) {
      double s = 0.0;
      for (std::size_t kx = 0; kx < b; ++kx) s += c[kx * b + x] * tmp[y * b + kx];
      out[y * b + x] = s;
    }
  }
}

void check_plan(const GroupingPlan& plan, std::size_t width, std::size_t height, std::size_t block) {
  if (plan.width != width || plan.height != height) throw ShapeError("bm3d: plan was built for a different image size");
  if (plan.block_size != block) throw ShapeError("bm3d: plan block size differs from parameters");
}

}  // namespace

GroupingPlan block_match(const Image& image, const Bm3dParams& params) {
  params.validate();
  const std::size_t b = params.block_size;
  if (image.width < b || image.height < b) throw ShapeError("bm3d: image smaller than the block size");
  GroupingPlan plan;
  plan.width = image.width;
  plan.height = image.height;
  plan.block_size = b;
  const auto xs = reference_positions(image.width, b, params.reference_step);
  const auto ys = reference_positions(image.height, b, params.reference_step);
  const std::size_t half = params.search_window / 2;
  const double threshold = params.effective_match_threshold();
  const auto& kernels = simd::active();
  const std::size_t refs = xs.size() * ys.size();
  plan.groups.resize(refs);

#pragma omp parallel
  {
    struct Candidate {
      double d;
      std::size_t y, x;
    };
    std::vector<Candidate> cands;
#pragma omp for schedule(static)
    for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(refs); ++gi) {
      const std::size_t ry = ys[static_cast<std::size_t>(gi) / xs.size()];
      const std::size_t rx = xs[static_cast<std::size_t>(gi) % xs.size()];
      const std::size_t y0 = ry > half ? ry - half : 0;
      const std::size_t x0 = rx > half ? rx - half : 0;
      const std::size_t y1 = std::min(ry + half, image.height - b);
      const std::size_t x1 = std::min(rx + half, image.width - b);
      const double* ref = image.data.data() + ry * image.width + rx;
      cands.clear();
      for (std::size_t y = y0; y <= y1; ++y) {
        for (std::size_t x = x0; x <= x1; ++x) {
          if (x == rx && y == ry) continue;
          const double d = kernels.block_ssd(ref, image.data.data() + y * image.width + x, image.width, b);
          if (d <= threshold) cands.push_back({d, y, x});
        }
      }
      const std::size_t want = std::min(cands.size(), params.max_group_size - 1);
      auto less = [](const Candidate& a, const Candidate& c) {
        if (a.d != c.d) return a.d < c.d;
        if (a.y != c.y) return a.y < c.y;
        return a.x < c.x;
      };
      std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(want), cands.end(), less);
      const std::size_t k = std::bit_floor(want + 1);
      auto& group = plan.groups[static_cast<std::size_t>(gi)];
      group.reserve(k);
      group.push_back({static_cast<std::uint32_t>(rx), static_cast<std::uint32_t>(ry)});
      for (std::size_t i = 0; i + 1 < k; ++i) {
        group.push_back({static_cast<std::uint32_t>(cands[i].x), static_cast<std::uint32_t>(cands[i].y)});
      }
    }
  }
  return plan;
}

GroupSpectrum analysis(const Image& image, const GroupingPlan& plan, const Bm3dParams& params) {
  const std::size_t b = params.block_size;
  check_plan(plan, image.width, image.height, b);
  const std::size_t bb = b * b;
  const std::vector<double> c = dct_matrix(b);
  GroupSpectrum spec;
  spec.block_size = b;
  spec.coefficients.resize(plan.groups.size());
  spec.retained.assign(plan.groups.size(), 0);
#pragma omp parallel
  {
    std::vector<double> tmp(bb);
#pragma omp for schedule(static)
    for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(plan.groups.size()); ++gi) {
      const auto& group = plan.groups[static_cast<std::size_t>(gi)];
      auto& coef = spec.coefficients[static_cast<std::size_t>(gi)];
      coef.assign(group.size() * bb, 0.0);
      for (std::size_t k = 0; k < group.size(); ++k) {
        const double* src = image.data.data() + group[k].y * image.width + group[k].x;
        dct2(c, b, src, image.width, coef.data() + k * bb, tmp);
      }
      for (std::size_t i = 0; i < bb; ++i) haar_forward(coef.data() + i, group.size(), bb);
    }
  }
  return spec;
}

Image synthesis(const GroupSpectrum& spectrum, const GroupingPlan& plan, const Bm3dParams& params) {
  const std::size_t b = params.block_size;
  if (spectrum.block_size != b || plan.block_size != b) throw ShapeError("bm3d synthesis: block size mismatch");
  if (spectrum.coefficients.size() != plan.groups.size()) throw ShapeError("bm3d synthesis: spectrum does not match plan");
  const std::size_t bb = b * b;
  const std::vector<double> c = dct_matrix(b);
  std::vector<std::vector<double>> blocks(plan.groups.size());
#pragma omp parallel
  {
    std::vector<double> tmp(bb);
    std::vector<double> coef;
#pragma omp for schedule(static)
    for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(plan.groups.size()); ++gi) {
      const std::size_t g = static_cast<std::size_t>(gi);
      const std::size_t k = plan.groups[g].size();
      if (spectrum.coefficients[g].size() != k * bb) continue;
      coef = spectrum.coefficients[g];
      for (std::size_t i = 0; i < bb; ++i) haar_inverse(coef.data() + i, k, bb);
      blocks[g].resize(k * bb);
      for (std::size_t j = 0; j < k; ++j) idct2(c, b, coef.data() + j * bb, blocks[g].data() + j * bb, tmp);
    }
  }
  Image num(plan.width, plan.height);
  std::vector<double> den(plan.width * plan.height, 0.0);
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const auto& group = plan.groups[g];
    if (blocks[g].size() != group.size() * bb) throw ShapeError("bm3d synthesis: group spectrum has wrong size");
    const double w = spectrum.thresholded ? 1.0 / (1.0 + static_cast<double>(spectrum.retained[g])) : 1.0;
    for (std::size_t j = 0; j < group.size(); ++j) {
      const double* blk = blocks[g].data() + j * bb;
      for (std::size_t y = 0; y < b; ++y) {
        const std::size_t row = (group[j].y + y) * plan.width + group[j].x;
        for (std::size_t x = 0; x < b; ++x) {
          num.data[row + x] += w * blk[y * b + x];
          den[row + x] += w;
        }
      }
    }
  }
  for (std::size_t i = 0; i < den.size(); ++i) num.data[i] = den[i] > 0.0 ? num.data[i] / den[i] : 0.0;
  return num;
}

GroupSpectrum hard_threshold(GroupSpectrum spectrum, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("threshold tau must be nonnegative");
  const double cut = std::sqrt(tau);
  spectrum.retained.assign(spectrum.coefficients.size(), 0);
  for (std::size_t g = 0; g < spectrum.coefficients.size(); ++g) {
    std::size_t kept = 0;
    for (double& v : spectrum.coefficients[g]) {
      if (std::abs(v) >= cut && !std::isinf(cut)) {
        if (v != 0.0) ++kept;
      } else {
        v = 0.0;
      }
    }
    spectrum.retained[g] = kept;
  }
  spectrum.thresholded = tau > 0.0;
  return spectrum;
}

ShrinkResult shrink(const Image& image, double tau, const Bm3dParams& params) {
  const GroupingPlan plan = block_match(image, params);
  GroupSpectrum spec = hard_threshold(analysis(image, plan, params), tau);
  ShrinkResult out;
  out.retained = spec.total_retained();
  out.image = synthesis(spec, plan, params);
  return out;
}

double estimate_sigma(const Image& image) {
  const std::size_t w = image.width / 2;
  const std::size_t h = image.height / 2;
  if (w == 0 || h == 0) return 0.0;
  std::vector<double> detail;
  detail.reserve(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double a = image.at(2 * x, 2 * y);
      const double b = image.at(2 * x + 1, 2 * y);
      const double c = image.at(2 * x, 2 * y + 1);
      const double d = image.at(2 * x + 1, 2 * y + 1);
      detail.push_back(std::abs(a - b - c + d) * 0.5);
    }
  }
  const std::size_t mid = detail.size() / 2;
  std::nth_element(detail.begin(), detail.begin() + static_cast<std::ptrdiff_t>(mid), detail.end());
  double median = detail[mid];
  if (detail.size() % 2 == 0) {
    const double lower = *std::max_element(detail.begin(), detail.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

}  // namespace smr
