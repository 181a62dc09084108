#include "smr/regularizers.hpp"

#include <algorithm>
#include <cmath>

#include "smr/simd/kernels.hpp"

namespace smr {

void TvParams::validate() const {
  if (!(xi >= 0.0)) throw ConfigError("tv xi must be nonnegative");
  if (!(smoothing_eps > 0.0)) throw ConfigError("tv smoothing_eps must be positive");
  if (!(step_size >= 0.0)) throw ConfigError("tv step_size must be nonnegative");
}

void NlmParams::validate() const {
  if (patch_radius < 1) throw ConfigError("nlm patch_radius must be at least 1");
  if (window_radius < patch_radius) throw ConfigError("nlm window_radius must be at least patch_radius");
  if (!(filtering_h >= 0.0)) throw ConfigError("nlm filtering_h must be nonnegative");
}

namespace {

struct Differences {
  std::vector<double> dx, dy, norm;
};

Differences differences(const Image& f, double eps) {
  const std::size_t w = f.width;
  const std::size_t h = f.height;
  Differences d{std::vector<double>(f.size()), std::vector<double>(f.size()), std::vector<double>(f.size())};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      d.dx[i] = x + 1 < w ? f.data[i + 1] - f.data[i] : 0.0;
      d.dy[i] = y + 1 < h ? f.data[i + w] - f.data[i] : 0.0;
      d.norm[i] = std::sqrt(d.dx[i] * d.dx[i] + d.dy[i] * d.dy[i] + eps * eps);
    }
  }
  return d;
}

}  // namespace

double tv_value(const Image& image, double eps) {
  const Differences d = differences(image, eps);
  double total = 0.0;
  for (double v : d.norm) total += v;
  return total;
}

Image tv_gradient(const Image& image, double eps) {
  const Differences d = differences(image, eps);
  const std::size_t w = image.width;
  Image g(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      double v = -(d.dx[i] + d.dy[i]) / d.norm[i];
      if (x > 0) v += d.dx[i - 1] / d.norm[i - 1];
      if (y > 0) v += d.dy[i - w] / d.norm[i - w];
      g.data[i] = v;
    }
  }
  return g;
}

Image tv_descent_step(const Image& image, const TvParams& params) {
  params.validate();
  Image f = image;
  if (params.xi == 0.0 || params.step_size == 0.0) return f;
  double current = tv_value(f, params.smoothing_eps);
  for (std::size_t it = 0; it < params.n_inner_steps; ++it) {
    const Image g = tv_gradient(f, params.smoothing_eps);
    double norm = 0.0;
    for (double v : g.data) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    double step = params.xi * params.step_size / norm;
    bool accepted = false;
    Image trial(f.width, f.height);
    for (int attempt = 0; attempt < 30; ++attempt, step *= 0.5) {
      for (std::size_t i = 0; i < f.size(); ++i) trial.data[i] = f.data[i] - step * g.data[i];
      const double value = tv_value(trial, params.smoothing_eps);
      if (value <= current) {
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    f = trial;
  }
  return f;
}

Image nlm_filter(const Image& image, const NlmParams& params) {
  params.validate();
  const std::size_t w = image.width;
  const std::size_t h = image.height;
  const auto pr = static_cast<std::ptrdiff_t>(params.patch_radius);
  const auto wr = static_cast<std::ptrdiff_t>(params.window_radius);
  const auto& k = simd::active();
  const double inv_h2 = params.filtering_h > 0.0 ? 1.0 / (params.filtering_h * params.filtering_h) : 0.0;

  auto clamp_index = [](std::ptrdiff_t v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  // Input padded by patch + window radius with edge replication so shifted rows are contiguous.
  const std::ptrdiff_t pad = pr + wr;
  const std::size_t pw = w + 2 * static_cast<std::size_t>(pad);
  const std::size_t ph = h + 2 * static_cast<std::size_t>(pad);
  std::vector<double> padded(pw * ph);
  for (std::size_t y = 0; y < ph; ++y) {
    for (std::size_t x = 0; x < pw; ++x) {
      padded[y * pw + x] = image.at(clamp_index(static_cast<std::ptrdiff_t>(x) - pad, w),
                                    clamp_index(static_cast<std::ptrdiff_t>(y) - pad, h));
    }
  }

  std::vector<double> num(w * h, 0.0), den(w * h, 0.0);
  const std::size_t span_h = h + 2 * static_cast<std::size_t>(pr);
  const std::size_t span_w = w + 2 * static_cast<std::size_t>(pr);
  std::vector<double> diff(span_h * span_w), colsum(span_h * w), dist(w * h), weight(w * h), shifted(w * h);

  // One pass per window offset: squared differences, box sum over the patch, weights.
  for (std::ptrdiff_t oy = -wr; oy <= wr; ++oy) {
    for (std::ptrdiff_t ox = -wr; ox <= wr; ++ox) {
      for (std::size_t y = 0; y < span_h; ++y) {
        const double* a = padded.data() + (y + static_cast<std::size_t>(wr)) * pw + static_cast<std::size_t>(wr);
        const double* b = padded.data() + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + wr + oy) * pw +
                          static_cast<std::size_t>(wr + ox);
        k.squared_diff(a, b, diff.data() + y * span_w, span_w);
      }
      for (std::size_t y = 0; y < span_h; ++y) {
        const double* row = diff.data() + y * span_w;
        double s = 0.0;
        for (std::ptrdiff_t t = 0; t < 2 * pr + 1; ++t) s += row[t];
        colsum[y * w] = s;
        for (std::size_t x = 1; x < w; ++x) {
          s += row[x + 2 * static_cast<std::size_t>(pr)] - row[x - 1];
          colsum[y * w + x] = s;
        }
      }
      for (std::size_t x = 0; x < w; ++x) {
        double s = 0.0;
        for (std::ptrdiff_t t = 0; t < 2 * pr + 1; ++t) s += colsum[static_cast<std::size_t>(t) * w + x];
        dist[x] = s;
        for (std::size_t y = 1; y < h; ++y) {
          s += colsum[(y + 2 * static_cast<std::size_t>(pr)) * w + x] - colsum[(y - 1) * w + x];
          dist[y * w + x] = s;
        }
      }
      const bool centre = ox == 0 && oy == 0;
      for (std::size_t i = 0; i < w * h; ++i) {
        // Running sums can leave tiny negative residue; identical patches must read as zero.
        const double d = std::max(dist[i], 0.0);
        if (inv_h2 > 0.0) {
          weight[i] = std::exp(-d * inv_h2);
        } else {
          weight[i] = (centre || d == 0.0) ? 1.0 : 0.0;
        }
      }
      for (std::size_t y = 0; y < h; ++y) {
        const double* src = padded.data() + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + pad + oy) * pw +
                            static_cast<std::size_t>(pad + ox);
        std::copy_n(src, w, shifted.data() + y * w);
      }
      k.weighted_accumulate(weight.data(), shifted.data(), num.data(), den.data(), w * h);
    }
  }
  Image out(w, h);
  for (std::size_t i = 0; i < w * h; ++i) out.data[i] = num[i] / den[i];
  return out;
}

}  // namespace smr
