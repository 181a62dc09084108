#include "smr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "smr/decomposition.hpp"
#include "smr/sinogram.hpp"

namespace smr {

double rmse(const Image& f, const Image& f_star) {
  require_same_shape(f, f_star, "rmse");
  if (f.size() == 0) throw ShapeError("rmse: empty image");
  // Compensated sum: the plain loop drifts by a few ulps on large images.
  double sum = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f.data[i] - f_star.data[i];
    const double term = d * d;
    const double next = sum + term;
    carry += std::abs(sum) >= term ? (sum - next) + term : (term - next) + sum;
    sum = next;
  }
  return std::sqrt((sum + carry) / static_cast<double>(f.size()));
}

double psnr(const Image& f, const Image& f_star) {
  const double e = rmse(f, f_star);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(f_star.data.begin(), f_star.data.end());
  return 20.0 * std::log10(peak / e);
}

double ssim(const Image& f, const Image& f_star, double e1, double e2) {
  require_same_shape(f, f_star, "ssim");
  if (f.size() == 0) throw ShapeError("ssim: empty image");
  const double n = static_cast<double>(f.size());
  double mean_f = 0.0;
  double mean_g = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mean_f += f.data[i];
    mean_g += f_star.data[i];
  }
  mean_f /= n;
  mean_g /= n;
  double var_f = 0.0;
  double var_g = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = f.data[i] - mean_f;
    const double b = f_star.data[i] - mean_g;
    var_f += a * a;
    var_g += b * b;
    cov += a * b;
  }
  var_f /= n;
  var_g /= n;
  cov /= n;
  const double num = (2.0 * mean_f * mean_g + e1) * (2.0 * cov + e2);
  const double den = (mean_f * mean_f + mean_g * mean_g + e1) * (var_f + var_g + e2);
  return num / den;
}

double ssim(const Image& f, const Image& f_star) {
  const double peak = f_star.size() ? *std::max_element(f_star.data.begin(), f_star.data.end()) : 0.0;
  const double e1 = (0.01 * peak) * (0.01 * peak);
  const double e2 = (0.03 * peak) * (0.03 * peak);
  return ssim(f, f_star, e1, e2);
}

double bmfmr_objective(std::span<const double> af, const Image& f, const Image& g, const Image& t,
                       std::span<const double> p_row, double gamma, double tau, std::size_t l0_count) {
  require_same_shape(f, g, "bmfmr_objective");
  require_same_shape(f, t, "bmfmr_objective");
  if (af.size() != p_row.size()) throw ShapeError("bmfmr_objective: sinogram length mismatch");
  double data = 0.0;
  for (std::size_t r = 0; r < af.size(); ++r) data += (af[r] - p_row[r]) * (af[r] - p_row[r]);
  double coupling = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double c = f.data[i] - g.data[i] - t.data[i];
    coupling += c * c;
  }
  return data + gamma * coupling + tau * static_cast<double>(l0_count);
}

double bmfmr_objective(const Image& f, const Image& g, const Image& t, std::span<const double> p_row,
                       const SystemMatrix& a, double gamma, double tau, std::size_t l0_count) {
  if (f.size() != a.pixels()) throw ShapeError("bmfmr_objective: image does not match the system matrix");
  if (p_row.size() != a.rays()) throw ShapeError("bmfmr_objective: sinogram does not match the system matrix");
  const std::vector<double> af = a.forward(f.span());
  return bmfmr_objective(af, f, g, t, p_row, gamma, tau, l0_count);
}

double decomposition_objective(const DecomposedSinogram& p, const DecomposedSinogram& p_prev,
                               const std::vector<RayLinearization>& lins, const MeasuredProjections& q_bar,
                               const DecomposedSinogram& f_proj, double lambda) {
  if (p.materials != p_prev.materials || p.rays != p_prev.rays || p.materials != f_proj.materials ||
      p.rays != f_proj.rays || lins.size() != p.rays || q_bar.rays() != p.rays) {
    throw ShapeError("decomposition_objective: operand shapes differ");
  }
  std::vector<double> col(p.materials), prev(p.materials), proj(p.materials), qb(q_bar.bins);
  double total = 0.0;
  for (std::size_t r = 0; r < p.rays; ++r) {
    for (std::size_t n = 0; n < p.materials; ++n) {
      col[n] = p.at(n, r);
      prev[n] = p_prev.at(n, r);
      proj[n] = f_proj.at(n, r);
    }
    for (std::size_t m = 0; m < q_bar.bins; ++m) qb[m] = q_bar.at(m, r);
    total += ray_objective(col, prev, lins[r], qb, proj, lambda);
  }
  return total;
}

}  // namespace smr
