#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smr/geometry.hpp"
#include "smr/image.hpp"

namespace smr {

double rmse(const Image& f, const Image& f_star);

/// 20 log10(max(f_star) / rmse); +infinity when the images are identical.
double psnr(const Image& f, const Image& f_star);

/// Global SSIM with stabilisers e1, e2.
double ssim(const Image& f, const Image& f_star, double e1, double e2);

/// SSIM with e1 = (0.01 max f*)^2, e2 = (0.03 max f*)^2.
double ssim(const Image& f, const Image& f_star);

/// ||A f - p||^2 + gamma ||f - g - t||^2 + tau * l0_count.
double bmfmr_objective(const Image& f, const Image& g, const Image& t, std::span<const double> p_row,
                       const SystemMatrix& a, double gamma, double tau, std::size_t l0_count);

/// Same, with A f already available.
double bmfmr_objective(std::span<const double> af, const Image& f, const Image& g, const Image& t,
                       std::span<const double> p_row, double gamma, double tau, std::size_t l0_count);

struct RayLinearization;
struct DecomposedSinogram;
struct MeasuredProjections;

/// Y(P) summed over rays; lins[r] is the expansion at P_prev's column r.
double decomposition_objective(const DecomposedSinogram& p, const DecomposedSinogram& p_prev,
                               const std::vector<RayLinearization>& lins, const MeasuredProjections& q_bar,
                               const DecomposedSinogram& f_proj, double lambda);

/// One row of the convergence report.
struct IterationMetrics {
  std::size_t iteration = 0;  // 1-based
  std::string material;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace smr
