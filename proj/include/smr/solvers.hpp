#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "smr/bm3d_frame.hpp"
#include "smr/geometry.hpp"
#include "smr/image.hpp"
#include "smr/metrics.hpp"
#include "smr/regularizers.hpp"
#include "smr/sinogram.hpp"
#include "smr/spectral.hpp"

namespace smr {

enum class Method { msart, tvmr, nlmmr, bmfmr, fbp_direct };

/// Accepts msart, tvmr, nlmmr, bmfmr, fbp-direct; anything else is a ConfigError naming the valid set.
Method parse_method(std::string_view name);
std::string method_name(Method method);

/// sart: f - beta2 V^-1 A^T W^-1 (A f - p) with W, V the row and column sums of A.
/// gradient: f - beta2 A^T (A f - p).
enum class ImageStep { sart, gradient };
ImageStep parse_image_step(std::string_view name);

struct MaterialParams {
  double gamma = 0.0;
  double tau = 0.0;
  double sigma = 0.0;        // BM3D noise level; 0 estimates it from the map each iteration
  double xi = 0.0;           // TV weight
  double nlm_h_scale = 10.0; // h = nlm_h_scale * estimated sigma
};

struct SolverConfig {
  Method method = Method::msart;
  double beta1 = 0.2;
  double beta2 = 0.2;
  double lambda = 0.002;
  ImageStep image_step = ImageStep::sart;
  std::size_t max_iterations = 40;
  std::vector<MaterialParams> materials;
  Bm3dParams bm3d;
  TvParams tv;
  NlmParams nlm;

  void validate(std::size_t n_materials) const;
};

struct SolverState {
  MaterialMaps f;
  DecomposedSinogram p;
  MaterialMaps g;
  MaterialMaps t;
  std::size_t iteration = 0;
};

struct Diagnostics {
  std::vector<IterationMetrics> rows;  // one per iteration per material
  /// Y(P^(k+1)) per iteration, linearised at P^(k).
  std::vector<double> decomposition_objective;
  /// Per iteration per material: objective at the start of the material update,
  /// evaluated against P^(k+1). Only filled by BMFMR.
  std::vector<double> objective_before;
};

struct SolverResult {
  MaterialMaps maps;
  Diagnostics diagnostics;
};

/// Inputs shared by every iterative method.
struct Problem {
  const MeasuredProjections* q_bar = nullptr;
  const SystemMatrix* a = nullptr;
  const SpectralForward* forward = nullptr;
  std::vector<std::string> names;
  std::size_t width = 0;
  std::size_t height = 0;
  const MaterialMaps* truth = nullptr;  // enables RMSE/PSNR/SSIM columns
  std::function<void(std::size_t iteration, const MaterialMaps&)> on_iteration;
};

/// One image update of a single map against its target sinogram row; returns the
/// updated (unclamped) image. `af` is A f.
Image image_update(const Image& f, std::span<const double> af, std::span<const double> p_row, const SystemMatrix& a,
                   double beta2, ImageStep mode);

/// Per-material image_update followed by the positivity clamp.
MaterialMaps msart_image_step(const MaterialMaps& f, const DecomposedSinogram& p_new, const SystemMatrix& a,
                              double beta2, ImageStep mode = ImageStep::sart);

/// Two-substep BMFMR image update: f_half = image_update(f), then
/// f_half - gamma (f - g - t). Not clamped.
Image bmfmr_image_step(const Image& f, std::span<const double> af, std::span<const double> p_row, const Image& g,
                       const Image& t, const SystemMatrix& a, double beta2, double gamma, ImageStep mode);

/// The same update written in one shot: f - beta2 B(Af - p) - gamma (f - g - t).
Image bmfmr_image_step_combined(const Image& f, std::span<const double> p_row, const Image& g, const Image& t,
                                const SystemMatrix& a, double beta2, double gamma, ImageStep mode);

SolverResult run_msart(const Problem& problem, const SolverConfig& cfg);
SolverResult run_tvmr(const Problem& problem, const SolverConfig& cfg);
SolverResult run_nlmmr(const Problem& problem, const SolverConfig& cfg);
SolverResult run_bmfmr(const Problem& problem, const SolverConfig& cfg);

/// Dispatch on cfg.method for the iterative methods.
SolverResult run_solver(const Problem& problem, const SolverConfig& cfg);

/// Per-bin FBP of -qbar, then a per-pixel least-squares fit of the bin-effective
/// attenuations sum_i s_m dE phi_n, clamped at zero.
MaterialMaps run_fbp_direct(const MeasuredProjections& q_bar, const ScanGeometry& geometry, const SpectralModel& model,
                            const BasisAttenuation& basis);

}  // namespace smr
