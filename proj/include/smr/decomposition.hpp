#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smr/sinogram.hpp"
#include "smr/spectral.hpp"

namespace smr {

/// Taylor expansion point of one ray: Theta (M x N, row-major), S and q = ln S.
struct RayLinearization {
  std::size_t bins = 0;
  std::size_t materials = 0;
  std::vector<double> theta;
  std::vector<double> s;
  std::vector<double> q;

  double theta_at(std::size_t m, std::size_t n) const { return theta[m * materials + n]; }
};

RayLinearization linearize(const SpectralForward& forward, std::span<const double> p_col);
RayLinearization linearize(const SpectralModel& model, const BasisAttenuation& basis,
                           std::span<const double> p_col);

/// One regularised Gauss-Newton step of a single ray about its expansion point:
/// p - beta1 (Theta^T Theta + lambda I)^{-1} Theta^T diag(S) (qbar - q).
std::vector<double> update_ray(std::span<const double> p_col, const RayLinearization& lin,
                               std::span<const double> q_bar, double beta1, double lambda);

/// Per-ray objective
///   ||Theta (p - p_prev) + diag(S)(qbar - q)||^2 + lambda ||f_proj - p||^2
/// with the linearisation taken at p_prev.
double ray_objective(std::span<const double> p, std::span<const double> p_prev, const RayLinearization& lin,
                     std::span<const double> q_bar, std::span<const double> f_proj, double lambda);

/// Preconditioned descent step on ray_objective from an arbitrary p:
/// p - beta1 (Theta^T Theta + lambda I)^{-1} grad. Coincides with update_ray when
/// p == p_prev == f_proj; iterating it converges to the objective's minimiser.
std::vector<double> descend_ray(std::span<const double> p, std::span<const double> p_prev,
                                const RayLinearization& lin, std::span<const double> q_bar,
                                std::span<const double> f_proj, double beta1, double lambda);

/// Smallest eigenvalue of Theta^T Theta + lambda I.
double min_eigenvalue(const RayLinearization& lin, double lambda);

/// Relinearises every ray at its column of P and applies update_ray. When
/// `objective` is given it receives the summed ray_objective at the new P
/// (p_prev = f_proj = the input column).
DecomposedSinogram decompose_step(const DecomposedSinogram& p, const MeasuredProjections& q_bar,
                                  const SpectralForward& forward, double beta1, double lambda,
                                  double* objective = nullptr);

struct SearchBox {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t steps = 201;         // grid samples per axis
  std::size_t refine_rounds = 60;  // coordinate-descent rounds after the grid
};

/// Grid search over the box followed by shrinking coordinate descent. N <= 2.
std::vector<double> brute_force_minimize_Y(const RayLinearization& lin, std::span<const double> q_bar,
                                           std::span<const double> p_prev, std::span<const double> f_proj,
                                           double lambda, const SearchBox& box);

}  // namespace smr
