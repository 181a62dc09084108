#include "smr/decomposition.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "smr/errors.hpp"

namespace smr {

namespace {

// Bins and materials are tiny; fixed maximum sizes keep the solves off the heap.
constexpr int kMaxDim = 16;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

SmallMatrix theta_matrix(const RayLinearization& lin) {
  SmallMatrix t(lin.bins, lin.materials);
  for (std::size_t m = 0; m < lin.bins; ++m) {
    for (std::size_t n = 0; n < lin.materials; ++n) t(m, n) = lin.theta_at(m, n);
  }
  return t;
}

SmallMatrix normal_matrix(const SmallMatrix& t, double lambda) {
  SmallMatrix h = t.transpose() * t;
  h.diagonal().array() += lambda;
  return h;
}

void check_dims(const RayLinearization& lin, std::size_t p, std::size_t q) {
  if (p != lin.materials || q != lin.bins) throw ShapeError("ray update: vector sizes do not match the linearisation");
  if (lin.bins > kMaxDim || lin.materials > kMaxDim) throw ShapeError("ray update: too many bins or materials");
}

}  // namespace

RayLinearization linearize(const SpectralForward& forward, std::span<const double> p_col) {
  if (p_col.size() != forward.materials()) throw ShapeError("linearize: wrong number of materials");
  RayLinearization lin;
  lin.bins = forward.bins();
  lin.materials = forward.materials();
  lin.theta.resize(lin.bins * lin.materials);
  lin.s.resize(lin.bins);
  lin.q.resize(lin.bins);
  auto ws = forward.workspace();
  forward.evaluate(p_col, lin.s, lin.theta, ws);
  for (std::size_t m = 0; m < lin.bins; ++m) lin.q[m] = std::log(lin.s[m]);
  return lin;
}

RayLinearization linearize(const SpectralModel& model, const BasisAttenuation& basis,
                           std::span<const double> p_col) {
  return linearize(SpectralForward(model, basis), p_col);
}

std::vector<double> update_ray(std::span<const double> p_col, const RayLinearization& lin,
                               std::span<const double> q_bar, double beta1, double lambda) {
  return descend_ray(p_col, p_col, lin, q_bar, p_col, beta1, lambda);
}

double ray_objective(std::span<const double> p, std::span<const double> p_prev, const RayLinearization& lin,
                     std::span<const double> q_bar, std::span<const double> f_proj, double lambda) {
  check_dims(lin, p.size(), q_bar.size());
  double total = 0.0;
  for (std::size_t m = 0; m < lin.bins; ++m) {
    double r = lin.s[m] * (q_bar[m] - lin.q[m]);
    for (std::size_t n = 0; n < lin.materials; ++n) r += lin.theta_at(m, n) * (p[n] - p_prev[n]);
    total += r * r;
  }
  double penalty = 0.0;
  for (std::size_t n = 0; n < lin.materials; ++n) penalty += (f_proj[n] - p[n]) * (f_proj[n] - p[n]);
  return total + lambda * penalty;
}

std::vector<double> descend_ray(std::span<const double> p, std::span<const double> p_prev,
                                const RayLinearization& lin, std::span<const double> q_bar,
                                std::span<const double> f_proj, double beta1, double lambda) {
  check_dims(lin, p.size(), q_bar.size());
  const SmallMatrix t = theta_matrix(lin);
  SmallVector residual(lin.bins);
  for (std::size_t m = 0; m < lin.bins; ++m) residual(m) = lin.s[m] * (q_bar[m] - lin.q[m]);
  SmallVector delta(lin.materials);
  SmallVector anchor(lin.materials);
  for (std::size_t n = 0; n < lin.materials; ++n) {
    delta(n) = p[n] - p_prev[n];
    anchor(n) = p[n] - f_proj[n];
  }
  // Half the gradient of ray_objective; the factor 2 cancels against the Hessian.
  const SmallVector grad = t.transpose() * (t * delta + residual) + lambda * anchor;
  const SmallVector step = normal_matrix(t, lambda).llt().solve(grad);
  std::vector<double> out(lin.materials);
  for (std::size_t n = 0; n < lin.materials; ++n) out[n] = p[n] - beta1 * step(n);
  return out;
}

double min_eigenvalue(const RayLinearization& lin, double lambda) {
  const SmallMatrix h = normal_matrix(theta_matrix(lin), lambda);
  Eigen::SelfAdjointEigenSolver<SmallMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DecomposedSinogram decompose_step(const DecomposedSinogram& p, const MeasuredProjections& q_bar,
                                  const SpectralForward& forward, double beta1, double lambda,
                                  double* objective) {
  if (p.materials != forward.materials()) throw ShapeError("decompose_step: material count mismatch");
  if (q_bar.bins != forward.bins()) throw ShapeError("decompose_step: bin count mismatch");
  if (q_bar.rays() != p.rays) throw ShapeError("decompose_step: ray count mismatch");
  const std::size_t n_mat = p.materials;
  const std::size_t n_bins = q_bar.bins;
  const std::size_t rays = p.rays;
  DecomposedSinogram out(n_mat, rays);
  std::vector<double> ray_obj(objective ? rays : 0);

#pragma omp parallel
  {
    auto ws = forward.workspace();
    RayLinearization lin;
    lin.bins = n_bins;
    lin.materials = n_mat;
    lin.theta.resize(n_bins * n_mat);
    lin.s.resize(n_bins);
    lin.q.resize(n_bins);
    std::vector<double> col(n_mat), qb(n_bins);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(rays); ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      for (std::size_t n = 0; n < n_mat; ++n) col[n] = p.at(n, r);
      for (std::size_t m = 0; m < n_bins; ++m) qb[m] = q_bar.at(m, r);
      forward.evaluate(col, lin.s, lin.theta, ws);
      for (std::size_t m = 0; m < n_bins; ++m) lin.q[m] = std::log(lin.s[m]);
      const std::vector<double> next = update_ray(col, lin, qb, beta1, lambda);
      for (std::size_t n = 0; n < n_mat; ++n) out.at(n, r) = next[n];
      if (objective) ray_obj[r] = ray_objective(next, col, lin, qb, col, lambda);
    }
  }
  if (objective) {
    double total = 0.0;
    for (double v : ray_obj) total += v;
    *objective = total;
  }
  return out;
}

std::vector<double> brute_force_minimize_Y(const RayLinearization& lin, std::span<const double> q_bar,
                                           std::span<const double> p_prev, std::span<const double> f_proj,
                                           double lambda, const SearchBox& box) {
  const std::size_t n_mat = lin.materials;
  if (n_mat == 0 || n_mat > 2) throw ShapeError("brute force search supports one or two materials");
  if (box.lower.size() != n_mat || box.upper.size() != n_mat) throw ShapeError("search box has wrong dimension");
  if (box.steps < 2) throw ConfigError("search box needs at least two steps per axis");

  auto value = [&](const std::vector<double>& p) { return ray_objective(p, p_prev, lin, q_bar, f_proj, lambda); };
  std::vector<double> h(n_mat);
  for (std::size_t n = 0; n < n_mat; ++n) h[n] = (box.upper[n] - box.lower[n]) / static_cast<double>(box.steps - 1);

  std::vector<double> best(n_mat), trial(n_mat);
  double best_value = std::numeric_limits<double>::infinity();
  const std::size_t outer = n_mat == 2 ? box.steps : 1;
  for (std::size_t i = 0; i < box.steps; ++i) {
    for (std::size_t j = 0; j < outer; ++j) {
      trial[0] = box.lower[0] + h[0] * static_cast<double>(i);
      if (n_mat == 2) trial[1] = box.lower[1] + h[1] * static_cast<double>(j);
      const double v = value(trial);
      if (v < best_value) {
        best_value = v;
        best = trial;
      }
    }
  }

  // Coordinate descent with a pattern step that halves whenever no move helps.
  std::vector<double> step = h;
  for (std::size_t round = 0; round < box.refine_rounds; ++round) {
    bool moved = false;
    for (std::size_t n = 0; n < n_mat; ++n) {
      for (double dir : {-1.0, 1.0}) {
        trial = best;
        trial[n] += dir * step[n];
        const double v = value(trial);
        if (v < best_value) {
          best_value = v;
          best = trial;
          moved = true;
        }
      }
    }
    if (!moved) {
      for (double& s : step) s *= 0.5;
    }
  }
  return best;
}

}  // namespace smr
