#include "smr/solvers.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "smr/decomposition.hpp"

namespace smr {

Method parse_method(std::string_view name) {
  if (name == "msart") return Method::msart;
  if (name == "tvmr") return Method::tvmr;
  if (name == "nlmmr") return Method::nlmmr;
  if (name == "bmfmr") return Method::bmfmr;
  if (name == "fbp-direct") return Method::fbp_direct;
  throw ConfigError("unknown method '" + std::string(name) + "'; valid methods: msart, tvmr, nlmmr, bmfmr, fbp-direct");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::msart: return "msart";
    case Method::tvmr: return "tvmr";
    case Method::nlmmr: return "nlmmr";
    case Method::bmfmr: return "bmfmr";
    case Method::fbp_direct: return "fbp-direct";
  }
  return "unknown";
}

ImageStep parse_image_step(std::string_view name) {
  if (name == "sart") return ImageStep::sart;
  if (name == "gradient") return ImageStep::gradient;
  throw ConfigError("unknown image_step '" + std::string(name) + "'; valid: sart, gradient");
}

void SolverConfig::validate(std::size_t n_materials) const {
  if (!(beta1 > 0.0 && beta1 < 2.0)) throw ConfigError("beta1 must lie in (0, 2)");
  if (!(beta2 > 0.0 && beta2 < 2.0)) throw ConfigError("beta2 must lie in (0, 2)");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (max_iterations < 1) throw ConfigError("iterations must be at least 1");
  if (materials.size() != n_materials) {
    throw ConfigError("solver has parameters for " + std::to_string(materials.size()) + " materials, expected " +
                      std::to_string(n_materials));
  }
  for (const auto& m : materials) {
    if (!(m.gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (!(m.tau >= 0.0)) throw ConfigError("tau must be nonnegative");
    if (!(m.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
    if (!(m.xi >= 0.0)) throw ConfigError("xi must be nonnegative");
    if (!(m.nlm_h_scale >= 0.0)) throw ConfigError("nlm_h_scale must be nonnegative");
  }
  bm3d.validate();
  tv.validate();
  nlm.validate();
}

Image image_update(const Image& f, std::span<const double> af, std::span<const double> p_row, const SystemMatrix& a,
                   double beta2, ImageStep mode) {
  if (f.size() != a.pixels()) throw ShapeError("image update: image does not match the system matrix");
  if (af.size() != a.rays() || p_row.size() != a.rays()) throw ShapeError("image update: sinogram length mismatch");
  std::vector<double> residual(a.rays());
  const auto w = a.row_sums();
  for (std::size_t r = 0; r < residual.size(); ++r) {
    double v = af[r] - p_row[r];
    if (mode == ImageStep::sart) v = w[r] > 0.0 ? v / w[r] : 0.0;
    residual[r] = v;
  }
  const std::vector<double> back = a.back(residual);
  const auto col = a.column_sums();
  Image out(f.width, f.height);
  for (std::size_t j = 0; j < f.size(); ++j) {
    double step = back[j];
    if (mode == ImageStep::sart) step = col[j] > 0.0 ? step / col[j] : 0.0;
    out.data[j] = f.data[j] - beta2 * step;
  }
  return out;
}

MaterialMaps msart_image_step(const MaterialMaps& f, const DecomposedSinogram& p_new, const SystemMatrix& a,
                              double beta2, ImageStep mode) {
  if (p_new.materials != f.materials()) throw ShapeError("msart_image_step: material count mismatch");
  MaterialMaps out = f;
  for (std::size_t n = 0; n < f.materials(); ++n) {
    const std::vector<double> af = a.forward(f.planes[n].span());
    out.planes[n] = image_update(f.planes[n], af, p_new.row(n), a, beta2, mode);
  }
  clamp_nonnegative(out);
  return out;
}

Image bmfmr_image_step(const Image& f, std::span<const double> af, std::span<const double> p_row, const Image& g,
                       const Image& t, const SystemMatrix& a, double beta2, double gamma, ImageStep mode) {
  require_same_shape(f, g, "bmfmr_image_step");
  require_same_shape(f, t, "bmfmr_image_step");
  Image half = image_update(f, af, p_row, a, beta2, mode);
  for (std::size_t j = 0; j < f.size(); ++j) half.data[j] -= gamma * (f.data[j] - g.data[j] - t.data[j]);
  return half;
}

Image bmfmr_image_step_combined(const Image& f, std::span<const double> p_row, const Image& g, const Image& t,
                                const SystemMatrix& a, double beta2, double gamma, ImageStep mode) {
  require_same_shape(f, g, "bmfmr_image_step_combined");
  require_same_shape(f, t, "bmfmr_image_step_combined");
  const std::vector<double> af = a.forward(f.span());
  std::vector<double> residual(a.rays());
  const auto w = a.row_sums();
  for (std::size_t r = 0; r < residual.size(); ++r) {
    residual[r] = af[r] - p_row[r];
    if (mode == ImageStep::sart) residual[r] = w[r] > 0.0 ? residual[r] / w[r] : 0.0;
  }
  const std::vector<double> back = a.back(residual);
  const auto col = a.column_sums();
  Image out(f.width, f.height);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double b = mode == ImageStep::sart ? (col[j] > 0.0 ? back[j] / col[j] : 0.0) : back[j];
    out.data[j] = f.data[j] - beta2 * b - gamma * (f.data[j] - g.data[j] - t.data[j]);
  }
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

void check_problem(const Problem& problem, const SolverConfig& cfg) {
  if (!problem.q_bar || !problem.a || !problem.forward) throw ConfigError("solver problem is missing inputs");
  const std::size_t n = problem.names.size();
  if (n != problem.forward->materials()) throw ShapeError("solver: material names do not match the basis");
  if (problem.q_bar->bins != problem.forward->bins()) throw ShapeError("solver: sinogram bins do not match the spectrum");
  if (problem.q_bar->rays() != problem.a->rays()) throw ShapeError("solver: sinogram rays do not match the system matrix");
  if (problem.width * problem.height != problem.a->pixels()) throw ShapeError("solver: image size does not match the system matrix");
  if (problem.truth && (problem.truth->materials() != n || problem.truth->width() != problem.width ||
                        problem.truth->height() != problem.height)) {
    throw ShapeError("solver: truth maps have the wrong shape");
  }
  cfg.validate(n);
}

// Per-material regularisation hook: receives the current map, the plain
// image-update result, and returns the new (unclamped) map plus its objective extra.
struct Regulariser {
  virtual ~Regulariser() = default;
  virtual Image apply(std::size_t n, const Image& f_old, Image f_half) = 0;
  virtual double objective_extra(std::size_t, const Image&) { return 0.0; }
};

struct NoRegulariser final : Regulariser {
  Image apply(std::size_t, const Image&, Image f_half) override { return f_half; }
};

struct TvRegulariser final : Regulariser {
  const SolverConfig& cfg;
  explicit TvRegulariser(const SolverConfig& c) : cfg(c) {}
  Image apply(std::size_t n, const Image& f_old, Image f_half) override {
    TvParams p = cfg.tv;
    p.xi = cfg.materials[n].xi;
    if (p.xi == 0.0) return f_half;
    // Step length tracks the size of the data-fidelity update.
    p.step_size = std::sqrt(squared_distance(f_half.span(), f_old.span()));
    return tv_descent_step(f_half, p);
  }
  double objective_extra(std::size_t n, const Image& f) override {
    const double xi = cfg.materials[n].xi;
    return xi == 0.0 ? 0.0 : xi * tv_value(f, cfg.tv.smoothing_eps);
  }
};

struct NlmRegulariser final : Regulariser {
  const SolverConfig& cfg;
  explicit NlmRegulariser(const SolverConfig& c) : cfg(c) {}
  Image apply(std::size_t n, const Image&, Image f_half) override {
    NlmParams p = cfg.nlm;
    p.filtering_h = cfg.materials[n].nlm_h_scale * estimate_sigma(f_half);
    return nlm_filter(f_half, p);
  }
};

void record(Diagnostics& d, const Problem& problem, std::size_t iteration, const MaterialMaps& f,
            const std::vector<double>& objective) {
  for (std::size_t n = 0; n < f.materials(); ++n) {
    IterationMetrics row;
    row.iteration = iteration;
    row.material = problem.names[n];
    if (problem.truth) {
      row.rmse = rmse(f.planes[n], problem.truth->planes[n]);
      row.psnr = psnr(f.planes[n], problem.truth->planes[n]);
      row.ssim = ssim(f.planes[n], problem.truth->planes[n]);
    }
    row.objective = objective[n];
    d.rows.push_back(row);
  }
}

SolverResult run_plain(const Problem& problem, const SolverConfig& cfg, Regulariser& reg) {
  check_problem(problem, cfg);
  const SystemMatrix& a = *problem.a;
  const std::size_t n_mat = problem.names.size();
  SolverResult result;
  MaterialMaps f(problem.names, problem.width, problem.height);
  DecomposedSinogram af(n_mat, a.rays());
  std::vector<double> objective(n_mat);
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    double y = 0.0;
    const DecomposedSinogram p = decompose_step(af, *problem.q_bar, *problem.forward, cfg.beta1, cfg.lambda, &y);
    result.diagnostics.decomposition_objective.push_back(y);
    MaterialMaps next = f;
    for (std::size_t n = 0; n < n_mat; ++n) {
      Image half = image_update(f.planes[n], af.row(n), p.row(n), a, cfg.beta2, cfg.image_step);
      next.planes[n] = reg.apply(n, f.planes[n], std::move(half));
    }
    clamp_nonnegative(next);
    f = std::move(next);
    for (std::size_t n = 0; n < n_mat; ++n) {
      a.forward(f.planes[n].span(), af.row(n));
      objective[n] = squared_distance(af.row(n), p.row(n)) + reg.objective_extra(n, f.planes[n]);
    }
    record(result.diagnostics, problem, k, f, objective);
    if (problem.on_iteration) problem.on_iteration(k, f);
  }
  result.maps = std::move(f);
  return result;
}

}  // namespace

SolverResult run_msart(const Problem& problem, const SolverConfig& cfg) {
  NoRegulariser reg;
  return run_plain(problem, cfg, reg);
}

SolverResult run_tvmr(const Problem& problem, const SolverConfig& cfg) {
  TvRegulariser reg(cfg);
  return run_plain(problem, cfg, reg);
}

SolverResult run_nlmmr(const Problem& problem, const SolverConfig& cfg) {
  NlmRegulariser reg(cfg);
  return run_plain(problem, cfg, reg);
}

SolverResult run_bmfmr(const Problem& problem, const SolverConfig& cfg) {
  check_problem(problem, cfg);
  const SystemMatrix& a = *problem.a;
  const std::size_t n_mat = problem.names.size();
  SolverResult result;
  SolverState s;
  s.f = MaterialMaps(problem.names, problem.width, problem.height);
  s.g = s.f;
  s.t = s.f;
  DecomposedSinogram af(n_mat, a.rays());
  std::vector<std::size_t> l0(n_mat, 0);
  std::vector<double> objective(n_mat);
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    double y = 0.0;
    s.p = decompose_step(af, *problem.q_bar, *problem.forward, cfg.beta1, cfg.lambda, &y);
    result.diagnostics.decomposition_objective.push_back(y);
    MaterialMaps next = s.f;
    for (std::size_t n = 0; n < n_mat; ++n) {
      const MaterialParams& mp = cfg.materials[n];
      const Image& f_old = s.f.planes[n];
      Image& g = s.g.planes[n];
      Image& t = s.t.planes[n];
      result.diagnostics.objective_before.push_back(
          bmfmr_objective(af.row(n), f_old, g, t, s.p.row(n), mp.gamma, mp.tau, l0[n]));

      Image f_new = bmfmr_image_step(f_old, af.row(n), s.p.row(n), g, t, a, cfg.beta2, mp.gamma, cfg.image_step);

      Image u(f_new.width, f_new.height);
      for (std::size_t j = 0; j < u.size(); ++j) u.data[j] = f_new.data[j] - t.data[j];
      Bm3dParams bp = cfg.bm3d;
      bp.sigma = mp.sigma > 0.0 ? mp.sigma : estimate_sigma(u);
      ShrinkResult shrunk = shrink(u, mp.tau, bp);
      g = std::move(shrunk.image);
      l0[n] = shrunk.retained;
      for (std::size_t j = 0; j < t.size(); ++j) t.data[j] -= f_new.data[j] - g.data[j];
      next.planes[n] = std::move(f_new);
    }
    clamp_nonnegative(next);
    s.f = std::move(next);
    s.iteration = k;
    for (std::size_t n = 0; n < n_mat; ++n) {
      a.forward(s.f.planes[n].span(), af.row(n));
      const MaterialParams& mp = cfg.materials[n];
      objective[n] = bmfmr_objective(af.row(n), s.f.planes[n], s.g.planes[n], s.t.planes[n], s.p.row(n), mp.gamma,
                                     mp.tau, l0[n]);
    }
    record(result.diagnostics, problem, k, s.f, objective);
    if (problem.on_iteration) problem.on_iteration(k, s.f);
  }
  result.maps = std::move(s.f);
  return result;
}

SolverResult run_solver(const Problem& problem, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::msart: return run_msart(problem, cfg);
    case Method::tvmr: return run_tvmr(problem, cfg);
    case Method::nlmmr: return run_nlmmr(problem, cfg);
    case Method::bmfmr: return run_bmfmr(problem, cfg);
    case Method::fbp_direct: break;
  }
  throw ConfigError("fbp-direct is not an iterative method");
}

MaterialMaps run_fbp_direct(const MeasuredProjections& q_bar, const ScanGeometry& geometry, const SpectralModel& model,
                            const BasisAttenuation& basis) {
  const std::size_t m_bins = q_bar.bins;
  const std::size_t n_mat = basis.materials();
  if (m_bins != model.bins()) throw ShapeError("fbp-direct: sinogram bins do not match the spectrum");
  if (q_bar.views != geometry.n_views || q_bar.cells != geometry.n_detector_cells) {
    throw ShapeError("fbp-direct: sinogram does not match the geometry");
  }
  if (m_bins < n_mat) throw ConfigError("fbp-direct needs at least as many bins as materials");

  // Effective attenuation of each material in each bin: Theta at zero path length.
  Eigen::MatrixXd phi(m_bins, n_mat);
  const auto& de = model.grid().delta_kev;
  for (std::size_t m = 0; m < m_bins; ++m) {
    const auto s = model.s(m);
    for (std::size_t n = 0; n < n_mat; ++n) {
      double v = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) v += s[i] * de[i] * basis.phi[n][i];
      phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = v;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  if (!(sv(sv.size() - 1) > 0.0) || !(cond < 1e12)) {
    throw NumericError("fbp-direct: bin-effective attenuation matrix is rank deficient (condition number " +
                       std::to_string(cond) + ")");
  }
  const Eigen::MatrixXd pinv = svd.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_bins),
                                                                    static_cast<Eigen::Index>(m_bins)));

  std::vector<Image> mu;
  std::vector<double> sino(q_bar.rays());
  for (std::size_t m = 0; m < m_bins; ++m) {
    const auto row = q_bar.bin(m);
    for (std::size_t r = 0; r < sino.size(); ++r) sino[r] = -row[r];
    mu.push_back(fbp_reconstruct(geometry, sino));
  }
  std::vector<std::string> names = basis.names;
  MaterialMaps out(names, geometry.image_width, geometry.image_height);
  const std::size_t pixels = geometry.pixels();
  for (std::size_t j = 0; j < pixels; ++j) {
    for (std::size_t n = 0; n < n_mat; ++n) {
      double v = 0.0;
      for (std::size_t m = 0; m < m_bins; ++m) v += pinv(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) * mu[m].data[j];
      out.planes[n].data[j] = v;
    }
  }
  clamp_nonnegative(out);
  return out;
}

}  // namespace smr
