#include "smr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "smr/decomposition.hpp"

namespace smr {

EmbeddedModel embedded_two_material_model() {
  const std::vector<double> e{10, 15, 20, 30, 40, 50, 60, 80, 100, 150};
  const Table water{e, {0.5329, 0.1673, 0.08096, 0.03756, 0.02683, 0.02269, 0.02059, 0.01837, 0.01707, 0.01505}};
  const Table bone{e, {5.474, 1.734, 0.7682, 0.2556, 0.1278, 0.08145, 0.06044, 0.04280, 0.03562, 0.02842}};
  std::vector<double> energies;
  for (int i = 0; i <= 68; ++i) energies.push_back(16.0 + 0.5 * i);
  EnergyGrid grid = EnergyGrid::from_energies(energies);
  const std::vector<double> weights = kramers_weights(grid.energies_kev, 51.0, 1.0);
  EmbeddedModel out;
  out.model = SpectralModel::from_weights(grid, weights, {16, 24, 30, 38, 50});
  out.basis = basis_from_tables({{"water", water}, {"bone", bone}}, out.model.grid());
  return out;
}

std::string OracleReport::summary() const {
  std::ostringstream s;
  s << instances - failures << "/" << instances << " instances agree; max deviation " << max_deviation
    << "; min eigenvalue margin " << min_eigen_margin;
  return s.str();
}

OracleReport run_theorem1_oracle(const SpectralModel& model, const BasisAttenuation& basis, std::uint64_t seed,
                                 std::size_t instances, double tolerance) {
  if (basis.materials() != 2) throw ShapeError("theorem oracle needs exactly two materials");
  const SpectralForward forward(model, basis);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lambdas[] = {0.002, 0.05, 0.5};
  OracleReport report;
  report.instances = instances;
  report.min_eigen_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < instances; ++k) {
    const std::vector<double> truth{30.0 * unit(rng), 8.0 * unit(rng)};
    std::vector<double> s(model.bins());
    auto ws = forward.workspace();
    forward.evaluate(truth, s, {}, ws);
    std::vector<double> q_bar(model.bins());
    for (std::size_t m = 0; m < s.size(); ++m) q_bar[m] = std::log(s[m]) + 0.01 * (unit(rng) - 0.5);
    std::vector<double> p_prev{truth[0] * (0.6 + 0.8 * unit(rng)), truth[1] * (0.6 + 0.8 * unit(rng))};
    std::vector<double> f_proj{p_prev[0] + 4.0 * (unit(rng) - 0.5), p_prev[1] + 2.0 * (unit(rng) - 0.5)};
    const double lambda = lambdas[k % 3];
    const double beta1 = 0.2 + 1.6 * unit(rng);
    const RayLinearization lin = linearize(forward, p_prev);

    std::vector<double> p = p_prev;
    for (int it = 0; it < 20000; ++it) {
      const std::vector<double> next = descend_ray(p, p_prev, lin, q_bar, f_proj, beta1, lambda);
      const double change = std::abs(next[0] - p[0]) + std::abs(next[1] - p[1]);
      p = next;
      if (change < 1e-15) break;
    }
    SearchBox box;
    box.lower = {p_prev[0] - 25.0, p_prev[1] - 10.0};
    box.upper = {p_prev[0] + 25.0, p_prev[1] + 10.0};
    box.steps = 401;
    box.refine_rounds = 200;
    const std::vector<double> brute = brute_force_minimize_Y(lin, q_bar, p_prev, f_proj, lambda, box);
    const double dev = std::max(std::abs(p[0] - brute[0]), std::abs(p[1] - brute[1]));
    const double margin = min_eigenvalue(lin, lambda) - lambda;
    report.max_deviation = std::max(report.max_deviation, dev);
    report.min_eigen_margin = std::min(report.min_eigen_margin, margin);
    if (!(dev <= tolerance) || margin < -1e-12 * lambda) ++report.failures;
  }
  return report;
}

}  // namespace smr
