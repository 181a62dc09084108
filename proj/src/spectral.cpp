#include "smr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "smr/simd/kernels.hpp"

namespace smr {

EnergyGrid EnergyGrid::from_energies(std::vector<double> energies_kev) {
  EnergyGrid grid;
  const std::size_t n = energies_kev.size();
  grid.delta_kev.assign(n, 0.0);
  if (n == 1) {
    grid.delta_kev[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = energies_kev[i == 0 ? 0 : i - 1];
      const double hi = energies_kev[i + 1 == n ? n - 1 : i + 1];
      grid.delta_kev[i] = 0.5 * (hi - lo);
    }
  }
  grid.energies_kev = std::move(energies_kev);
  grid.validate();
  return grid;
}

void EnergyGrid::validate() const {
  if (energies_kev.empty()) throw ConfigError("energy grid is empty");
  if (delta_kev.size() != energies_kev.size()) throw ConfigError("energy grid widths do not match samples");
  for (std::size_t i = 0; i < energies_kev.size(); ++i) {
    if (i > 0 && !(energies_kev[i] > energies_kev[i - 1])) {
      throw ConfigError("energy grid is not strictly ascending at sample " + std::to_string(i));
    }
    if (!(delta_kev[i] > 0.0)) throw ConfigError("energy grid width must be positive at sample " + std::to_string(i));
  }
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table '" + path.string() + "'");
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double e = 0.0;
    double v = 0.0;
    if (!(fields >> e)) continue;
    if (!(fields >> v)) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
    }
    t.energies.push_back(e);
    t.values.push_back(v);
  }
  if (t.energies.empty()) throw IoError("table '" + path.string() + "' has no rows");
  return t;
}

SpectralModel SpectralModel::from_weights(EnergyGrid grid, std::span<const double> weights,
                                          std::vector<double> bin_edges, std::vector<double> incident_flux) {
  grid.validate();
  if (weights.size() != grid.size()) throw ShapeError("spectrum weights do not match the energy grid");
  if (bin_edges.size() < 2) throw ConfigError("at least two bin edges are required");
  const double tol = 1e-9;
  for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
    if (!(bin_edges[b + 1] > bin_edges[b])) throw ConfigError("bin edges must be strictly ascending");
  }
  if (bin_edges.front() < grid.energies_kev.front() - tol || bin_edges.back() > grid.energies_kev.back() + tol) {
    throw ConfigError("bin edges must lie within the spectrum's energy range");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("spectrum weights must be nonnegative");
  }

  SpectralModel model;
  const std::size_t bins = bin_edges.size() - 1;
  model.s_.assign(bins, std::vector<double>(grid.size(), 0.0));
  model.support_.assign(bins, {0, 0});
  for (std::size_t m = 0; m < bins; ++m) {
    const double lo = bin_edges[m];
    const double hi = bin_edges[m + 1];
    const bool last = m + 1 == bins;
    std::size_t first = grid.size();
    std::size_t end = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = grid.energies_kev[i];
      const bool inside = e >= lo && (last ? e <= hi : e < hi);
      if (!inside) continue;
      first = std::min(first, i);
      end = std::max(end, i + 1);
      total += weights[i] * grid.delta_kev[i];
    }
    if (!(total > 0.0)) {
      throw ConfigError("energy bin [" + std::to_string(lo) + ", " + std::to_string(hi) + ") has zero total weight");
    }
    for (std::size_t i = first; i < end; ++i) model.s_[m][i] = weights[i] / total;
    model.support_[m] = {first, end};
  }
  model.grid_ = std::move(grid);
  model.edges_ = std::move(bin_edges);
  model.set_incident_flux(std::move(incident_flux));
  return model;
}

void SpectralModel::set_incident_flux(std::vector<double> flux) {
  if (flux.size() == 1 && bins() > 1) flux.assign(bins(), flux.front());
  if (!flux.empty() && flux.size() != bins()) throw ConfigError("incident flux needs one value per bin");
  for (double f : flux) {
    if (!(f > 0.0)) throw ConfigError("incident flux must be positive");
  }
  flux_ = std::move(flux);
}

SpectralModel load_spectrum(const std::filesystem::path& path, std::vector<double> bin_edges,
                            std::vector<double> incident_flux) {
  Table t = read_table(path);
  EnergyGrid grid;
  try {
    grid = EnergyGrid::from_energies(t.energies);
  } catch (const ConfigError& e) {
    throw IoError("spectrum '" + path.string() + "': " + e.what());
  }
  return SpectralModel::from_weights(std::move(grid), t.values, std::move(bin_edges), std::move(incident_flux));
}

void BasisAttenuation::validate(const EnergyGrid& grid) const {
  if (names.size() != phi.size()) throw ConfigError("basis names do not match basis curves");
  for (std::size_t n = 0; n < phi.size(); ++n) {
    if (phi[n].size() != grid.size()) throw ShapeError("basis curve '" + names[n] + "' does not match the energy grid");
    for (double v : phi[n]) {
      if (!(v > 0.0)) throw ConfigError("basis curve '" + names[n] + "' must be positive");
    }
  }
}

double interpolate_loglog(const Table& table, double energy_kev) {
  const auto& e = table.energies;
  if (energy_kev < e.front() || energy_kev > e.back()) {
    throw ConfigError("energy " + std::to_string(energy_kev) + " keV is outside the table range [" +
                      std::to_string(e.front()) + ", " + std::to_string(e.back()) + "]");
  }
  // First node strictly above the query; at a duplicated edge energy this lands past both copies.
  auto it = std::upper_bound(e.begin(), e.end(), energy_kev);
  std::size_t hi = static_cast<std::size_t>(it - e.begin());
  if (hi == e.size()) return table.values.back();
  const std::size_t lo = hi - 1;
  if (e[lo] == energy_kev) return table.values[lo];
  const double t = (std::log(energy_kev) - std::log(e[lo])) / (std::log(e[hi]) - std::log(e[lo]));
  return std::exp((1.0 - t) * std::log(table.values[lo]) + t * std::log(table.values[hi]));
}

BasisAttenuation basis_from_tables(const std::vector<std::pair<std::string, Table>>& tables,
                                   const EnergyGrid& grid) {
  BasisAttenuation basis;
  for (const auto& [name, table] : tables) {
    for (std::size_t i = 0; i < table.values.size(); ++i) {
      if (!(table.values[i] > 0.0)) throw ConfigError("attenuation table '" + name + "' has a non-positive value");
      if (i > 0 && table.energies[i] < table.energies[i - 1]) {
        throw ConfigError("attenuation table '" + name + "' energies are not ascending");
      }
    }
    std::vector<double> curve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      try {
        curve[i] = interpolate_loglog(table, grid.energies_kev[i]);
      } catch (const ConfigError& e) {
        throw ConfigError("attenuation table '" + name + "': " + e.what());
      }
    }
    basis.names.push_back(name);
    basis.phi.push_back(std::move(curve));
  }
  basis.validate(grid);
  return basis;
}

BasisAttenuation load_basis_attenuation(
    const std::vector<std::pair<std::string, std::filesystem::path>>& tables, const EnergyGrid& grid) {
  std::vector<std::pair<std::string, Table>> loaded;
  for (const auto& [name, path] : tables) loaded.emplace_back(name, read_table(path));
  return basis_from_tables(loaded, grid);
}

SpectralForward::SpectralForward(const SpectralModel& model, const BasisAttenuation& basis)
    : bins_(model.bins()), materials_(basis.materials()) {
  basis.validate(model.grid());
  std::size_t first = model.grid().size();
  std::size_t end = 0;
  for (std::size_t m = 0; m < bins_; ++m) {
    first = std::min(first, model.support(m).first);
    end = std::max(end, model.support(m).second);
  }
  first_ = first;
  span_ = end - first;
  ones_.assign(span_, 1.0);
  phi_.resize(materials_ * span_);
  for (std::size_t n = 0; n < materials_; ++n) {
    std::copy_n(basis.phi[n].begin() + static_cast<std::ptrdiff_t>(first_), span_, phi_.begin() + static_cast<std::ptrdiff_t>(n * span_));
  }
  const auto& de = model.grid().delta_kev;
  bin_offset_.resize(bins_);
  bin_length_.resize(bins_);
  weight_.resize(bins_);
  weight_phi_.resize(bins_);
  for (std::size_t m = 0; m < bins_; ++m) {
    const auto [b, e] = model.support(m);
    bin_offset_[m] = b - first_;
    bin_length_[m] = e - b;
    weight_[m].resize(e - b);
    weight_phi_[m].resize(materials_ * (e - b));
    for (std::size_t i = b; i < e; ++i) {
      const double w = model.s(m)[i] * de[i];
      weight_[m][i - b] = w;
      for (std::size_t n = 0; n < materials_; ++n) weight_phi_[m][n * (e - b) + (i - b)] = w * basis.phi[n][i];
    }
  }
}

SpectralForward::Workspace SpectralForward::workspace() const {
  return Workspace{std::vector<double>(span_), std::vector<double>(span_)};
}

void SpectralForward::evaluate(std::span<const double> p, std::span<double> s, std::span<double> theta,
                               Workspace& ws) const {
  const auto& k = simd::active();
  std::fill(ws.exponent.begin(), ws.exponent.end(), 0.0);
  for (std::size_t n = 0; n < materials_; ++n) k.axpy(p[n], phi_.data() + n * span_, ws.exponent.data(), span_);
  k.exp_neg(ws.exponent.data(), ws.transmission.data(), span_);
  for (std::size_t m = 0; m < bins_; ++m) {
    const double* x = ws.transmission.data() + bin_offset_[m];
    const std::size_t len = bin_length_[m];
    // Dividing by the same kernel's sum of weights makes S(0) exactly 1.
    const double norm = k.dot(weight_[m].data(), ones_.data(), len);
    s[m] = k.dot(weight_[m].data(), x, len) / norm;
    if (!theta.empty()) {
      for (std::size_t n = 0; n < materials_; ++n) {
        theta[m * materials_ + n] = k.dot(weight_phi_[m].data() + n * len, x, len) / norm;
      }
    }
  }
}

double transmit(const SpectralModel& model, const BasisAttenuation& basis, std::span<const double> p_col,
                std::size_t bin) {
  if (p_col.size() != basis.materials()) throw ShapeError("transmit: line-integral vector has wrong length");
  if (bin >= model.bins()) throw ShapeError("transmit: bin index out of range");
  SpectralForward fwd(model, basis);
  auto ws = fwd.workspace();
  std::vector<double> s(model.bins());
  fwd.evaluate(p_col, s, {}, ws);
  return s[bin];
}

MeasuredProjections log_forward(const SpectralModel& model, const BasisAttenuation& basis,
                                const DecomposedSinogram& p, std::size_t views, std::size_t cells) {
  if (p.materials != basis.materials()) throw ShapeError("log_forward: material count mismatch");
  if (p.rays != views * cells) throw ShapeError("log_forward: ray count mismatch");
  const SpectralForward fwd(model, basis);
  MeasuredProjections q(model.bins(), views, cells);
  const std::size_t rays = p.rays;
#pragma omp parallel
  {
    auto ws = fwd.workspace();
    std::vector<double> col(p.materials), s(model.bins());
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
      for (std::size_t n = 0; n < p.materials; ++n) col[n] = p.at(n, static_cast<std::size_t>(r));
      fwd.evaluate(col, s, {}, ws);
      for (std::size_t m = 0; m < model.bins(); ++m) q.at(m, static_cast<std::size_t>(r)) = std::log(s[m]);
    }
  }
  return q;
}

std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t ray) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(ray));
}

MeasuredProjections simulate_measurements(const MaterialMaps& maps, const SystemMatrix& a,
                                          const ScanGeometry& geometry, const SpectralModel& model,
                                          const BasisAttenuation& basis, const SimulationOptions& options) {
  if (maps.materials() != basis.materials()) throw ShapeError("simulate: phantom and basis material counts differ");
  if (maps.pixels() != a.pixels()) throw ShapeError("simulate: phantom size does not match the system matrix");
  const DecomposedSinogram p = project_materials(a, maps);
  MeasuredProjections q = log_forward(model, basis, p, geometry.n_views, geometry.n_detector_cells);
  if (!options.noise) return q;
  if (model.incident_flux().size() != model.bins()) throw ConfigError("noisy simulation needs incident flux per bin");
  const auto& flux = model.incident_flux();
  const std::size_t rays = p.rays;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rays); ++r) {
    std::mt19937_64 engine(ray_seed(options.seed, static_cast<std::uint64_t>(r)));
    for (std::size_t m = 0; m < model.bins(); ++m) {
      double& value = q.at(m, static_cast<std::size_t>(r));
      const double expected = flux[m] * std::exp(value);
      std::poisson_distribution<std::int64_t> draw(expected);
      const std::int64_t counts = expected > 0.0 ? draw(engine) : 0;
      value = std::log(static_cast<double>(std::max<std::int64_t>(counts, 1)) / flux[m]);
    }
  }
  return q;
}

std::vector<double> kramers_weights(std::span<const double> energies_kev, double kvp, double filter_mm_al) {
  // Aluminium mass attenuation (cm^2/g) at 10..150 keV; density 2.699 g/cm^3.
  static const Table aluminium{{10, 15, 20, 30, 40, 50, 60, 80, 100, 150},
                               {26.21, 7.955, 3.441, 1.128, 0.5685, 0.3681, 0.2778, 0.2018, 0.1704, 0.1378}};
  std::vector<double> w(energies_kev.size(), 0.0);
  for (std::size_t i = 0; i < energies_kev.size(); ++i) {
    const double e = energies_kev[i];
    if (e <= 0.0 || e >= kvp) continue;
    const double mu_mm = interpolate_loglog(aluminium, std::clamp(e, 10.0, 150.0)) * 2.699 / 10.0;
    w[i] = (kvp - e) / e * std::exp(-mu_mm * filter_mm_al);
  }
  return w;
}

}  // namespace smr
