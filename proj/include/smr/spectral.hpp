#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smr/geometry.hpp"
#include "smr/image.hpp"
#include "smr/sinogram.hpp"

namespace smr {

/// Energy samples E_i (keV) with integration widths dE_i.
struct EnergyGrid {
  std::vector<double> energies_kev;
  std::vector<double> delta_kev;

  std::size_t size() const { return energies_kev.size(); }

  /// Widths from the trapezoid rule, so sum(dE) == E_max - E_min.
  static EnergyGrid from_energies(std::vector<double> energies_kev);

  void validate() const;
};

/// A two-column (energy keV, value) table as read from disk.
struct Table {
  std::vector<double> energies;
  std::vector<double> values;
};

/// Reads whitespace-separated two-column text; '#' starts a comment.
Table read_table(const std::filesystem::path& path);

/// Binned, per-bin normalised source spectrum s_m(E_i), shared by every ray.
class SpectralModel {
 public:
  SpectralModel() = default;

  /// Restricts `weights` to each bin and renormalises so sum_i s_m(E_i) dE_i == 1.
  /// Bins are [lo, hi) except the last, which is closed.
  static SpectralModel from_weights(EnergyGrid grid, std::span<const double> weights,
                                    std::vector<double> bin_edges, std::vector<double> incident_flux = {});

  const EnergyGrid& grid() const { return grid_; }
  std::size_t bins() const { return s_.size(); }
  const std::vector<double>& bin_edges() const { return edges_; }
  std::span<const double> s(std::size_t bin) const { return s_[bin]; }

  /// Sample range [first, last) with nonzero support in the bin.
  std::pair<std::size_t, std::size_t> support(std::size_t bin) const { return support_[bin]; }

  /// Photons per ray per bin (I0_m); empty when the model is used noiselessly.
  const std::vector<double>& incident_flux() const { return flux_; }
  void set_incident_flux(std::vector<double> flux);

 private:
  EnergyGrid grid_;
  std::vector<double> edges_;
  std::vector<std::vector<double>> s_;
  std::vector<std::pair<std::size_t, std::size_t>> support_;
  std::vector<double> flux_;
};

SpectralModel load_spectrum(const std::filesystem::path& path, std::vector<double> bin_edges,
                            std::vector<double> incident_flux = {});

/// phi_n(E_i): attenuation per unit material fraction (mm^-1) on a model's grid.
struct BasisAttenuation {
  std::vector<std::string> names;
  std::vector<std::vector<double>> phi;

  std::size_t materials() const { return phi.size(); }
  void validate(const EnergyGrid& grid) const;
};

/// Log-log linear interpolation; exact at table nodes. At a duplicated energy
/// (absorption edge) the value above the edge is returned.
double interpolate_loglog(const Table& table, double energy_kev);

BasisAttenuation load_basis_attenuation(
    const std::vector<std::pair<std::string, std::filesystem::path>>& tables, const EnergyGrid& grid);

BasisAttenuation basis_from_tables(const std::vector<std::pair<std::string, Table>>& tables,
                                   const EnergyGrid& grid);

/// Precomputed per-bin products s_m dE and s_m dE phi_n over each bin's support.
/// evaluate() is the hot path of simulation and decomposition.
class SpectralForward {
 public:
  SpectralForward(const SpectralModel& model, const BasisAttenuation& basis);

  std::size_t bins() const { return bins_; }
  std::size_t materials() const { return materials_; }

  struct Workspace {
    std::vector<double> exponent;
    std::vector<double> transmission;
  };
  Workspace workspace() const;

  /// S_m = sum_i s_m dE e^{-sum_n phi_n p_n}; theta (M x N, row-major, optional)
  /// Theta_mn = sum_i phi_n s_m dE e^{-sum_n phi_n p_n}.
  void evaluate(std::span<const double> p, std::span<double> s, std::span<double> theta,
                Workspace& ws) const;

 private:
  std::size_t bins_ = 0;
  std::size_t materials_ = 0;
  std::size_t first_ = 0;  // union of bin supports: [first_, first_ + span_)
  std::size_t span_ = 0;
  std::vector<double> phi_;                          // materials x span
  std::vector<std::size_t> bin_offset_, bin_length_;  // relative to first_
  std::vector<std::vector<double>> weight_;          // per bin: s dE
  std::vector<std::vector<double>> weight_phi_;      // per bin: materials x length
  std::vector<double> ones_;
};

/// Normalised transmission S for one ray and bin.
double transmit(const SpectralModel& model, const BasisAttenuation& basis, std::span<const double> p_col,
                std::size_t bin);

/// q_{m,ray} = ln S_{m,ray}.
MeasuredProjections log_forward(const SpectralModel& model, const BasisAttenuation& basis,
                                const DecomposedSinogram& p, std::size_t views, std::size_t cells);

struct SimulationOptions {
  std::uint64_t seed = 0;
  bool noise = true;
};

/// Poisson counts with mean I0_m S_m per ray and bin; qbar = ln(max(counts, 1) / I0_m).
/// Without noise qbar is log_forward of the true line integrals. Each ray draws from
/// its own seeded stream, so results do not depend on thread count.
MeasuredProjections simulate_measurements(const MaterialMaps& maps, const SystemMatrix& a,
                                          const ScanGeometry& geometry, const SpectralModel& model,
                                          const BasisAttenuation& basis, const SimulationOptions& options);

/// Ray-indexed seed derivation (SplitMix64 finaliser).
std::uint64_t ray_seed(std::uint64_t seed, std::uint64_t ray);

/// Filtered Kramers-law weights (E0 - E) / E * exp(-mu_filter(E) t) sampled at `energies`.
std::vector<double> kramers_weights(std::span<const double> energies_kev, double kvp,
                                    double filter_mm_al);

}  // namespace smr
