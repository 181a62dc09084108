#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "smr/config.hpp"
#include "smr/geometry.hpp"
#include "smr/solvers.hpp"
#include "smr/spectral.hpp"

namespace smr {

inline constexpr const char* kVersion = "0.1.0";

/// Loaded inputs of one experiment: geometry, system matrix, spectrum, basis, phantom.
struct Experiment {
  ExperimentConfig config;
  SystemMatrix a;
  SpectralModel model;
  BasisAttenuation basis;
  MaterialMaps truth;
};

Experiment prepare_experiment(ExperimentConfig config);

MaterialMaps build_phantom(const ExperimentConfig& config);

MeasuredProjections simulate(const Experiment& experiment, std::uint64_t seed, bool noise);

struct Reconstruction {
  Method method = Method::msart;
  MaterialMaps maps;
  Diagnostics diagnostics;
};

/// Runs `method`; iterations overrides the configured count when set. The truth
/// maps feed the RMSE/PSNR/SSIM columns when `with_truth` is set.
Reconstruction reconstruct(const Experiment& experiment, const MeasuredProjections& q_bar, Method method,
                           std::optional<std::size_t> iterations = std::nullopt, bool with_truth = true);

/// truth.smr, sinogram.smr, truth_<material>.pgm and manifest.json.
void write_simulation(const std::filesystem::path& dir, const Experiment& experiment, const MeasuredProjections& q,
                      std::uint64_t seed, bool noise);

/// maps.smr, convergence.csv (when iterative), decomposition.csv, <material>.pgm and manifest.json.
void write_reconstruction(const std::filesystem::path& dir, const Experiment& experiment, const Reconstruction& rec,
                          std::uint64_t seed, bool noise, const std::string& sinogram_source);

/// Final metrics per material: material,rmse,psnr,ssim.
void write_metrics_report(const std::filesystem::path& path, const MaterialMaps& maps, const MaterialMaps& truth);

}  // namespace smr
