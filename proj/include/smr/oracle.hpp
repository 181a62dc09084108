#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "smr/spectral.hpp"

namespace smr {

/// A small two-material (water, bone), four-bin spectral model built from
/// tables compiled into the library; used by self-checks that must not depend on data files.
struct EmbeddedModel {
  SpectralModel model;
  BasisAttenuation basis;
};
EmbeddedModel embedded_two_material_model();

struct OracleReport {
  std::size_t instances = 0;
  std::size_t failures = 0;
  double max_deviation = 0.0;       // |fixed point - brute force|, max over instances and materials
  double min_eigen_margin = 0.0;    // min over instances of (smallest eigenvalue - lambda)
  bool passed() const { return failures == 0; }
  std::string summary() const;
};

/// Random single-ray instances: the fixed point of repeated descend_ray steps is
/// compared with brute_force_minimize_Y, and the normal matrix's smallest
/// eigenvalue with lambda.
OracleReport run_theorem1_oracle(const SpectralModel& model, const BasisAttenuation& basis, std::uint64_t seed,
                                 std::size_t instances, double tolerance = 1e-3);

}  // namespace smr
