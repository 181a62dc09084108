#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smr/geometry.hpp"
#include "smr/solvers.hpp"

namespace smr {

struct DisplayWindow {
  double low = 0.0;
  double high = 1.0;
};

/// Section -> key -> value text, exactly as read.
using ConfigText = std::map<std::string, std::map<std::string, std::string>>;

/// Everything one experiment needs. Relative paths are resolved against the
/// directory holding the config file.
struct ExperimentConfig {
  std::filesystem::path source;
  ConfigText text;

  ScanGeometry geometry;

  std::filesystem::path spectrum_path;
  std::vector<double> bin_edges;
  std::vector<double> incident_flux;

  std::vector<std::string> material_names;
  std::vector<std::filesystem::path> attenuation_paths;

  std::string phantom_kind = "desk";  // desk, three_disk, file
  std::filesystem::path phantom_path;

  std::uint64_t seed = 0;
  bool seed_given = false;
  bool noise = true;

  std::filesystem::path output_dir = "out";
  std::map<std::string, DisplayWindow> display;

  /// Solver settings for `method`: [solver] with the method's own section layered on top.
  SolverConfig solver_for(Method method) const;
  Method default_method() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

/// Comma- or whitespace-separated numbers.
std::vector<double> parse_number_list(const std::string& text, const std::string& what);

}  // namespace smr
