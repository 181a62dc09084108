#include "smr/experiment.hpp"

#include <fstream>
#include <json.hpp>

#include "smr/io.hpp"
#include "smr/phantom.hpp"

namespace smr {

MaterialMaps build_phantom(const ExperimentConfig& config) {
  const std::size_t w = config.geometry.image_width;
  const std::size_t h = config.geometry.image_height;
  if (config.phantom_kind == "desk") return make_desk_phantom(w, h);
  if (config.phantom_kind == "three_disk") return make_three_disk_phantom(w, h);
  return load_maps(config.phantom_path, config.material_names, w, h);
}

Experiment prepare_experiment(ExperimentConfig config) {
  Experiment e;
  e.model = load_spectrum(config.spectrum_path, config.bin_edges, config.incident_flux);
  std::vector<std::pair<std::string, std::filesystem::path>> tables;
  for (std::size_t n = 0; n < config.material_names.size(); ++n) {
    tables.emplace_back(config.material_names[n], config.attenuation_paths[n]);
  }
  e.basis = load_basis_attenuation(tables, e.model.grid());
  e.truth = build_phantom(config);
  e.a = build_system_matrix(config.geometry);
  e.config = std::move(config);
  return e;
}

MeasuredProjections simulate(const Experiment& experiment, std::uint64_t seed, bool noise) {
  SimulationOptions opt;
  opt.seed = seed;
  opt.noise = noise;
  return simulate_measurements(experiment.truth, experiment.a, experiment.config.geometry, experiment.model,
                               experiment.basis, opt);
}

Reconstruction reconstruct(const Experiment& experiment, const MeasuredProjections& q_bar, Method method,
                           std::optional<std::size_t> iterations, bool with_truth) {
  const auto& g = experiment.config.geometry;
  if (q_bar.bins != experiment.model.bins() || q_bar.views != g.n_views || q_bar.cells != g.n_detector_cells) {
    throw ShapeError("sinogram is " + std::to_string(q_bar.bins) + "x" + std::to_string(q_bar.views) + "x" +
                     std::to_string(q_bar.cells) + ", configuration expects " + std::to_string(experiment.model.bins()) +
                     "x" + std::to_string(g.n_views) + "x" + std::to_string(g.n_detector_cells));
  }
  Reconstruction rec;
  rec.method = method;
  if (method == Method::fbp_direct) {
    rec.maps = run_fbp_direct(q_bar, g, experiment.model, experiment.basis);
    return rec;
  }
  SolverConfig cfg = experiment.config.solver_for(method);
  if (iterations) {
    if (*iterations < 1) throw ConfigError("iterations must be at least 1");
    cfg.max_iterations = *iterations;
  }
  const SpectralForward forward(experiment.model, experiment.basis);
  Problem problem;
  problem.q_bar = &q_bar;
  problem.a = &experiment.a;
  problem.forward = &forward;
  problem.names = experiment.config.material_names;
  problem.width = g.image_width;
  problem.height = g.image_height;
  if (with_truth) problem.truth = &experiment.truth;
  SolverResult result = run_solver(problem, cfg);
  rec.maps = std::move(result.maps);
  rec.diagnostics = std::move(result.diagnostics);
  return rec;
}

namespace {

nlohmann::json manifest_base(const Experiment& e, std::uint64_t seed, bool noise) {
  nlohmann::json j;
  j["tool"] = "smr";
  j["version"] = kVersion;
  j["seed"] = seed;
  j["noise"] = noise;
  j["config_file"] = e.config.source.string();
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [sec, keys] : e.config.text) {
    for (const auto& [k, v] : keys) cfg[sec][k] = v;
  }
  j["config"] = cfg;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

void write_pgms(const std::filesystem::path& dir, const std::string& prefix, const Experiment& e,
                const MaterialMaps& maps) {
  for (std::size_t n = 0; n < maps.materials(); ++n) {
    const auto it = e.config.display.find(maps.names[n]);
    const DisplayWindow w = it == e.config.display.end() ? DisplayWindow{} : it->second;
    write_pgm(dir / (prefix + maps.names[n] + ".pgm"), maps.planes[n], w.low, w.high);
  }
}

}  // namespace

void write_simulation(const std::filesystem::path& dir, const Experiment& experiment, const MeasuredProjections& q,
                      std::uint64_t seed, bool noise) {
  std::filesystem::create_directories(dir);
  write_maps(dir / "truth.smr", experiment.truth);
  write_sinogram(dir / "sinogram.smr", q);
  write_pgms(dir, "truth_", experiment, experiment.truth);
  nlohmann::json j = manifest_base(experiment, seed, noise);
  j["command"] = "simulate";
  j["materials"] = experiment.config.material_names;
  j["outputs"] = {"truth.smr", "sinogram.smr"};
  write_json(dir / "manifest.json", j);
}

void write_reconstruction(const std::filesystem::path& dir, const Experiment& experiment, const Reconstruction& rec,
                          std::uint64_t seed, bool noise, const std::string& sinogram_source) {
  std::filesystem::create_directories(dir);
  write_maps(dir / "maps.smr", rec.maps);
  write_pgms(dir, "", experiment, rec.maps);
  nlohmann::json j = manifest_base(experiment, seed, noise);
  j["command"] = "reconstruct";
  j["method"] = method_name(rec.method);
  j["materials"] = experiment.config.material_names;
  j["sinogram"] = sinogram_source;
  nlohmann::json outputs = {"maps.smr"};
  if (!rec.diagnostics.rows.empty()) {
    write_convergence(dir / "convergence.csv", rec.diagnostics.rows);
    std::ofstream out(dir / "decomposition.csv");
    if (!out) throw IoError("cannot write decomposition.csv");
    out << "iteration,objective\n";
    for (std::size_t k = 0; k < rec.diagnostics.decomposition_objective.size(); ++k) {
      out << (k + 1) << ',' << format_double(rec.diagnostics.decomposition_objective[k]) << '\n';
    }
    outputs.push_back("convergence.csv");
    outputs.push_back("decomposition.csv");
  }
  j["outputs"] = outputs;
  write_json(dir / "manifest.json", j);
}

void write_metrics_report(const std::filesystem::path& path, const MaterialMaps& maps, const MaterialMaps& truth) {
  if (maps.materials() != truth.materials()) throw ShapeError("metrics: material counts differ");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "material,rmse,psnr,ssim\n";
  for (std::size_t n = 0; n < maps.materials(); ++n) {
    out << truth.names[n] << ',' << format_double(rmse(maps.planes[n], truth.planes[n])) << ','
        << format_double(psnr(maps.planes[n], truth.planes[n])) << ','
        << format_double(ssim(maps.planes[n], truth.planes[n])) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace smr
