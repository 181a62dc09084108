#include "smr/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace smr {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size()) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size()) {
    throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "on" || t == "true" || t == "1" || t == "yes") return true;
  if (t == "off" || t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(what + ": expected on/off, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

const std::map<std::string, std::string>& section(const ConfigText& text, const std::string& name) {
  static const std::map<std::string, std::string> empty;
  auto it = text.find(name);
  return it == text.end() ? empty : it->second;
}

const std::string& require(const std::map<std::string, std::string>& sec, const std::string& sec_name,
                           const std::string& key) {
  auto it = sec.find(key);
  if (it == sec.end()) throw ConfigError("missing key '" + key + "' in [" + sec_name + "]");
  return it->second;
}

void reject_unknown(const std::map<std::string, std::string>& sec, const std::string& sec_name,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : sec) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in [" + sec_name + "]");
  }
}

std::vector<double> per_material(const std::string& text, std::size_t n, const std::string& what) {
  std::vector<double> v = parse_number_list(text, what);
  if (v.size() == 1) v.assign(n, v.front());
  if (v.size() != n) throw ConfigError(what + ": expected 1 or " + std::to_string(n) + " values");
  return v;
}

const std::set<std::string> kSolverKeys{"method",          "beta1",           "beta2",
                                        "lambda",          "iterations",      "image_step",
                                        "gamma",           "tau",             "sigma",
                                        "xi",              "nlm_h_scale",     "bm3d_block_size",
                                        "bm3d_group_size", "bm3d_window",     "bm3d_step",
                                        "bm3d_match_scale", "tv_eps",         "tv_inner_steps",
                                        "nlm_patch_radius", "nlm_window_radius"};

void apply_solver_keys(SolverConfig& cfg, const std::map<std::string, std::string>& sec, const std::string& name,
                       std::size_t n) {
  reject_unknown(sec, name, kSolverKeys);
  auto what = [&](const std::string& key) { return "[" + name + "] " + key; };
  for (const auto& [key, value] : sec) {
    if (key == "method") {
      cfg.method = parse_method(trim(value));
    } else if (key == "beta1") {
      cfg.beta1 = parse_number(value, what(key));
    } else if (key == "beta2") {
      cfg.beta2 = parse_number(value, what(key));
    } else if (key == "lambda") {
      cfg.lambda = parse_number(value, what(key));
    } else if (key == "iterations") {
      cfg.max_iterations = parse_u64(value, what(key));
    } else if (key == "image_step") {
      cfg.image_step = parse_image_step(trim(value));
    } else if (key == "gamma" || key == "tau" || key == "sigma" || key == "xi" || key == "nlm_h_scale") {
      const auto v = per_material(value, n, what(key));
      for (std::size_t i = 0; i < n; ++i) {
        auto& m = cfg.materials[i];
        if (key == "gamma") m.gamma = v[i];
        if (key == "tau") m.tau = v[i];
        if (key == "sigma") m.sigma = v[i];
        if (key == "xi") m.xi = v[i];
        if (key == "nlm_h_scale") m.nlm_h_scale = v[i];
      }
    } else if (key == "bm3d_block_size") {
      cfg.bm3d.block_size = parse_u64(value, what(key));
    } else if (key == "bm3d_group_size") {
      cfg.bm3d.max_group_size = parse_u64(value, what(key));
    } else if (key == "bm3d_window") {
      cfg.bm3d.search_window = parse_u64(value, what(key));
    } else if (key == "bm3d_step") {
      cfg.bm3d.reference_step = parse_u64(value, what(key));
    } else if (key == "bm3d_match_scale") {
      cfg.bm3d.match_scale = parse_number(value, what(key));
    } else if (key == "tv_eps") {
      cfg.tv.smoothing_eps = parse_number(value, what(key));
    } else if (key == "tv_inner_steps") {
      cfg.tv.n_inner_steps = parse_u64(value, what(key));
    } else if (key == "nlm_patch_radius") {
      cfg.nlm.patch_radius = parse_u64(value, what(key));
    } else if (key == "nlm_window_radius") {
      cfg.nlm.window_radius = parse_u64(value, what(key));
    }
  }
}

ConfigText read_ini(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ConfigText text;
  for (const auto& [sec_name, sec] : tree) {
    if (sec.empty()) throw ConfigError("key '" + sec_name + "' appears outside any section");
    auto& out = text[sec_name];
    for (const auto& [key, value] : sec) out[key] = trim(value.data());
  }
  return text;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number(item, what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

Method ExperimentConfig::default_method() const {
  const auto& sec = section(text, "solver");
  auto it = sec.find("method");
  return it == sec.end() ? Method::msart : parse_method(it->second);
}

SolverConfig ExperimentConfig::solver_for(Method method) const {
  SolverConfig cfg;
  const std::size_t n = material_names.size();
  cfg.materials.assign(n, MaterialParams{});
  apply_solver_keys(cfg, section(text, "solver"), "solver", n);
  if (method != Method::fbp_direct) {
    const std::string name = method_name(method);
    apply_solver_keys(cfg, section(text, name), name, n);
  }
  cfg.method = method;
  cfg.validate(n);
  return cfg;
}

ExperimentConfig parse_config(const std::string& content, const std::filesystem::path& base_dir) {
  std::istringstream in(content);
  ExperimentConfig cfg;
  cfg.text = read_ini(in);
  const auto& t = cfg.text;
  static const std::set<std::string> known{"geometry", "spectrum", "materials", "phantom", "simulation", "solver",
                                           "msart",    "tvmr",     "nlmmr",     "bmfmr",   "display",    "output"};
  for (const auto& [name, sec] : t) {
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  const auto& geo = section(t, "geometry");
  reject_unknown(geo, "geometry",
                 {"source_to_detector_mm", "source_to_center_mm", "detector_cells", "cell_pitch_mm", "views",
                  "image_width", "image_height", "pixel_pitch_mm"});
  cfg.geometry = build_geometry(KeyValues(geo.begin(), geo.end()));

  const auto& spec = section(t, "spectrum");
  reject_unknown(spec, "spectrum", {"file", "bin_edges", "incident_flux"});
  cfg.spectrum_path = resolve(require(spec, "spectrum", "file"));
  cfg.bin_edges = parse_number_list(require(spec, "spectrum", "bin_edges"), "[spectrum] bin_edges");
  if (auto it = spec.find("incident_flux"); it != spec.end()) {
    cfg.incident_flux = parse_number_list(it->second, "[spectrum] incident_flux");
  }

  const auto& mat = section(t, "materials");
  for (const auto& name : split_list(require(mat, "materials", "names"))) {
    cfg.material_names.push_back(name);
    cfg.attenuation_paths.push_back(resolve(require(mat, "materials", name)));
  }
  {
    std::set<std::string> allowed(cfg.material_names.begin(), cfg.material_names.end());
    allowed.insert("names");
    reject_unknown(mat, "materials", allowed);
  }

  const auto& ph = section(t, "phantom");
  reject_unknown(ph, "phantom", {"kind", "file"});
  if (auto it = ph.find("kind"); it != ph.end()) cfg.phantom_kind = it->second;
  if (cfg.phantom_kind == "file") {
    cfg.phantom_path = resolve(require(ph, "phantom", "file"));
  } else if (cfg.phantom_kind != "desk" && cfg.phantom_kind != "three_disk") {
    throw ConfigError("[phantom] kind must be desk, three_disk or file");
  }
  if (cfg.phantom_kind != "file" && cfg.material_names != std::vector<std::string>{"bone", "water", "iodine"}) {
    throw ConfigError("built-in phantoms need materials 'bone, water, iodine' in that order");
  }

  const auto& sim = section(t, "simulation");
  reject_unknown(sim, "simulation", {"seed", "noise"});
  if (auto it = sim.find("noise"); it != sim.end()) cfg.noise = parse_bool(it->second, "[simulation] noise");
  if (auto it = sim.find("seed"); it != sim.end()) {
    cfg.seed = parse_u64(it->second, "[simulation] seed");
    cfg.seed_given = true;
  }

  const auto& out = section(t, "output");
  reject_unknown(out, "output", {"dir"});
  if (auto it = out.find("dir"); it != out.end()) cfg.output_dir = it->second;

  for (const auto& name : cfg.material_names) cfg.display[name] = DisplayWindow{0.0, 1.0};
  if (cfg.display.count("bone")) cfg.display["bone"] = {0.012, 0.1};
  if (cfg.display.count("water")) cfg.display["water"] = {0.35, 0.80};
  if (cfg.display.count("iodine")) cfg.display["iodine"] = {0.011, 0.012};
  for (const auto& [key, value] : section(t, "display")) {
    if (!cfg.display.count(key)) throw ConfigError("unknown key '" + key + "' in [display]");
    const auto v = parse_number_list(value, "[display] " + key);
    if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError("[display] " + key + ": expected 'low, high' with high > low");
    cfg.display[key] = {v[0], v[1]};
  }

  // Surface solver errors at load time rather than mid-run.
  cfg.solver_for(cfg.default_method());
  for (Method m : {Method::msart, Method::tvmr, Method::nlmmr, Method::bmfmr}) {
    if (t.count(method_name(m))) cfg.solver_for(m);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  cfg.source = path;
  for (const auto& p : cfg.attenuation_paths) {
    if (!std::filesystem::exists(p)) throw ConfigError("attenuation table '" + p.string() + "' does not exist");
  }
  if (!std::filesystem::exists(cfg.spectrum_path)) throw ConfigError("spectrum '" + cfg.spectrum_path.string() + "' does not exist");
  if (cfg.phantom_kind == "file" && !std::filesystem::exists(cfg.phantom_path)) {
    throw ConfigError("phantom file '" + cfg.phantom_path.string() + "' does not exist");
  }
  return cfg;
}

}  // namespace smr
