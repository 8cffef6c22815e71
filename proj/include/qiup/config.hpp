#pragma once

// Plain-text run configuration: `key = value` lines, `#` comments, units in key names.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qiup/rate_estimator.hpp"
#include "qiup/spdc.hpp"

#ifndef QIUP_DATA_DIR
#define QIUP_DATA_DIR "data"
#endif

namespace qiup::config {

class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class Quality { Fast, Paper };

struct Entry {
  std::string value;
  std::string origin;  // "default", "<file>:<line>" or "cli"
};

inline const std::vector<std::pair<std::string, std::string>>& default_entries() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"scenario", "paper_default"},
      {"quality", "paper"},
      {"lambda_p_nm", "500"},
      {"lambda_s_nm", ""},
      {"lambda_i_nm", "3370"},
      {"pump_profile", "gaussian"},
      {"pump_waist_um", "5"},
      {"pump_power_mw", "100"},
      {"pump_polarization", "1,0,0"},
      {"pump_center_x_um", "0"},
      {"pump_center_y_um", "0"},
      {"chi", "xxx"},
      {"particle_radius_nm", "5"},
      {"particle_height_nm", "10"},
      {"particle_x_um", "0"},
      {"particle_y_um", "0"},
      {"particle_eps_real", "1.9763"},
      {"particle_eps_imag", "0.39124"},
      {"detector_polarizations", "x,y,z"},
      {"filter_theta_min_deg", "0"},
      {"filter_theta_max_deg", "90"},
      {"image_half_extent_um", "2.5"},
      {"image_pixels", "101"},
      {"cut_half_extent_waves", "2.5"},
      {"cut_step_waves", "0.0208333333333333333"},
      {"ldos_half_extent_nm", "100"},
      {"ldos_pixels", "41"},
      {"ldos_sweep", "distance"},
      {"ldos_distance_values_nm", "10,20,30,40,50,60,70,80,90,100"},
      {"ldos_absorption_values", "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4"},
      {"sweep_variable", "signal"},
      {"sweep_pump_nm", "600,500,400,300"},
      {"sweep_idler_nm", "2000,2500,3000,3370,4000,4500,5000"},
      {"separation_nm", "930"},
      {"axis", "x"},
      {"resolution_axes", "x,y"},
      {"resolution_lo_nm", "200"},
      {"resolution_hi_nm", "2500"},
      {"resolution_target", "0.7"},
      {"resolution_tolerance_nm", "5"},
      {"filter_angles_deg", "0,2,4,6,8,9,10,11,12,13,13.4,14,14.3,15,16,18,20"},
      {"filter_theta_deg", "14.3"},
      {"slab_material", "GaP"},
      {"slab_thickness_nm", "10"},
      {"d14_pm_per_v", "70.6"},
      {"chi_per_d", "2"},
      {"rate_radii_nm", "5,10,50"},
      {"rate_gap_nm", "5"},
      {"band_lo_nm", "577"},
      {"band_hi_nm", "591"},
      {"band_nodes", "6"},
      {"dispersion_table", "dipa_permittivity.csv"},
      {"quad_radial_order", ""},
      {"quad_far_panel_um", ""},
      {"quad_angular_density", ""},
      {"quad_kernel_samples_per_wavelength", ""},
      {"bg_idler_theta", ""},
      {"bg_idler_phi", ""},
  };
  return d;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class Config {
 public:
  Config() {
    for (const auto& [k, v] : default_entries()) entries_[k] = {v, "default"};
  }

  static Config parse_string(const std::string& text, const std::string& origin) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = origin + ":" + std::to_string(lineno);
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(where + ": empty key");
      if (!c.entries_.count(key)) throw ConfigError(where + ": unknown key `" + key + "`");
      c.entries_[key] = {value, where};
    }
    c.base_dir_ = ".";
    return c;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Config c = parse_string(ss.str(), path);
    c.base_dir_ = std::filesystem::path(path).parent_path().string();
    return c;
  }

  void set(const std::string& key, const std::string& value, const std::string& origin = "cli") {
    if (!entries_.count(key)) throw ConfigError(origin + ": unknown key `" + key + "`");
    entries_[key] = {value, origin};
  }

  [[nodiscard]] const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown key `" + key + "`");
    return it->second;
  }
  [[nodiscard]] const std::string& str(const std::string& key) const { return entry(key).value; }
  [[nodiscard]] bool has(const std::string& key) const { return !str(key).empty(); }

  [[nodiscard]] double num(const std::string& key) const {
    const Entry& e = entry(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(e.origin + ": `" + key + "` expects a number, got `" + e.value + "`");
    }
  }
  [[nodiscard]] unsigned count(const std::string& key) const {
    const double v = num(key);
    if (v < 1.0 || v != std::floor(v) || v > 1e7)
      throw ConfigError(entry(key).origin + ": `" + key + "` expects a positive integer");
    return static_cast<unsigned>(v);
  }
  [[nodiscard]] std::vector<std::string> items(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(tok);
    }
    return out;
  }
  [[nodiscard]] std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : items(key)) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(t, &pos));
        if (pos != t.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(entry(key).origin + ": `" + key + "` expects a comma-separated number list, bad item `" +
                          t + "`");
      }
    }
    return out;
  }

  /// Sorted `key = value` text of every entry; hashed for provenance.
  [[nodiscard]] std::string canonical() const {
    std::string s;
    for (const auto& [k, e] : entries_) s += k + " = " + e.value + "\n";
    return s;
  }
  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }
  [[nodiscard]] const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, Entry> entries_;
  std::string base_dir_ = ".";
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(const Config& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(c.canonical())));
  return buf;
}

struct Wavelengths {
  double p, s, i;
};

/// Any two wavelengths fix the third; all three must satisfy energy conservation.
inline Wavelengths resolve_wavelengths(const Config& c) {
  const bool hp = c.has("lambda_p_nm"), hs = c.has("lambda_s_nm"), hi = c.has("lambda_i_nm");
  const int n = int(hp) + int(hs) + int(hi);
  if (n < 2) throw ConfigError("need at least two of lambda_p_nm, lambda_s_nm, lambda_i_nm");
  Wavelengths w{};
  if (hp) w.p = c.num("lambda_p_nm");
  if (hs) w.s = c.num("lambda_s_nm");
  if (hi) w.i = c.num("lambda_i_nm");
  for (const char* k : {"lambda_p_nm", "lambda_s_nm", "lambda_i_nm"})
    if (c.has(k) && !(c.num(k) > 0.0)) throw ConfigError(c.entry(k).origin + ": `" + k + "` must be positive");
  if (!hs) w.s = SpdcScenario::signal_from(w.p, w.i);
  if (!hi) w.i = SpdcScenario::idler_from(w.p, w.s);
  if (!hp) w.p = SpdcScenario::pump_from(w.s, w.i);
  if (!(w.s > 0.0) || !(w.i > 0.0) || !(w.p > 0.0))
    throw ConfigError("wavelengths admit no positive solution of 1/lP = 1/lS + 1/lI");
  const double res = std::abs(1.0 / w.p - 1.0 / w.s - 1.0 / w.i) * w.p;
  if (n == 3 && res > 1e-9) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "inconsistent wavelengths: 1/lP - 1/lS - 1/lI has relative residual %.3e (limit 1e-9)",
                  res);
    throw ConfigError(buf);
  }
  return w;
}

inline Vec3 parse_vec3(const Config& c, const std::string& key) {
  const auto v = c.list(key);
  if (v.size() != 3) throw ConfigError(c.entry(key).origin + ": `" + key + "` expects three components");
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0)) throw ConfigError(c.entry(key).origin + ": `" + key + "` must be nonzero");
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline Quality quality(const Config& c) {
  const auto& q = c.str("quality");
  if (q == "paper") return Quality::Paper;
  if (q == "fast") return Quality::Fast;
  throw ConfigError(c.entry("quality").origin + ": `quality` must be fast or paper");
}

inline SourceQuadrature source_quadrature(const Config& c) {
  SourceQuadrature q = quality(c) == Quality::Fast ? SourceQuadrature::fast() : SourceQuadrature::paper();
  if (c.has("quad_radial_order")) q.radial_order = c.count("quad_radial_order");
  if (c.has("quad_far_panel_um")) q.far_panel_um = c.num("quad_far_panel_um");
  if (c.has("quad_angular_density")) q.angular_density = c.num("quad_angular_density");
  if (c.has("quad_kernel_samples_per_wavelength"))
    q.kernel_samples_per_wavelength = c.count("quad_kernel_samples_per_wavelength");
  if (!(q.far_panel_um > 0.0) || !(q.angular_density > 0.0)) throw ConfigError("quadrature overrides must be positive");
  return q;
}

inline BackgroundQuadrature background_quadrature(const Config& c) {
  BackgroundQuadrature q = quality(c) == Quality::Fast ? BackgroundQuadrature::fast() : BackgroundQuadrature::paper();
  if (c.has("bg_idler_theta")) q.idler_theta = c.count("bg_idler_theta");
  if (c.has("bg_idler_phi")) q.idler_phi = c.count("bg_idler_phi");
  return q;
}

inline std::vector<Vec3> detector_polarizations(const Config& c) {
  std::vector<Vec3> out;
  for (const auto& t : c.items("detector_polarizations")) {
    if (t == "x") out.push_back({1, 0, 0});
    else if (t == "y") out.push_back({0, 1, 0});
    else if (t == "z") out.push_back({0, 0, 1});
    else throw ConfigError(c.entry("detector_polarizations").origin + ": polarization items must be x, y or z");
  }
  if (out.empty()) throw ConfigError("detector_polarizations is empty");
  return out;
}

inline Axis axis(const Config& c, const std::string& key, const std::string& value) {
  if (value == "x") return Axis::X;
  if (value == "y") return Axis::Y;
  throw ConfigError(c.entry(key).origin + ": `" + key + "` must be x or y");
}

/// Fully validated scenario (no detector points yet).
inline SpdcScenario build_scenario(const Config& c) {
  const Wavelengths w = resolve_wavelengths(c);
  SpdcScenario s;
  s.lambda_s_nm = w.s;
  s.lambda_i_nm = w.i;
  s.pump.wavelength_nm = w.p;
  const auto& prof = c.str("pump_profile");
  if (prof == "gaussian") s.pump.profile = PumpProfile::Gaussian;
  else if (prof == "plane-wave") s.pump.profile = PumpProfile::PlaneWave;
  else throw ConfigError(c.entry("pump_profile").origin + ": `pump_profile` must be gaussian or plane-wave");
  s.pump.waist_um = c.num("pump_waist_um");
  s.pump.power_mw = c.num("pump_power_mw");
  s.pump.polarization = parse_vec3(c, "pump_polarization");
  s.pump.center_x_um = c.num("pump_center_x_um");
  s.pump.center_y_um = c.num("pump_center_y_um");
  const auto& chi = c.str("chi");
  if (chi == "xxx") s.chi = ChiTensor::xxx();
  else if (chi == "zincblende") s.chi = ChiTensor::zincblende();
  else throw ConfigError(c.entry("chi").origin + ": `chi` must be xxx or zincblende");
  NanoParticle p;
  p.radius_nm = c.num("particle_radius_nm");
  p.center = {c.num("particle_x_um"), c.num("particle_y_um"), c.num("particle_height_nm") * 1e-3};
  p.permittivity = {c.num("particle_eps_real"), c.num("particle_eps_imag")};
  s.particles = {p};
  s.detector_polarizations = detector_polarizations(c);
  s.filter = {c.num("filter_theta_min_deg"), c.num("filter_theta_max_deg")};
  s.source_quadrature = source_quadrature(c);
  s.background_quadrature = background_quadrature(c);
  if (!(c.num("image_half_extent_um") > 0.0)) throw ConfigError("image_half_extent_um must be positive");
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return s;
}

inline std::string resolve_data_path(const Config& c, const std::string& key) {
  namespace fs = std::filesystem;
  const fs::path p(c.str(key));
  if (p.is_absolute()) return p.string();
  for (const fs::path base : {fs::path(c.base_dir()), fs::path(QIUP_DATA_DIR)})
    if (fs::exists(base / p)) return (base / p).string();
  throw ConfigError(c.entry(key).origin + ": cannot find `" + p.string() + "`");
}

inline rates::AbsoluteScenario build_absolute(const Config& c, double radius_nm) {
  rates::AbsoluteScenario a;
  a.slab_material = c.str("slab_material");
  a.thickness_nm = c.num("slab_thickness_nm");
  a.d14_pm_per_v = c.num("d14_pm_per_v");
  a.chi_per_d = c.num("chi_per_d");
  a.power_mw = c.num("pump_power_mw");
  a.waist_um = c.num("pump_waist_um");
  a.lambda_p_nm = resolve_wavelengths(c).p;
  a.band_lo_nm = c.num("band_lo_nm");
  a.band_hi_nm = c.num("band_hi_nm");
  a.band_nodes = c.count("band_nodes");
  a.radius_nm = radius_nm;
  a.gap_nm = c.num("rate_gap_nm");
  a.pump_polarization = parse_vec3(c, "pump_polarization");
  a.permittivity = rates::DispersionTable::load(resolve_data_path(c, "dispersion_table"));
  try {
    a.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid rate scenario: ") + e.what());
  }
  return a;
}

}  // namespace qiup::config
