#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qiup/config.hpp"

namespace qiup::cli {

/// Round-trip decimal text for a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shorter text for header metadata.
inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// One table written as CSV or JSON. `meta` holds deterministic key/value pairs
/// (they go into the CSV header); `sidecar` holds anything else, such as timings.
struct Artifact {
  std::string name;
  std::string subcommand;
  std::string normalization = "raw";
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> meta;
  nlohmann::ordered_json sidecar = nlohmann::ordered_json::object();

  void add_row(std::initializer_list<double> values) {
    std::vector<std::string> r;
    for (double v : values) r.push_back(fmt(v));
    rows.push_back(std::move(r));
  }
};

enum class Format { Csv, Json };

inline nlohmann::ordered_json config_json(const config::Config& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, e] : c.entries()) j[k] = {{"value", e.value}, {"origin", e.origin}};
  return j;
}

/// Writes `<out>/<name>.csv|json` and `<out>/<name>.meta.json`; returns the data path.
inline std::string write_artifact(const std::string& out_dir, const Artifact& a, Format f, const config::Config& c,
                                  double wall_time_s) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string hash = config::hash_hex(c);
  const fs::path data = fs::path(out_dir) / (a.name + (f == Format::Csv ? ".csv" : ".json"));
  {
    std::ofstream out(data);
    if (!out) throw std::runtime_error("cannot write " + data.string());
    if (f == Format::Csv) {
      out << "# subcommand: " << a.subcommand << "\n";
      out << "# config_hash: " << hash << "\n";
      out << "# normalization: " << a.normalization << "\n";
      for (const auto& [k, v] : a.meta) out << "# " << k << ": " << v << "\n";
      for (std::size_t i = 0; i < a.columns.size(); ++i) out << (i ? "," : "") << a.columns[i];
      out << "\n";
      for (const auto& r : a.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << "\n";
      }
    } else {
      nlohmann::ordered_json j;
      j["subcommand"] = a.subcommand;
      j["config_hash"] = hash;
      j["normalization"] = a.normalization;
      for (const auto& [k, v] : a.meta) j["meta"][k] = v;
      j["columns"] = a.columns;
      j["rows"] = a.rows;
      out << j.dump(1) << "\n";
    }
  }
  nlohmann::ordered_json m;
  m["subcommand"] = a.subcommand;
  m["artifact"] = data.filename().string();
  m["config_hash"] = hash;
  m["normalization"] = a.normalization;
  m["threads"] = thread_count();
  m["wall_time_s"] = wall_time_s;
  for (const auto& [k, v] : a.meta) m["results"][k] = v;
  for (const auto& [k, v] : a.sidecar.items()) m[k] = v;
  m["config"] = config_json(c);
  std::ofstream side(fs::path(out_dir) / (a.name + ".meta.json"));
  side << m.dump(2) << "\n";
  return data.string();
}

}  // namespace qiup::cli
