#pragma once

#include <string>
#include <vector>

#include "output.hpp"

namespace qiup::cli {

struct RunOptions {
  std::string out_dir = "out";
  Format format = Format::Csv;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"ldos-map",   "ldos-sweep",   "psf",           "fwhm-sweep",
                                                 "two-particle", "resolution", "filter-sweep", "filtered-image",
                                                 "total-rate", "verify"};
  return names;
}

/// Runs one subcommand and writes its artifacts. Returns the process exit status
/// for completed runs (nonzero only when `verify` finds a failing check).
int run(const std::string& subcommand, const config::Config& cfg, const RunOptions& opt);

}  // namespace qiup::cli
