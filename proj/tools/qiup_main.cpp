// Command-line front end: `qiup <subcommand> [--config FILE] [--out DIR] ...`

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {
constexpr int exit_config = 2;
constexpr int exit_convergence = 3;
constexpr int exit_internal = 4;
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum imaging with undetected photons: induced-coherence simulator"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir = "out", format = "csv";
  unsigned threads = 0;
  bool fast = false, paper = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Config file (key = value)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "Worker threads (default: QIUP_THREADS or hardware)");
  auto* f = app.add_flag("--fast", fast, "Coarse quadrature preset");
  app.add_flag("--paper", paper, "Production quadrature preset")->excludes(f);
  app.add_option("--set", overrides, "Override a config entry, key=value (repeatable)");
  for (const auto& name : qiup::cli::subcommands()) app.add_subcommand(name, "")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    qiup::config::Config cfg =
        config_path.empty() ? qiup::config::Config{} : qiup::config::Config::parse_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw qiup::config::ConfigError("--set expects key=value, got `" + kv + "`");
      cfg.set(qiup::config::trim(kv.substr(0, eq)), qiup::config::trim(kv.substr(eq + 1)), "--set");
    }
    if (fast) cfg.set("quality", "fast", "--fast");
    if (paper) cfg.set("quality", "paper", "--paper");
    if (threads > 0) qiup::set_thread_count(threads);
    qiup::cli::RunOptions opt;
    opt.out_dir = out_dir;
    opt.format = format == "json" ? qiup::cli::Format::Json : qiup::cli::Format::Csv;
    return qiup::cli::run(app.get_subcommands().front()->get_name(), cfg, opt);
  } catch (const qiup::ConvergenceError& e) {
    std::fprintf(stderr, "convergence error: %s\n", e.what());
    return exit_convergence;
  } catch (const qiup::DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return exit_internal;
  }
}
