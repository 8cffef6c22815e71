#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "output.hpp"
#include "qiup/config.hpp"

using namespace qiup;
using namespace qiup::config;
namespace fs = std::filesystem;

namespace {

const std::string paper_cfg = std::string(QIUP_DATA_DIR) + "/../configs/paper_default.cfg";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QIUP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, ShippedConfigDerivesSignalWavelength) {
  const Config c = Config::parse_file(paper_cfg);
  const Wavelengths w = resolve_wavelengths(c);
  EXPECT_NEAR(w.s, 587.108013937, 1e-6);
  const SpdcScenario s = build_scenario(c);
  EXPECT_EQ(s.particles.size(), 1u);
  EXPECT_NEAR(s.particles[0].center.z, 0.010, 1e-15);
  EXPECT_EQ(s.pump.waist_um, 5.0);
  EXPECT_EQ(s.detector_polarizations.size(), 3u);
}

TEST(Config, AnyTwoWavelengthsFixTheThird) {
  Config c;
  c.set("lambda_p_nm", "");
  c.set("lambda_s_nm", "587.10801393728229");
  EXPECT_NEAR(resolve_wavelengths(c).p, 500.0, 1e-9);
  c.set("lambda_i_nm", "");
  EXPECT_THROW(resolve_wavelengths(c), ConfigError);
}

TEST(Config, InconsistentTripleReportsResidual) {
  Config c;
  c.set("lambda_s_nm", "600");
  try {
    (void)resolve_wavelengths(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("residual"), std::string::npos) << m;
    EXPECT_NE(m.find("e-"), std::string::npos) << m;
  }
}

TEST(Config, UnknownKeyNamesFileAndLine) {
  try {
    (void)Config::parse_string("lambda_p_nm = 500\n\n# note\npump_wiast_um = 5\n", "run.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("pump_wiast_um"), std::string::npos);
  }
  EXPECT_THROW(Config::parse_string("just a line\n", "x"), ConfigError);
  Config c;
  EXPECT_THROW(c.set("nope", "1"), ConfigError);
}

TEST(Config, OriginsAndTypedAccess) {
  Config c = Config::parse_string("pump_waist_um = 7 # comment\nsweep_pump_nm = 600, 500 ,400\n", "a.cfg");
  EXPECT_EQ(c.entry("pump_waist_um").origin, "a.cfg:1");
  EXPECT_EQ(c.entry("pump_power_mw").origin, "default");
  EXPECT_EQ(c.num("pump_waist_um"), 7.0);
  EXPECT_EQ(c.list("sweep_pump_nm"), (std::vector<double>{600, 500, 400}));
  c.set("pump_waist_um", "7um");
  EXPECT_THROW((void)c.num("pump_waist_um"), ConfigError);
  c.set("image_pixels", "2.5");
  EXPECT_THROW((void)c.count("image_pixels"), ConfigError);
  c.set("chi", "wurtzite");
  c.set("pump_waist_um", "7");
  EXPECT_THROW(build_scenario(c), ConfigError);
}

TEST(Config, HashTracksValuesNotOrigins) {
  Config a, b;
  a.set("pump_waist_um", "5", "x.cfg:3");
  EXPECT_EQ(hash_hex(a), hash_hex(b));
  b.set("pump_waist_um", "6");
  EXPECT_NE(hash_hex(a), hash_hex(b));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, DispersionTableResolvesAgainstDataDir) {
  const Config c;
  const auto a = build_absolute(c, 10.0);
  EXPECT_EQ(a.radius_nm, 10.0);
  EXPECT_NEAR(a.center_height_um(), 0.015, 1e-15);
  Config bad;
  bad.set("dispersion_table", "missing.csv");
  EXPECT_THROW(build_absolute(bad, 5.0), ConfigError);
}

TEST(Artifact, CsvHeaderCarriesProvenance) {
  const auto dir = fresh_dir("qiup_artifact");
  cli::Artifact a;
  a.name = "t";
  a.subcommand = "psf";
  a.normalization = "peak-normalized";
  a.columns = {"x", "v"};
  a.meta = {{"fwhm_nm", "1"}};
  a.add_row({0.1, 1.0 / 3.0});
  const Config c;
  cli::write_artifact(dir.string(), a, cli::Format::Csv, c, 0.5);
  const std::string text = slurp(dir / "t.csv");
  EXPECT_EQ(text.rfind("# subcommand: psf\n# config_hash: " + hash_hex(c) + "\n# normalization: peak-normalized\n", 0), 0u)
      << text;
  EXPECT_NE(text.find("x,v\n0.10000000000000001,0.33333333333333331\n"), std::string::npos) << text;
  const auto meta = nlohmann::json::parse(slurp(dir / "t.meta.json"));
  EXPECT_EQ(meta["config"]["pump_waist_um"]["origin"], "default");
  EXPECT_EQ(meta["wall_time_s"], 0.5);
}

TEST(Cli, ExitCodes) {
  const auto dir = fresh_dir("qiup_cli_codes");
  EXPECT_EQ(run_cli("ldos-map --fast --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ldos_map.csv"));
  EXPECT_EQ(run_cli("ldos-map --out " + dir.string() + " --set bogus_key=1"), 2);
  EXPECT_EQ(run_cli("psf --out " + dir.string() + " --set lambda_s_nm=600"), 2);
  EXPECT_EQ(run_cli("--out " + dir.string()), 2);
  EXPECT_EQ(run_cli("ldos-map --fast --paper"), 2);
  EXPECT_EQ(run_cli("ldos-map --config /nonexistent.cfg"), 2);
  EXPECT_EQ(run_cli("psf --fast --out " + dir.string() + " --set image_pixels=3 --set quad_radial_order=1"), 3);
}
