#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qiup/rate_estimator.hpp"

using namespace qiup;
using namespace qiup::rates;

namespace {

AbsoluteScenario base() {
  AbsoluteScenario a;
  a.permittivity = DispersionTable({3.0, 4.0}, {{1.9763, 0.39124}, {1.9763, 0.39124}});
  a.band_nodes = 3;
  return a;
}

double rate(const AbsoluteScenario& a) { return total_rate(a, SourceQuadrature::fast()).rate_per_s; }

std::string write_tmp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST(TotalRate, ZeroPowerGivesZero) {
  AbsoluteScenario a = base();
  a.power_mw = 0.0;
  EXPECT_EQ(rate(a), 0.0);
}

TEST(TotalRate, ExactlyLinearInPumpPower) {
  AbsoluteScenario a = base();
  const double r1 = rate(a);
  a.power_mw *= 2.0;
  EXPECT_NEAR(rate(a), 2.0 * r1, 1e-14 * r1);
  a.power_mw = 37.0;
  EXPECT_NEAR(rate(a), 0.37 * r1, 1e-13 * r1);
}

TEST(TotalRate, PositiveAndGrowingWithRadius) {
  AbsoluteScenario a = base();
  double prev = 0.0;
  for (double r : {5.0, 10.0, 50.0}) {
    a.radius_nm = r;
    const RateReport rep = total_rate(a, SourceQuadrature::fast());
    for (const auto& s : rep.samples) EXPECT_GT(s.contribution, 0.0);
    EXPECT_GT(rep.rate_per_s, prev);
    prev = rep.rate_per_s;
  }
}

TEST(TotalRate, AdditiveOverSplitBands) {
  AbsoluteScenario a = base();
  const double full = rate(a);
  a.band_hi_nm = 584.0;
  const double lo = rate(a);
  a.band_lo_nm = 584.0;
  a.band_hi_nm = 591.0;
  const double hi = rate(a);
  EXPECT_NEAR(lo + hi, full, 1e-6 * full);
}

TEST(TotalRate, FieldAndSheetConstants) {
  const RateReport rep = total_rate(base(), SourceQuadrature::fast());
  EXPECT_NEAR(rep.e0_squared / (0.1 / (si::eps0 * si::c * pi * 25e-12)), 1.0, 1e-14);
  EXPECT_NEAR(rep.chi_sheet_m2_per_v, 2.0 * 70.6e-12 * 10e-9, 1e-30);
  // samples follow energy conservation with the 500 nm pump
  for (const auto& s : rep.samples) EXPECT_NEAR(1.0 / s.lambda_s_nm + 1.0 / s.lambda_i_nm, 1.0 / 500.0, 1e-15);
}

TEST(TotalRate, ValidatesInputs) {
  AbsoluteScenario a = base();
  a.band_lo_nm = 450.0;
  EXPECT_THROW(total_rate(a), DomainError);
  a = base();
  a.power_mw = -1.0;
  EXPECT_THROW(total_rate(a), DomainError);
  a = base();
  a.permittivity = DispersionTable({3.5, 3.6}, {{2.0, 0.1}, {2.0, 0.1}});
  EXPECT_THROW(total_rate(a, SourceQuadrature::fast()), DomainError);
}

TEST(Dispersion, InterpolatesAndRejectsOutOfRange) {
  const DispersionTable t({3.0, 4.0}, {{1.0, 0.0}, {3.0, 1.0}});
  EXPECT_NEAR(t.at(3.25).real(), 1.5, 1e-15);
  EXPECT_NEAR(t.at(3.25).imag(), 0.25, 1e-15);
  EXPECT_THROW((void)t.at(2.9), DomainError);
  EXPECT_THROW((void)t.at(4.1), DomainError);
  EXPECT_THROW(DispersionTable({4.0, 3.0}, {{1, 0}, {1, 0}}), DomainError);
}

TEST(Dispersion, LoadsCsvAndReportsBadLines) {
  const auto good = write_tmp("qiup_eps_good.csv", "# comment\nlambda_um,eps_real,eps_imag\n3.0,2.0,0.1\n4.0,2.5,0.3\n");
  const auto t = DispersionTable::load(good);
  EXPECT_NEAR(t.at(3.5).real(), 2.25, 1e-15);
  const auto bad = write_tmp("qiup_eps_bad.csv", "lambda_um,eps_real,eps_imag\n3.0,2.0,0.1\n4.0,x,0.3\n");
  try {
    (void)DispersionTable::load(bad);
    FAIL() << "expected a DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(DispersionTable::load("/nonexistent/eps.csv"), DomainError);
}

TEST(Dispersion, ShippedTableCoversTheIdlerBand) {
  const auto t = DispersionTable::load(std::string(QIUP_DATA_DIR) + "/dipa_permittivity.csv");
  EXPECT_LE(t.min_um(), SpdcScenario::idler_from(500.0, 591.0) * 1e-3);
  EXPECT_GE(t.max_um(), SpdcScenario::idler_from(500.0, 577.0) * 1e-3);
  EXPECT_NEAR(t.at(3.37).real(), 1.9763, 1e-12);
  EXPECT_NEAR(t.at(3.37).imag(), 0.39124, 1e-12);
}
