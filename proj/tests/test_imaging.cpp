#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qiup/imaging.hpp"
#include "qiup/verify.hpp"

using namespace qiup;
using namespace qiup::imaging;

namespace {

PsfCut sampled(double half, double step, double (*f)(double)) {
  std::vector<double> x, v;
  for (double t = -half; t <= half + 1e-12; t += step) {
    x.push_back(t);
    v.push_back(f(t));
  }
  return normalized_cut(Axis::X, x, v);
}

// Narrow pump and coarse rule: cheap, with the same imaging physics.
SpdcScenario quick() {
  SpdcScenario s = verify::oracle_scenario(0);
  s.pump.waist_um = 2.0;
  s.source_quadrature = SourceQuadrature::fast();
  s.background_quadrature = BackgroundQuadrature::fast();
  return s;
}

}  // namespace

TEST(Fwhm, GaussianMatchesClosedForm) {
  const auto cut = sampled(0.6, 0.005, [](double x) { return std::exp(-x * x / (2 * 0.01)); });
  EXPECT_NEAR(fwhm(cut) / (2.0 * std::sqrt(2.0 * std::log(2.0)) * 100.0), 1.0, 5e-3);
}

TEST(Fwhm, TriangleIsExactUnderLinearInterpolation) {
  const auto cut = sampled(1.0, 0.01, [](double x) { return std::max(0.0, 1.0 - std::abs(x) / 0.4); });
  EXPECT_NEAR(fwhm(cut), 400.0, 1e-9);
}

TEST(Fwhm, SplitLobeReportsEnvelopeWidth) {
  // two lobes with a central dip below half maximum
  const auto cut = sampled(1.5, 0.002, [](double x) {
    return std::exp(-std::pow(x - 0.3, 2) / 0.01) + std::exp(-std::pow(x + 0.3, 2) / 0.01);
  });
  const double lobe_half = std::sqrt(0.01 * std::log(2.0));
  EXPECT_NEAR(fwhm(cut), 2e3 * (0.3 + lobe_half), 1.0);
}

TEST(Fwhm, RejectsWindowThatMissesTheCrossing) {
  const auto cut = sampled(0.1, 0.01, [](double x) { return std::exp(-x * x); });
  EXPECT_THROW(fwhm(cut), DomainError);
  EXPECT_THROW(fwhm(normalized_cut(Axis::X, {0, 1}, {1, 1})), DomainError);
}

TEST(LinearFit, ZeroResidualForALineAndScaleFreeOtherwise) {
  EXPECT_NEAR(linear_fit_residual_fraction({1, 2, 3, 4}, {3, 5, 7, 9}), 0.0, 1e-12);
  const double a = linear_fit_residual_fraction({1, 2, 3, 4}, {0, 1, 1, 2});
  const double b = linear_fit_residual_fraction({1, 2, 3, 4}, {0, 10, 10, 20});
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_THROW(linear_fit_residual_fraction({1, 2}, {1, 2}), DomainError);
}

TEST(LinearFit, RelativeSpreadIsRangeOverMean) {
  EXPECT_NEAR(relative_spread({90, 100, 110}), 0.2, 1e-15);
  EXPECT_EQ(relative_spread({5, 5}), 0.0);
  EXPECT_THROW(relative_spread({}), DomainError);
}

TEST(DipRatio, SyntheticDoublet) {
  auto doublet = [](double sep) {
    std::vector<double> x, v;
    for (int i = -400; i <= 400; ++i) {
      const double t = i * 0.005;
      x.push_back(t);
      v.push_back(std::exp(-std::pow(t - sep / 2, 2) / 0.05) + std::exp(-std::pow(t + sep / 2, 2) / 0.05));
    }
    return normalized_cut(Axis::X, x, v);
  };
  EXPECT_NEAR(dip_ratio(doublet(0.0), 0.0), 1.0, 1e-12);
  double prev = 1.0;
  for (double sep : {0.2, 0.4, 0.6, 0.8}) {
    const double d = dip_ratio(doublet(sep), sep);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 0.1);
}

TEST(Psf, PeakNormalizedAndRequiresCenteredParticle) {
  SpdcScenario s = quick();
  s.detector_points = image_grid(0.5, 9);
  s.grid_nx = s.grid_ny = 9;
  const RateField f = psf(s);
  EXPECT_DOUBLE_EQ(f.peak(), 1.0);
  EXPECT_EQ(f.normalization, Normalization::PeakNormalized);
  s.particles[0].center.x = 0.2;
  EXPECT_THROW(psf(s), DomainError);
}

TEST(Psf, SymmetricCutsAndSubWavelengthWidthAlongY) {
  const SpdcScenario s = quick();
  const PsfWidths w = psf_widths(s);
  const auto& v = w.x_cut.values;
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], v[v.size() - 1 - i], 1e-9);
  EXPECT_GT(w.fwhm_x_nm, w.fwhm_y_nm);
  EXPECT_LT(w.fwhm_y_nm, s.lambda_s_nm);
  EXPECT_LT(w.fwhm_x_nm, 0.5 * s.lambda_i_nm);
}

TEST(Psf, WidthGrowsWithSignalWavelength) {
  const auto sweep = fwhm_sweep(SweepVariable::Signal, {400.0, 500.0, 600.0}, quick());
  ASSERT_EQ(sweep.size(), 3u);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_GT(sweep[i].lambda_s_nm, sweep[i - 1].lambda_s_nm);
    EXPECT_GT(sweep[i].fwhm_y_nm, sweep[i - 1].fwhm_y_nm);
    EXPECT_NEAR(sweep[i].lambda_i_nm, 3370.0, 1e-9);
  }
}

TEST(TwoParticle, CoincidentParticlesActAsOneDoubledScatterer) {
  const SpdcScenario s = quick();
  const auto one = two_particle_image(s, 0.0, Axis::X, 0.5, 11);
  SpdcScenario single = s;
  single.detector_points = axis_cut(Axis::X, -0.5, 0.5, 11);
  single.particles.push_back(single.particles[0]);
  const auto both = rate_ic_fast(single).raw;
  single.particles.pop_back();
  const auto ref = rate_ic_fast(single).raw;
  const double peak = *std::max_element(ref.begin(), ref.end());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(both[i], 2.0 * ref[i], 1e-12 * peak);
    EXPECT_NEAR(one.values[i], ref[i] / peak, 1e-12);
  }
}

TEST(TwoParticle, DipDeepensWithSeparation) {
  const SpdcScenario s = quick();
  const double step = s.lambda_s_nm * 1e-3 / 48.0;
  double prev = 1.0;
  for (double sep : {0.4, 0.7, 1.0}) {
    const double d = dip_at(s, sep, Axis::Y, step);
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(TwoParticle, ResolutionSearchRejectsBadBracket) {
  ResolutionSearch rs;
  rs.lo_um = 1.8;
  rs.hi_um = 2.5;
  EXPECT_THROW(resolution_limit(quick(), Axis::Y, rs), DomainError);
}

TEST(Filter, FullHighPassRemovesEverything) {
  SpdcScenario s = quick();
  s.detector_points = {{0, 0, 0}, {0.2, 0, 0}};
  const auto f = filtered_total_image(s, 90.0);
  for (double v : f.total.raw) EXPECT_EQ(v, 0.0);
}

TEST(Filter, SweepIsNormalizedToUnfilteredInducedRate) {
  SpdcScenario s = quick();
  s.pump.waist_um = 5.0;
  const auto fs = filter_sweep(s, {0.0, 8.0, 12.0, 16.0});
  EXPECT_NEAR(fs.induced[0], 1.0, 1e-12);
  s.detector_points = {{0, 0, 0}};
  EXPECT_NEAR(fs.reference, rate_ic_fast(s).raw[0], 1e-15 * fs.reference);
  for (std::size_t i = 1; i < fs.background.size(); ++i) EXPECT_LT(fs.background[i], fs.background[i - 1]);
  EXPECT_GT(fs.background[0], fs.induced[0]);
  EXPECT_LT(fs.background.back(), fs.induced.back());
  EXPECT_TRUE(std::isfinite(fs.crossing_deg));
}

TEST(Filter, ContrastFromSyntheticField) {
  const auto f = RateField::from_raw({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, 3, 1, {4.0, 1.0, 3.0});
  EXPECT_DOUBLE_EQ(peak_to_far_contrast(f, {0, 0, 0}, 0.9), 2.0);
  EXPECT_THROW(peak_to_far_contrast(f, {0, 0, 0}, 5.0), DomainError);
}
