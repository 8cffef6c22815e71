#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qiup/scatterer.hpp"

using namespace qiup;

namespace {

const WaveNumber k_idler = WaveNumber::from_wavelength_um(3.37);

NanoParticle dipa(double height_um = 0.010) {
  NanoParticle p;
  p.center = {0.0, 0.0, height_um};
  p.permittivity = dipa_permittivity_3370nm;
  return p;
}

}  // namespace

// Reference values from an independent numpy evaluation.
TEST(Polarizability, DipaSphereMatchesIndependentReference) {
  const auto a = scatterer::polarizability(dipa(), k_idler);
  EXPECT_NEAR(a.value.real(), 3.970405580956266e-07, 1e-19);
  EXPECT_NEAR(a.value.imag(), 1.1548937250684772e-07, 1e-19);
  EXPECT_NEAR(a.wavelength_um, 3.37, 1e-12);
}

TEST(Polarizability, RadiativeCorrectionSatisfiesOpticalTheorem) {
  // extinction >= scattering for a passive sphere: Im(alpha) >= k^3 |alpha|^2 / (6 pi)
  NanoParticle p = dipa();
  for (double eps_im : {0.0, 0.1, 0.4}) {
    p.permittivity = {1.9763, eps_im};
    const cplx a = scatterer::polarizability(p, k_idler).value;
    EXPECT_GE(a.imag() * (1.0 + 1e-12), std::pow(k_idler.value(), 3) * std::norm(a) / (6 * pi));
  }
  p.permittivity = {3.0, 0.0};
  const cplx a = scatterer::polarizability(p, k_idler).value;
  EXPECT_NEAR(a.imag(), std::pow(k_idler.value(), 3) * std::norm(a) / (6 * pi), 1e-10 * a.imag());
}

TEST(Polarizability, ScalesWithVolume) {
  NanoParticle p = dipa();
  const cplx a5 = scatterer::polarizability(p, k_idler).value;
  p.radius_nm = 10.0;
  const cplx a10 = scatterer::polarizability(p, k_idler).value;
  EXPECT_NEAR(std::abs(a10 / a5), 8.0, 1e-4);
}

TEST(Polarizability, RejectsResonancePoleAndActiveMedia) {
  NanoParticle p = dipa();
  p.permittivity = {-2.0, 1e-9};
  EXPECT_THROW(scatterer::polarizability(p, k_idler), DomainError);
  p.permittivity = {2.0, -0.1};
  EXPECT_THROW(scatterer::polarizability(p, k_idler), DomainError);
  p.permittivity = {2.0, 0.1};
  p.radius_nm = 0.0;
  EXPECT_THROW(scatterer::polarizability(p, k_idler), DomainError);
}

TEST(ScatteredGF, VacuumParticleHasNoEffect) {
  NanoParticle p = dipa();
  p.permittivity = {1.0, 0.0};
  const std::vector<NanoParticle> ps{p};
  EXPECT_EQ(frobenius(scatterer::g_scattered({0.1, 0, 0}, {0, 0.2, 0}, k_idler, ps)), 0.0);
  EXPECT_EQ(scatterer::ldos_ratio({0, 0, 0}, k_idler, ps), 1.0);
}

TEST(ScatteredGF, ReciprocalAndRejectsPointsAtTheCenter) {
  const std::vector<NanoParticle> ps{dipa()};
  const Point3 a{0.02, -0.01, 0}, b{-0.03, 0.04, 0};
  const auto ab = scatterer::g_scattered(a, b, k_idler, ps);
  const auto ba = scatterer::g_scattered(b, a, k_idler, ps);
  EXPECT_LT(frobenius(ab - ba.transposed()) / frobenius(ab), 1e-12);
  EXPECT_THROW(scatterer::g_scattered(ps[0].center, b, k_idler, ps), DomainError);
}

// Reference values: independent numpy evaluation of 1 + Im[k^2 alpha G0 G0]_xx / (k / 6 pi).
TEST(Ldos, MatchesIndependentEvaluation) {
  const NanoParticle p = dipa();
  const std::vector<double> rho{0.0, 0.02, 0.05};
  const auto x = scatterer::ldos_radial(rho, p, k_idler, 0.0);
  const auto y = scatterer::ldos_radial(rho, p, k_idler, pi / 2);
  EXPECT_NEAR(x[0].second / 2127.2271966281783, 1.0, 1e-12);
  EXPECT_NEAR(x[1].second / 58.95185993101324, 1.0, 1e-12);
  EXPECT_NEAR(y[1].second / 17.981066670620503, 1.0, 1e-12);
  EXPECT_NEAR(x[2].second / 1.4751789285332728, 1.0, 1e-12);
  EXPECT_NEAR(y[2].second / 1.1194613612908448, 1.0, 1e-12);
}

TEST(Ldos, PeakIsLocalizedBelowTheParticle) {
  const NanoParticle p = dipa();
  std::vector<double> rho;
  for (int i = 0; i <= 200; ++i) rho.push_back(i * 0.5e-3);
  const auto x = scatterer::ldos_radial(rho, p, k_idler, 0.0);
  const double peak = x.front().second;
  // monotone decay along the cut and half-maximum well inside 100 nm
  for (std::size_t i = 1; i < x.size(); ++i) EXPECT_LE(x[i].second, x[i - 1].second + 1e-12);
  double half_width = 0.0;
  for (const auto& [r, v] : x)
    if (v - 1.0 >= 0.5 * (peak - 1.0)) half_width = r;
  EXPECT_LT(2.0 * half_width, 0.100);
}

TEST(Ldos, MapIsSymmetricAndPeaksAtTheCenter) {
  const scatterer::PlaneGrid g{-0.05, 0.05, 21, -0.05, 0.05, 21};
  const auto m = scatterer::ldos_map(g, dipa(), k_idler);
  double best = 0.0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t j = 0; j < 21; ++j)
    for (std::size_t i = 0; i < 21; ++i) {
      EXPECT_NEAR(m.at(i, j), m.at(20 - i, j), 1e-9 * m.at(i, j));
      EXPECT_NEAR(m.at(i, j), m.at(i, 20 - j), 1e-9 * m.at(i, j));
      if (m.at(i, j) > best) {
        best = m.at(i, j);
        bi = i;
        bj = j;
      }
    }
  EXPECT_EQ(bi, 10u);
  EXPECT_EQ(bj, 10u);
}

TEST(Ldos, PeakDecreasesWithHeightAndGrowsWithAbsorption) {
  std::vector<double> z;
  for (int i = 10; i <= 100; i += 5) z.push_back(i);
  const auto dz = scatterer::ldos_peak_sweep(scatterer::SweepAxis::Distance, z, dipa(), k_idler);
  for (std::size_t i = 1; i < dz.size(); ++i) EXPECT_LT(dz[i].second, dz[i - 1].second);
  std::vector<double> e;
  for (int i = 0; i <= 8; ++i) e.push_back(0.05 * i);
  const auto de = scatterer::ldos_peak_sweep(scatterer::SweepAxis::Absorption, e, dipa(), k_idler);
  for (std::size_t i = 1; i < de.size(); ++i) EXPECT_GT(de[i].second, de[i - 1].second);
  EXPECT_THROW(scatterer::ldos_peak_sweep(scatterer::SweepAxis::Distance, std::vector<double>{0.0}, dipa(), k_idler),
               DomainError);
}
