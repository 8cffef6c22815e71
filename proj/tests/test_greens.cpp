#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qiup/greens.hpp"
#include "qiup/verify.hpp"

using namespace qiup;

namespace {

double rel(const ComplexTensor3& a, const ComplexTensor3& b) { return verify::rel_diff(a, b); }

const WaveNumber k_idler = WaveNumber::from_wavelength_um(3.37);
const WaveNumber k_signal = WaveNumber::from_wavelength_um(0.587);

}  // namespace

TEST(G0, CoincidenceImaginaryDiagonalIsKOver6Pi) {
  for (double lam : {0.4, 0.587, 3.37}) {
    const WaveNumber k = WaveNumber::from_wavelength_um(lam);
    const auto g = greens::g0_imag({1, 2, 3}, {1, 2, 3}, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(g(i, j), i == j ? k.value() / (6 * pi) : 0.0, 1e-12 * k.value());
  }
}

TEST(G0, ImagPartContinuousThroughSmallSeparations) {
  const auto c = greens::g0_imag({0, 0, 0}, {0, 0, 0}, k_idler);
  for (double r : {1e-8, 1e-5, 1e-3, 1e-2}) {
    const auto g = greens::g0_imag({r, 0, 0}, {0, 0, 0}, k_idler);
    EXPECT_NEAR(g(0, 0), c(0, 0), 0.1 * std::pow(k_idler.value() * r, 2) * c(0, 0) + 1e-15);
    EXPECT_NEAR(g(1, 1), c(1, 1), 0.25 * std::pow(k_idler.value() * r, 2) * c(1, 1) + 1e-15);
  }
}

TEST(G0, ImagPartAgreesWithClosedForm) {
  for (const auto& [a, b] : verify::random_pairs(10, 21, false)) {
    const auto full = greens::g0_closed_form(a, b, k_idler);
    const auto im = greens::g0_imag(a, b, k_idler);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(im(i, j), full(i, j).imag(), 1e-12);
  }
}

// Reference from symbolic differentiation of exp(ikR)/(4 pi R).
TEST(G0, ClosedFormMatchesSymbolicOracle) {
  const auto g = greens::g0_closed_form({0.3, -0.2, 0.5}, {-0.1, 0.25, 0.1}, k_idler);
  const cplx xx{9.328146108373498e-03, 7.114727328306977e-02};
  const cplx xy{-8.779943684045860e-02, -5.425492613859347e-03};
  const cplx xz{7.804394385818542e-02, 4.822660101208308e-03};
  const cplx yy{3.005856869570400e-02, 7.242829237245324e-02};
  EXPECT_LT(std::abs(g(0, 0) - xx), 1e-14);
  EXPECT_LT(std::abs(g(0, 1) - xy), 1e-14);
  EXPECT_LT(std::abs(g(0, 2) - xz), 1e-14);
  EXPECT_LT(std::abs(g(1, 1) - yy), 1e-14);
  EXPECT_LT(std::abs(g(2, 2) - xx), 1e-14);
  EXPECT_LT(std::abs(g(1, 2) - xy), 1e-14);
}

TEST(G0, ClosedFormRejectsCoincidentPoints) {
  EXPECT_THROW(greens::g0_closed_form({1, 1, 1}, {1, 1, 1}, k_idler), DomainError);
}

TEST(G0, ReciprocityAndSymmetry) {
  for (const auto& [a, b] : verify::random_pairs(20, 5, false)) {
    const auto ab = greens::g0_closed_form(a, b, k_signal);
    EXPECT_LT(rel(ab, greens::g0_closed_form(b, a, k_signal).transposed()), 1e-10);
    EXPECT_LT(rel(ab, ab.transposed()), 1e-12);
  }
}

TEST(Weyl, ReconstructsClosedFormOffPlane) {
  for (const auto& [a, b] : verify::random_pairs(20, 9, true)) {
    const auto w = greens::weyl_propagating(a, b, k_idler) + greens::weyl_evanescent(a, b, k_idler);
    EXPECT_LT(rel(w, greens::g0_closed_form(a, b, k_idler)), 1e-4);
  }
}

TEST(Weyl, EvanescentWavesAddNothingToImaginaryDiagonal) {
  for (const auto& [a, b] : verify::random_pairs(8, 13, true)) {
    const auto p = greens::weyl_propagating(a, b, k_idler);
    const auto e = greens::weyl_evanescent(a, b, k_idler);
    const auto im = greens::g0_imag(a, b, k_idler);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(e(i, i).imag(), 0.0, 1e-12);
      EXPECT_NEAR(p(i, i).imag(), im(i, i), 1e-6);
    }
  }
}

TEST(Weyl, FilterBandsAreAdditive) {
  const Point3 r{0.4, -0.3, 0.2}, rp{0, 0, 0};
  const auto full = greens::weyl_propagating(r, rp, k_signal);
  const auto lo = greens::weyl_propagating(r, rp, k_signal, {0.0, 23.0});
  const auto hi = greens::weyl_propagating(r, rp, k_signal, {23.0, 90.0});
  EXPECT_LT(rel(lo + hi, full), 1e-12);
  EXPECT_EQ(frobenius(greens::weyl_propagating(r, rp, k_signal, AngularFilter::high_pass(90.0))), 0.0);
}

TEST(Weyl, EvanescentNeedsZSeparation) {
  EXPECT_THROW(greens::weyl_evanescent({1, 0, 0}, {0, 0, 0}, k_idler), DomainError);
}

// Reference values from 1D adaptive quadrature of the Bessel-reduced band integral.
TEST(ImagingKernel, TableMatchesIndependentQuadrature) {
  const greens::PlanarImagingKernel kern(k_signal, {}, 2.0, 512);
  const double R = 0.4, phi = 0.3;
  const auto g = kern(R * std::cos(phi), R * std::sin(phi));
  EXPECT_NEAR(g(0, 0).imag(), 0.0008017198870412923, 2e-9);
  EXPECT_NEAR(g(1, 1).imag(), -0.17202125285150102, 2e-9);
  EXPECT_NEAR(g(0, 1).imag(), 0.05911727848873482, 2e-9);
  EXPECT_NEAR(g(2, 2).imag(), -0.1903083700663339, 2e-9);
  EXPECT_NEAR(g(0, 2).real(), 0.05447345580452784, 2e-9);
  const auto g0 = kern(0.0, 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g0(i, i).imag(), k_signal.value() / (6 * pi), 1e-12);
}

TEST(ImagingKernel, TableMatchesTwoDimensionalPlaneWaveSum) {
  const AngularFilter f = AngularFilter::high_pass(12.0);
  const greens::PlanarImagingKernel kern(k_signal, f, 3.0);
  for (const auto& d : {Point3{0.05, 0.0, 0}, Point3{0.3, -0.7, 0}, Point3{-1.9, 1.1, 0}}) {
    const auto direct = greens::g_signal_imaging(d, {0, 0, 0}, k_signal, f);
    EXPECT_LT(rel(kern(d.x, d.y), direct), 1e-6);
  }
}

TEST(ImagingKernel, ForwardOnlyKernelIsNotTransposeSymmetricInXZ) {
  // only the forward plane-wave half enters, so the xz entry is odd in the separation
  const greens::PlanarImagingKernel kern(k_signal, {}, 1.0);
  const auto a = kern(0.3, 0.0), b = kern(-0.3, 0.0);
  EXPECT_NEAR(a(0, 2).real(), -b(0, 2).real(), 1e-14);
  EXPECT_GT(std::abs(a(0, 2)), 1e-3);
}

TEST(ImagingKernel, RejectsSeparationBeyondTable) {
  const greens::PlanarImagingKernel kern(k_signal, {}, 1.0);
  EXPECT_THROW((void)kern(5.0, 0.0), DomainError);
}

TEST(ImagingKernel, SignalImagingPreconditions) {
  EXPECT_THROW(greens::g_signal_imaging({0, 0, 0}, {0, 0, 0.1}, k_signal, {}), DomainError);
  EXPECT_THROW(greens::g_signal_imaging({0, 0, -0.1}, {0, 0, 0}, k_signal, {}), DomainError);
  greens::ImagingQuadrature q;
  q.theta_nodes = 4;
  q.phi_nodes = 4;
  q.max_doublings = 0;
  EXPECT_THROW(greens::g_signal_imaging({3.0, 0, 0}, {0, 0, 0}, k_signal, {}, q), ConvergenceError);
}

TEST(WaveNumber, RejectsNonPositive) {
  EXPECT_THROW(WaveNumber(0.0), DomainError);
  EXPECT_THROW(WaveNumber(-1.0), DomainError);
  EXPECT_THROW(AngularFilter(20.0, 10.0), DomainError);
}
