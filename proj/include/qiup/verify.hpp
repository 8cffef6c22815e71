#pragma once

// Self-checks shared by the `verify` subcommand and the acceptance suite.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qiup/spectral.hpp"
#include "qiup/spdc.hpp"

namespace qiup::verify {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

inline double rel_diff(const ComplexTensor3& a, const ComplexTensor3& b) {
  return frobenius(a - b) / std::max(frobenius(b), 1e-300);
}

/// Im G0 diagonal at coincidence against k / (6 pi), and zero off-diagonal.
inline Check coincidence_limit() {
  double worst = 0.0;
  for (double lam : {0.33, 0.587, 1.0, 3.37, 5.0}) {
    const WaveNumber k = WaveNumber::from_wavelength_um(lam);
    const Point3 r{0.3, -0.2, 0.7};
    const RealTensor3 g = greens::g0_imag(r, r, k);
    const double ref = k.value() / (6.0 * pi);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? ref : 0.0)) / ref);
  }
  return {"coincidence Im G0 = k/(6 pi) I", worst <= 1e-12, worst, 1e-12, "5 wavelengths"};
}

inline std::vector<std::pair<Point3, Point3>> random_pairs(std::size_t n, std::uint64_t seed, bool off_plane) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5), h(0.05, 1.0);
  std::vector<std::pair<Point3, Point3>> out;
  while (out.size() < n) {
    Point3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    if (off_plane) b.z = a.z + (rng() % 2 ? 1.0 : -1.0) * h(rng);
    if ((a - b).norm() > 0.05) out.emplace_back(a, b);
  }
  return out;
}

/// G0(r, r') = G0(r', r)^T for the closed form and the plane-wave reconstruction.
inline Check reciprocity() {
  const WaveNumber k = WaveNumber::from_wavelength_um(3.37);
  double worst = 0.0;
  for (const auto& [a, b] : random_pairs(20, 7, false))
    worst = std::max(worst, rel_diff(greens::g0_closed_form(a, b, k), greens::g0_closed_form(b, a, k).transposed()));
  for (const auto& [a, b] : random_pairs(5, 11, true)) {
    const ComplexTensor3 ab = greens::weyl_propagating(a, b, k, {}) + greens::weyl_evanescent(a, b, k);
    const ComplexTensor3 ba = greens::weyl_propagating(b, a, k, {}) + greens::weyl_evanescent(b, a, k);
    worst = std::max(worst, rel_diff(ab, ba.transposed()));
  }
  return {"reciprocity G(r,r') = G(r',r)^T", worst <= 1e-10, worst, 1e-10, "20 closed-form + 5 plane-wave pairs"};
}

/// Propagating plus evanescent plane-wave sums reproduce the closed form.
inline Check weyl_reconstruction() {
  double worst = 0.0;
  std::size_t i = 0;
  for (const auto& [a, b] : random_pairs(20, 3, true)) {
    const WaveNumber k = WaveNumber::from_wavelength_um(i++ % 2 ? 0.587 : 3.37);
    const ComplexTensor3 w = greens::weyl_propagating(a, b, k, {}) + greens::weyl_evanescent(a, b, k);
    worst = std::max(worst, rel_diff(w, greens::g0_closed_form(a, b, k)));
  }
  return {"plane-wave reconstruction of G0", worst <= 1e-4, worst, 1e-4, "20 random pairs"};
}

/// Small scenario for the fast/brute comparison: narrow pump, coarse rule, 16x16 pixels.
inline SpdcScenario oracle_scenario(int variant) {
  SpdcScenario s;
  s.pump.wavelength_nm = 500.0;
  s.lambda_i_nm = 3370.0;
  s.lambda_s_nm = SpdcScenario::signal_from(500.0, 3370.0);
  s.pump.waist_um = 0.7;
  s.source_quadrature = SourceQuadrature::oracle();
  NanoParticle p;
  p.center = {0.0, 0.0, 0.010};
  p.permittivity = dipa_permittivity_3370nm;
  s.particles = {p};
  if (variant == 1) {
    s.chi = ChiTensor::zincblende();
    s.pump.polarization = {0.6, 0.8, 0.0};
    s.particles[0].center = {0.1, -0.05, 0.02};
    s.particles[0].radius_nm = 8.0;
  } else if (variant == 2) {
    s.filter = AngularFilter::high_pass(12.0);
    NanoParticle q = p;
    q.center = {-0.15, 0.1, 0.015};
    q.permittivity = {2.5, 0.8};
    s.particles = {p, q};
    s.detector_polarizations = {Vec3{1, 0, 0}, Vec3{0, 0.6, 0.8}};
  }
  s.detector_points = image_grid(0.6, 16);
  s.grid_nx = s.grid_ny = 16;
  return s;
}

/// Factorized R_IC against the double-sum oracle, per pixel.
inline Check oracle_equivalence(int variant) {
  const SpdcScenario s = oracle_scenario(variant);
  const RateField fast = rate_ic_fast(s);
  const RateField brute = rate_ic_brute(s);
  double scale = 0.0, worst = 0.0;
  for (double v : brute.raw) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < fast.raw.size(); ++i) worst = std::max(worst, std::abs(fast.raw[i] - brute.raw[i]) / scale);
  return {"fast vs brute R_IC, scenario " + std::to_string(variant), worst <= 1e-6, worst, 1e-6,
          std::to_string(s.detector_points.size()) + " pixels"};
}

/// Real-space R_IC against the transverse-wavevector evaluation.
inline Check spectral_cross_check() {
  SpdcScenario s = oracle_scenario(0);
  s.pump.waist_um = 1.0;
  s.chi = ChiTensor::zincblende();
  s.pump.polarization = {0.6, 0.8, 0.0};
  s.source_quadrature = SourceQuadrature::paper();
  s.detector_points = {{0, 0, 0}, {0.3, 0, 0}, {0, 0.3, 0}, {0.25, 0.4, 0}, {1.0, 0.2, 0}};
  const RateField f = rate_ic_fast(s);
  const auto g = spectral::rate_ic_spectral(s);
  double scale = 0.0, worst = 0.0;
  for (double v : g) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(f.raw[i] - g[i]) / scale);
  return {"real-space vs k-space R_IC", worst <= 1e-5, worst, 1e-5, "5 points"};
}

inline std::vector<Check> run_all() {
  std::vector<Check> out{coincidence_limit(), reciprocity(), weyl_reconstruction()};
  for (int v = 0; v < 3; ++v) out.push_back(oracle_equivalence(v));
  out.push_back(spectral_cross_check());
  return out;
}

}  // namespace qiup::verify
