#pragma once

// Transverse-wavevector picture of the induced-coherence term for one particle
// on the axis of a radially symmetric pump. The source factor
//   S(rho) = E(rho) G0(rho, c)
// has a Fourier transform whose angular dependence is analytic, so only four
// Hankel transforms per |kappa| are needed.

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "qiup/spdc.hpp"

namespace qiup::spectral {

/// Scalar coefficients of G0 = a(R) I + b(R) Rhat Rhat.
inline std::pair<cplx, cplx> g0_coefficients(double R, double k) {
  const double x = k * R;
  const cplx ph = std::exp(I * x) / (4.0 * pi * R);
  const cplx a = (1.0 + I / x - 1.0 / (x * x)) * ph;
  const cplx b = (-1.0 - 3.0 * I / x + 3.0 / (x * x)) * ph;
  return {a, b};
}

/// Fourier transforms int S(rho) e^{-i kappa.rho} d^2rho of E G0 and E conj(G0).
class SheetSpectrum {
 public:
  SheetSpectrum(const PumpField& pump, const NanoParticle& p, WaveNumber k_idler, const SourceQuadrature& q) {
    if (pump.profile != PumpProfile::Gaussian) throw DomainError("sheet spectrum needs a Gaussian pump");
    if (std::hypot(p.center.x - pump.center_x_um, p.center.y - pump.center_y_um) > 1e-12)
      throw DomainError("sheet spectrum needs the particle on the pump axis");
    h_ = p.center.z;
    if (!(std::abs(h_) > 0.0)) throw DomainError("particle center must lie off the source plane");
    const double r_out = q.cutoff_waists * pump.waist_um;
    std::vector<double> breaks{0.0};
    for (double r = std::abs(h_) * q.near_start_fraction; r < std::min(q.far_panel_um, r_out); r *= 2.0)
      breaks.push_back(r);
    const double last = breaks.back();
    const auto n_far = static_cast<unsigned>(std::ceil((r_out - last) / q.far_panel_um));
    for (unsigned i = 1; i <= n_far; ++i) breaks.push_back(last + (r_out - last) * i / n_far);
    for (const auto& n : quad::composite(breaks, q.radial_order)) {
      const double R = std::hypot(n.x, h_);
      auto [a, b] = g0_coefficients(R, k_idler.value());
      Node nd;
      nd.rho = n.x;
      const double wgt = n.w * n.x * pump.envelope(n.x, 0.0);
      const double s2 = n.x * n.x / (R * R), z2 = h_ * h_ / (R * R), cz = -n.x * h_ / (R * R);
      nd.u0 = wgt * (a + b * s2 / 2.0);
      nd.u2 = wgt * (b * s2 / 2.0);
      nd.uz = wgt * (a + b * z2);
      nd.v1 = wgt * (b * cz);
      nd.u0c = wgt * (std::conj(a) + std::conj(b) * s2 / 2.0);
      nd.u2c = wgt * (std::conj(b) * s2 / 2.0);
      nd.uzc = wgt * (std::conj(a) + std::conj(b) * z2);
      nd.v1c = wgt * (std::conj(b) * cz);
      nodes_.push_back(nd);
    }
  }

  /// Radial transforms at |kappa|; reused for every azimuth.
  struct Radial {
    cplx i0, i2, iz, i1;
    cplx i0c, i2c, izc, i1c;
  };

  [[nodiscard]] Radial radial(double kappa) const {
    Radial r{};
    for (const auto& n : nodes_) {
      const double x = kappa * n.rho;
      const double j0 = boost::math::cyl_bessel_j(0, x);
      const double j1 = boost::math::cyl_bessel_j(1, x);
      const double j2 = boost::math::cyl_bessel_j(2, x);
      r.i0 += n.u0 * j0;
      r.i2 += n.u2 * j2;
      r.iz += n.uz * j0;
      r.i1 += n.v1 * j1;
      r.i0c += n.u0c * j0;
      r.i2c += n.u2c * j2;
      r.izc += n.uzc * j0;
      r.i1c += n.v1c * j1;
    }
    return r;
  }

  /// Full tensors at azimuth psi: {transform of E G0, transform of E conj(G0)}.
  [[nodiscard]] static std::pair<ComplexTensor3, ComplexTensor3> tensors(const Radial& r, double psi) {
    return {assemble(r.i0, r.i2, r.iz, r.i1, psi), assemble(r.i0c, r.i2c, r.izc, r.i1c, psi)};
  }

 private:
  struct Node {
    double rho;
    cplx u0, u2, uz, v1, u0c, u2c, uzc, v1c;
  };

  static ComplexTensor3 assemble(cplx i0, cplx i2, cplx iz, cplx i1, double psi) {
    const double c2 = std::cos(2.0 * psi), s2 = std::sin(2.0 * psi);
    const double c1 = std::cos(psi), s1 = std::sin(psi);
    const double tp = 2.0 * pi;
    ComplexTensor3 t;
    t(0, 0) = tp * (i0 - i2 * c2);
    t(1, 1) = tp * (i0 + i2 * c2);
    t(0, 1) = t(1, 0) = -tp * i2 * s2;
    t(2, 2) = tp * iz;
    t(0, 2) = t(2, 0) = -tp * I * i1 * c1;
    t(1, 2) = t(2, 1) = -tp * I * i1 * s1;
    return t;
  }

  double h_ = 0.0;
  std::vector<Node> nodes_;
};

/// Forward signal dyad (I - khat khat) for transverse wavevector at polar angle theta.
inline RealTensor3 transverse_projector(double theta, double psi) {
  const double u[3] = {std::sin(theta) * std::cos(psi), std::sin(theta) * std::sin(psi), std::cos(theta)};
  RealTensor3 p;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) p(a, b) = (a == b ? 1.0 : 0.0) - u[a] * u[b];
  return p;
}

struct SpectralQuadrature {
  unsigned theta_order = 8;
  double kappa_step_waists = 0.5;  // polar panel width in units of 1/w (resolves the pump spectrum)
  unsigned psi_nodes = 64;
};

/// Signal photon flux into the forward half-space carried by the induced-coherence
/// term, per unit of the engine's rate normalization:
///   int d^2kappa/(4 pi^2) (k_z / k_S) F(kappa),   F = sum_d sum_j Im[k_I^2 alpha (d.A)_j conj((d.A~)_j)]
/// with A = g_S M S^. The cos(theta) flux factor cancels the band-edge 1/k_z
/// singularity, leaving the smooth measure sin(theta) dtheta dpsi / 4.
inline double forward_flux_ic(const SpdcScenario& s, const SpectralQuadrature& sq = {}) {
  s.validate();
  if (s.particles.size() != 1) throw DomainError("forward_flux_ic needs exactly one particle");
  const auto& p = s.particles.front();
  const WaveNumber ks = s.k_signal(), ki = s.k_idler();
  const SheetSpectrum spec(s.pump, p, ki, s.source_quadrature);
  const cplx coupling = ki.value() * ki.value() * scatterer::polarizability(p, ki).value;
  const RealTensor3 m = coupling_matrix(s.chi, s.pump);
  const double t0 = s.filter.theta_min_rad(), t1 = s.filter.theta_max_rad();
  if (!(t1 > t0)) return 0.0;
  const auto n_pan =
      static_cast<unsigned>(std::ceil((t1 - t0) * ks.value() * s.pump.waist_um / sq.kappa_step_waists)) + 1u;
  const auto th = quad::panels(t0, t1, n_pan, sq.theta_order);
  const auto ps = quad::periodic(sq.psi_nodes);
  std::vector<double> partial(th.size());
  parallel_for(th.size(), [&](std::size_t it) {
    const double theta = th[it].x;
    const auto rad = spec.radial(ks.value() * std::sin(theta));
    double acc = 0.0;
    for (const auto& pn : ps) {
      auto [sd, sc] = SheetSpectrum::tensors(rad, pn.x);
      const RealTensor3 proj = transverse_projector(theta, pn.x) * m;
      ComplexTensor3 pc;
      for (std::size_t i = 0; i < 9; ++i) pc.m[i] = proj.m[i];
      const ComplexTensor3 a = pc * sd, at = pc * sc;
      for (const auto& d : s.detector_polarizations) {
        const auto x = engine::project_rows(d, a), y = engine::project_rows(d, at);
        for (std::size_t j = 0; j < 3; ++j) acc += pn.w * (coupling * x[j] * std::conj(y[j])).imag();
      }
    }
    partial[it] = acc * std::sin(theta) * th[it].w / 4.0;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total / (4.0 * pi * pi);
}

/// Independent evaluation of R_IC at image-plane points by inverse transform of
/// A(kappa) = g_S(kappa) M S^(kappa). Used to cross-check the real-space path.
inline std::vector<double> rate_ic_spectral(const SpdcScenario& s, const SpectralQuadrature& sq = {}) {
  s.validate();
  if (s.particles.size() != 1) throw DomainError("rate_ic_spectral needs exactly one particle");
  const auto& p = s.particles.front();
  const WaveNumber ks = s.k_signal(), ki = s.k_idler();
  const SheetSpectrum spec(s.pump, p, ki, s.source_quadrature);
  const cplx coupling = ki.value() * ki.value() * scatterer::polarizability(p, ki).value;
  const RealTensor3 m = coupling_matrix(s.chi, s.pump);
  const double t0 = s.filter.theta_min_rad(), t1 = s.filter.theta_max_rad();
  std::vector<double> out(s.detector_points.size(), 0.0);
  if (!(t1 > t0)) return out;
  const auto n_pan =
      static_cast<unsigned>(std::ceil((t1 - t0) * ks.value() * s.pump.waist_um / sq.kappa_step_waists)) + 1u;
  const auto th = quad::panels(t0, t1, n_pan, sq.theta_order);
  const auto ps = quad::periodic(sq.psi_nodes);

  struct KNode {
    double kx, ky;
    ComplexTensor3 a, at;
  };
  std::vector<std::vector<KNode>> rows(th.size());
  parallel_for(th.size(), [&](std::size_t it) {
    const double theta = th[it].x;
    const double kap = ks.value() * std::sin(theta);
    const auto rad = spec.radial(kap);
    // d^2kappa/(4 pi^2) g_S = (i/2) k_S sin(theta) dtheta dpsi (I - khat khat) / (4 pi^2)
    const cplx wt = (I / 2.0) * ks.value() * std::sin(theta) * th[it].w / (4.0 * pi * pi);
    for (const auto& pn : ps) {
      auto [sd, sc] = SheetSpectrum::tensors(rad, pn.x);
      const RealTensor3 proj = transverse_projector(theta, pn.x) * m;
      ComplexTensor3 pc;
      for (std::size_t i = 0; i < 9; ++i) pc.m[i] = proj.m[i];
      rows[it].push_back({kap * std::cos(pn.x), kap * std::sin(pn.x), (wt * pn.w) * (pc * sd), (wt * pn.w) * (pc * sc)});
    }
  });
  parallel_for(out.size(), [&](std::size_t i) {
    const Point3& r = s.detector_points[i];
    ComplexTensor3 a, at;
    for (const auto& row : rows)
      for (const auto& n : row) {
        const cplx ph = std::exp(I * (n.kx * (r.x - p.center.x) + n.ky * (r.y - p.center.y)));
        a += ph * n.a;
        at += ph * n.at;
      }
    double acc = 0.0;
    for (const auto& d : s.detector_polarizations) {
      const auto x = engine::project_rows(d, a), y = engine::project_rows(d, at);
      for (std::size_t j = 0; j < 3; ++j) acc += (coupling * x[j] * std::conj(y[j])).imag();
    }
    out[i] = acc;
  });
  return out;
}

}  // namespace qiup::spectral
