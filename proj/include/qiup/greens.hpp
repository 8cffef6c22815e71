#pragma once

// Free-space electric dyadic Green's function G = (I + grad grad / k^2) e^{ikR} / (4 pi R).
// With this normalization the coincidence limit of Im G is k / (6 pi) per diagonal entry.
// Lengths are micrometers, wavenumbers rad/um.

#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "qiup/quadrature.hpp"
#include "qiup/types.hpp"

namespace qiup::greens {

/// Closed-form G0(r, rp). Rejects coincident points; use g0_imag for the LDOS limit.
inline ComplexTensor3 g0_closed_form(const Point3& r, const Point3& rp, WaveNumber k) {
  const Point3 d = r - rp;
  const double R = d.norm();
  if (!(R > 0.0)) throw DomainError("g0_closed_form: coincident points; the real part diverges");
  const double x = k.value() * R;
  const cplx phase = std::exp(I * x) / (4.0 * pi * R);
  const cplx a = phase * (1.0 + I / x - 1.0 / (x * x));
  const cplx b = phase * (-1.0 - 3.0 * I / x + 3.0 / (x * x));
  const double u[3] = {d.x / R, d.y / R, d.z / R};
  ComplexTensor3 g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = b * u[i] * u[j] + (i == j ? a : cplx{});
  return g;
}

/// Im G0(r, rp) = (k / 4 pi) [ (2 j0 - j2) / 3 I + j2 Rhat Rhat ], regular at r = rp.
inline RealTensor3 g0_imag(const Point3& r, const Point3& rp, WaveNumber k) {
  const double kv = k.value();
  const Point3 d = r - rp;
  const double R = d.norm();
  RealTensor3 g;
  if (R == 0.0) {
    const double diag = kv / (6.0 * pi);
    g(0, 0) = g(1, 1) = g(2, 2) = diag;
    return g;
  }
  const double x = kv * R;
  double j0, j2;
  if (x < 1e-3) {
    const double x2 = x * x;
    j0 = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    j2 = x2 / 15.0 - x2 * x2 / 210.0;
  } else {
    j0 = std::sph_bessel(0u, x);
    j2 = std::sph_bessel(2u, x);
  }
  const double pre = kv / (4.0 * pi);
  const double a = pre * (2.0 * j0 - j2) / 3.0;
  const double b = pre * j2;
  const double u[3] = {d.x / R, d.y / R, d.z / R};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = b * u[i] * u[j] + (i == j ? a : 0.0);
  return g;
}

namespace detail {

// Accumulates one transverse-wavenumber shell of the Weyl integral after the
// azimuthal integral has been done analytically (Bessel functions of kappa*rho).
// `w` carries the prefactor i/(8 pi^2), the Jacobian kappa dkappa / k_z and the
// longitudinal phase; `kz` is the (possibly imaginary) longitudinal wavenumber
// with the sign of the propagation direction already applied.
struct ShellAccumulator {
  double k;
  double rho;
  double c1, s1, c2, s2;
  ComplexTensor3 acc{};

  void add(double kappa, cplx kz, cplx w) {
    const double u = kappa * rho;
    const double J0 = boost::math::cyl_bessel_j(0, u);
    const double J1 = boost::math::cyl_bessel_j(1, u);
    const double J2 = u > 1e-12 ? 2.0 * J1 / u - J0 : u * u / 8.0;
    const double t2 = kappa * kappa / (k * k);
    const cplx xx = 2.0 * pi * J0 - t2 * pi * (J0 - J2 * c2);
    const cplx yy = 2.0 * pi * J0 - t2 * pi * (J0 + J2 * c2);
    const cplx xy = t2 * pi * J2 * s2;
    const cplx zz = t2 * 2.0 * pi * J0;
    const cplx rad = -(kappa * kz / (k * k)) * 2.0 * pi * I * J1;
    acc(0, 0) += w * xx;
    acc(1, 1) += w * yy;
    acc(0, 1) += w * xy;
    acc(1, 0) += w * xy;
    acc(2, 2) += w * zz;
    acc(0, 2) += w * rad * c1;
    acc(2, 0) += w * rad * c1;
    acc(1, 2) += w * rad * s1;
    acc(2, 1) += w * rad * s1;
  }
};

inline ShellAccumulator make_accumulator(const Point3& d, double k) {
  const double rho = std::hypot(d.x, d.y);
  const double phi = rho > 0.0 ? std::atan2(d.y, d.x) : 0.0;
  return {k, rho, std::cos(phi), std::sin(phi), std::cos(2.0 * phi), std::sin(2.0 * phi)};
}

inline unsigned oscillation_panels(double phase_span) {
  return 2u + static_cast<unsigned>(std::ceil(phase_span / 6.0));
}

}  // namespace detail

/// Propagating part of the Weyl expansion of G0(r, rp) restricted to polar angles in
/// the filter band, by 1D quadrature in theta (azimuth done analytically). The
/// propagation direction follows sign(r.z - rp.z), with z-separation 0 taken as forward.
inline ComplexTensor3 weyl_propagating(const Point3& r, const Point3& rp, WaveNumber k,
                                       const AngularFilter& filter = {}) {
  filter.validate();
  if (filter.empty()) return ComplexTensor3::zero();
  const Point3 d = r - rp;
  const double kv = k.value();
  const double s = d.z >= 0.0 ? 1.0 : -1.0;
  const double zabs = std::abs(d.z);
  auto acc = detail::make_accumulator(d, kv);
  const double t0 = filter.theta_min_rad(), t1 = filter.theta_max_rad();
  const unsigned np = detail::oscillation_panels(kv * (acc.rho + zabs) * (t1 - t0));
  for (const auto& n : quad::panels(t0, t1, np, 16)) {
    const double st = std::sin(n.x), ct = std::cos(n.x);
    const cplx w = (I / (8.0 * pi * pi)) * kv * st * std::exp(I * kv * ct * zabs) * n.w;
    acc.add(kv * st, s * kv * ct, w);
  }
  return acc.acc;
}

/// Evanescent part of the Weyl expansion (transverse wavenumber above k). Requires
/// r.z != rp.z so the spectrum decays.
inline ComplexTensor3 weyl_evanescent(const Point3& r, const Point3& rp, WaveNumber k) {
  const Point3 d = r - rp;
  const double zabs = std::abs(d.z);
  if (!(zabs > 0.0)) throw DomainError("weyl_evanescent: needs a nonzero z separation to converge");
  const double kv = k.value();
  const double s = d.z >= 0.0 ? 1.0 : -1.0;
  auto acc = detail::make_accumulator(d, kv);
  // e^{-k sinh(t) |z|} cosh^3(t) below 1e-18 of its peak
  const double tau_max = std::asinh(48.0 / (kv * zabs));
  const unsigned np = detail::oscillation_panels(kv * std::cosh(tau_max) * acc.rho) + 8u;
  for (const auto& n : quad::panels(0.0, tau_max, np, 16)) {
    const double ch = std::cosh(n.x), sh = std::sinh(n.x);
    const cplx w = (kv * ch / (8.0 * pi * pi)) * std::exp(-kv * sh * zabs) * n.w;
    acc.add(kv * ch, s * I * kv * sh, w);
  }
  return acc.acc;
}

struct ImagingQuadrature {
  unsigned theta_nodes = 256;
  unsigned phi_nodes = 256;
  double tolerance = 1e-6;
  unsigned max_doublings = 4;
};

namespace detail {

inline ComplexTensor3 weyl_polar_grid(const Point3& d, double kv, double t0, double t1, unsigned nt,
                                      unsigned nphi) {
  const double s = d.z >= 0.0 ? 1.0 : -1.0;
  const double zabs = std::abs(d.z);
  const auto& rule = quad::gauss_legendre(nt);
  const double h = 0.5 * (t1 - t0), c = 0.5 * (t0 + t1);
  const auto az = quad::periodic(nphi);
  ComplexTensor3 g;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double th = c + h * rule.nodes[i];
    const double st = std::sin(th), ct = std::cos(th);
    const cplx pre = (I * kv / (8.0 * pi * pi)) * st * h * rule.weights[i];
    for (const auto& a : az) {
      const double u[3] = {st * std::cos(a.x), st * std::sin(a.x), s * ct};
      const cplx w = pre * a.w * std::exp(I * kv * (u[0] * d.x + u[1] * d.y + ct * zabs));
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) g(p, q) += w * ((p == q ? 1.0 : 0.0) - u[p] * u[q]);
    }
  }
  return g;
}

}  // namespace detail

/// Perfect-lens signal propagator: plane-wave expansion of G0 keeping only the
/// propagating directions with theta_min <= theta <= theta_max, evaluated on a
/// Gauss-Legendre (theta) x trapezoid (azimuth) grid. The grid is doubled until two
/// successive levels agree to the tolerance; otherwise ConvergenceError is thrown.
inline ComplexTensor3 g_signal_imaging(const Point3& r_img, const Point3& rho_src, WaveNumber k_s,
                                       const AngularFilter& filter, const ImagingQuadrature& q = {}) {
  filter.validate();
  if (rho_src.z != 0.0) throw DomainError("g_signal_imaging: source point must lie in the plane z = 0");
  if (r_img.z < 0.0) throw DomainError("g_signal_imaging: image point must lie in the forward half-space");
  if (filter.empty()) return ComplexTensor3::zero();
  const Point3 d = r_img - rho_src;
  const double t0 = filter.theta_min_rad(), t1 = filter.theta_max_rad();
  unsigned nt = q.theta_nodes, nphi = q.phi_nodes;
  auto coarse = detail::weyl_polar_grid(d, k_s.value(), t0, t1, std::max(2u, nt / 2), std::max(4u, nphi / 2));
  double change = 0.0;
  for (unsigned level = 0; level <= q.max_doublings; ++level) {
    auto fine = detail::weyl_polar_grid(d, k_s.value(), t0, t1, nt, nphi);
    const double scale = std::max(frobenius(fine), 1e-300);
    change = frobenius(fine - coarse) / scale;
    if (change <= q.tolerance) return fine;
    coarse = std::move(fine);
    nt *= 2;
    nphi *= 2;
  }
  throw ConvergenceError("g_signal_imaging: angular-spectrum quadrature did not converge", change);
}

/// In-plane forward imaging kernel tabulated against in-plane separation.
///
/// For source and image points both in z = 0 the band-limited Weyl integral reduces
/// to four real radial functions:
///   G_xx = i/(8 pi^2) (T0 - T1 + T2 cos 2phi),  G_yy = i/(8 pi^2) (T0 - T1 - T2 cos 2phi),
///   G_xy = i/(8 pi^2) T2 sin 2phi,              G_zz = i/(8 pi^2) 2 T1,
///   G_xz = G_zx = T3 cos phi / (8 pi^2),         G_yz = G_zy = T3 sin phi / (8 pi^2).
/// The tables are sampled on a uniform grid and read back with 4-point Lagrange
/// interpolation; the grid pitch defaults to lambda / 128.
class PlanarImagingKernel {
public:
  PlanarImagingKernel(WaveNumber k, AngularFilter filter, double max_separation_um,
                      unsigned samples_per_wavelength = 128)
      : k_(k.value()), filter_(filter) {
    filter.validate();
    step_ = k.wavelength_um() / samples_per_wavelength;
    const auto n = static_cast<std::size_t>(std::ceil(max_separation_um / step_)) + 4;
    table_.resize(n + 3);
    if (!filter.empty()) {
      for (std::size_t i = 0; i < table_.size(); ++i) table_[i] = radial(static_cast<double>(i) - 2.0);
    }
    max_r_ = step_ * static_cast<double>(n - 2);
  }

  [[nodiscard]] double max_separation() const noexcept { return max_r_; }
  [[nodiscard]] const AngularFilter& filter() const noexcept { return filter_; }
  [[nodiscard]] double wavenumber() const noexcept { return k_; }

  /// G(r_img, rho) for in-plane displacement (dx, dy) = r_img - rho.
  [[nodiscard]] ComplexTensor3 operator()(double dx, double dy) const {
    ComplexTensor3 g;
    if (filter_.empty()) return g;
    const double R = std::hypot(dx, dy);
    if (R > max_r_) throw DomainError("PlanarImagingKernel: separation beyond tabulated range");
    const auto t = interpolate(R);
    double c1 = 1.0, s1 = 0.0;
    if (R > 0.0) {
      c1 = dx / R;
      s1 = dy / R;
    }
    const double c2 = c1 * c1 - s1 * s1, s2 = 2.0 * s1 * c1;
    constexpr double norm = 1.0 / (8.0 * pi * pi);
    const cplx in = I * norm;
    g(0, 0) = in * (t[0] - t[1] + t[2] * c2);
    g(1, 1) = in * (t[0] - t[1] - t[2] * c2);
    g(0, 1) = g(1, 0) = in * (t[2] * s2);
    g(2, 2) = in * (2.0 * t[1]);
    g(0, 2) = g(2, 0) = norm * t[3] * c1;
    g(1, 2) = g(2, 1) = norm * t[3] * s1;
    return g;
  }

private:
  using Row = std::array<double, 4>;

  // Signed sample index i -> R = i * step; odd-order tables flip sign for R < 0.
  Row radial(double index) const {
    const double R = index * step_;
    const double Ra = std::abs(R);
    const double t0 = filter_.theta_min_rad(), t1 = filter_.theta_max_rad();
    Row out{};
    const unsigned np = detail::oscillation_panels(k_ * Ra * (t1 - t0));
    for (const auto& n : quad::panels(t0, t1, np, 16)) {
      const double st = std::sin(n.x), ct = std::cos(n.x);
      const double u = k_ * Ra * st;
      const double J0 = boost::math::cyl_bessel_j(0, u);
      const double J1 = boost::math::cyl_bessel_j(1, u);
      const double J2 = u > 1e-12 ? 2.0 * J1 / u - J0 : u * u / 8.0;
      const double w = k_ * st * n.w;
      out[0] += w * 2.0 * pi * J0;
      out[1] += w * st * st * pi * J0;
      out[2] += w * st * st * pi * J2;
      out[3] += w * st * ct * 2.0 * pi * J1;
    }
    if (R < 0.0) out[3] = -out[3];
    return out;
  }

  Row interpolate(double R) const {
    const double s = R / step_;
    const auto i = static_cast<std::size_t>(s);
    const double f = s - static_cast<double>(i);
    // samples at i-1, i, i+1, i+2 live at table_[i+1 .. i+4]
    const double w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
    const double w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    const double w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
    const double w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
    Row out{};
    for (std::size_t c = 0; c < 4; ++c)
      out[c] = w0 * table_[i + 1][c] + w1 * table_[i + 2][c] + w2 * table_[i + 3][c] + w3 * table_[i + 4][c];
    return out;
  }

  double k_;
  AngularFilter filter_;
  double step_ = 0.0;
  double max_r_ = 0.0;
  std::vector<Row> table_;
};

}  // namespace qiup::greens
