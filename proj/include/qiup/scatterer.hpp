#pragma once

// Point-dipole model of a small absorptive sphere near the source plane.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qiup/greens.hpp"
#include "qiup/types.hpp"

namespace qiup {

/// Spherical particle. Center in micrometers, radius in nanometers.
struct NanoParticle {
  Point3 center;
  double radius_nm = 5.0;
  cplx permittivity{1.0, 0.0};

  void validate() const {
    if (!center.finite()) throw DomainError("particle center must be finite");
    if (!(radius_nm > 0.0)) throw DomainError("particle radius must be positive");
    if (permittivity.imag() < 0.0) throw DomainError("particle permittivity must be passive (Im eps >= 0)");
    if (!std::isfinite(permittivity.real()) || !std::isfinite(permittivity.imag()))
      throw DomainError("particle permittivity must be finite");
  }
  [[nodiscard]] double radius_um() const { return radius_nm * 1e-3; }
};

/// DIPA at 3.37 um.
inline constexpr cplx dipa_permittivity_3370nm{1.9763, 0.39124};

/// Complex polarizability volume (um^3) at a given wavelength.
struct Polarizability {
  cplx value;
  double wavelength_um;
};

namespace scatterer {

/// Clausius-Mossotti sphere with radiative correction:
///   alpha0 = 4 pi a^3 (eps - 1) / (eps + 2),  alpha = alpha0 / (1 - i k^3 alpha0 / (6 pi)).
inline Polarizability polarizability(const NanoParticle& p, WaveNumber k) {
  p.validate();
  const cplx denom = p.permittivity + 2.0;
  if (std::abs(denom) < 1e-6)
    throw DomainError("polarizability: permittivity within 1e-6 of the eps = -2 resonance pole (|eps + 2| = " +
                      std::to_string(std::abs(denom)) + ")");
  const double a = p.radius_um();
  const cplx alpha0 = 4.0 * pi * a * a * a * (p.permittivity - 1.0) / denom;
  const double k3 = std::pow(k.value(), 3);
  return {alpha0 / (1.0 - I * k3 * alpha0 / (6.0 * pi)), k.wavelength_um()};
}

/// Scattered GF of non-interacting point dipoles:
///   G_sca(r, rp) = sum_p k^2 alpha_p G0(r, c_p) G0(c_p, rp).
inline ComplexTensor3 g_scattered(const Point3& r, const Point3& rp, WaveNumber k,
                                  std::span<const NanoParticle> particles) {
  ComplexTensor3 total;
  const double k2 = k.value() * k.value();
  for (const auto& p : particles) {
    if (r == p.center || rp == p.center)
      throw DomainError("g_scattered: evaluation point coincides with a particle center");
    const cplx alpha = polarizability(p, k).value;
    total += (k2 * alpha) * (greens::g0_closed_form(r, p.center, k) * greens::g0_closed_form(p.center, rp, k));
  }
  return total;
}

/// Partial LDOS Im[G_xx(r, r)] of free space plus particles, in units of the
/// free-space value k / (6 pi).
inline double ldos_ratio(const Point3& r, WaveNumber k, std::span<const NanoParticle> particles) {
  const double free = k.value() / (6.0 * pi);
  if (particles.empty()) return 1.0;
  return (free + g_scattered(r, r, k, particles)(0, 0).imag()) / free;
}

/// Regular grid on the source plane z = 0.
struct PlaneGrid {
  double x_min = -0.1, x_max = 0.1;
  std::size_t nx = 41;
  double y_min = -0.1, y_max = 0.1;
  std::size_t ny = 41;

  [[nodiscard]] double x(std::size_t i) const {
    return nx == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
  }
  [[nodiscard]] double y(std::size_t j) const {
    return ny == 1 ? y_min : y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(ny - 1);
  }
};

struct ScalarMap {
  PlaneGrid grid;
  std::vector<double> values;  // row-major, x fastest
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[j * grid.nx + i]; }
};

/// Normalized partial LDOS over a source-plane grid for one particle.
inline ScalarMap ldos_map(const PlaneGrid& grid, const NanoParticle& p, WaveNumber k) {
  ScalarMap out{grid, std::vector<double>(grid.nx * grid.ny)};
  const std::span<const NanoParticle> one(&p, 1);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) out.values[j * grid.nx + i] = ldos_ratio({grid.x(i), grid.y(j), 0.0}, k, one);
  return out;
}

/// Normalized partial LDOS along a radial line in the source plane, measured from
/// the particle's projection in direction (cos phi, sin phi).
inline std::vector<std::pair<double, double>> ldos_radial(std::span<const double> rho_um, const NanoParticle& p,
                                                          WaveNumber k, double phi_rad = 0.0) {
  std::vector<std::pair<double, double>> out;
  out.reserve(rho_um.size());
  const std::span<const NanoParticle> one(&p, 1);
  for (double rho : rho_um) {
    const Point3 r{p.center.x + rho * std::cos(phi_rad), p.center.y + rho * std::sin(phi_rad), 0.0};
    out.emplace_back(rho, ldos_ratio(r, k, one));
  }
  return out;
}

enum class SweepAxis { Distance, Absorption };

/// Peak normalized LDOS (source point directly below the particle) while varying
/// either the center height z (nm) or Im(eps).
inline std::vector<std::pair<double, double>> ldos_peak_sweep(SweepAxis axis, std::span<const double> values,
                                                              const NanoParticle& templ, WaveNumber k) {
  std::vector<std::pair<double, double>> out;
  out.reserve(values.size());
  for (double v : values) {
    NanoParticle p = templ;
    if (axis == SweepAxis::Distance) {
      if (!(v > 0.0)) throw DomainError("ldos_peak_sweep: distances must be positive");
      p.center.z = v * 1e-3;
    } else {
      if (v < 0.0) throw DomainError("ldos_peak_sweep: absorption must be nonnegative");
      p.permittivity = {p.permittivity.real(), v};
    }
    const std::span<const NanoParticle> one(&p, 1);
    out.emplace_back(v, ldos_ratio({p.center.x, p.center.y, 0.0}, k, one));
  }
  return out;
}

}  // namespace scatterer
}  // namespace qiup
