#pragma once

// Absolute signal-photon rate induced by one particle above a thin GaP sheet.
//
//   dN/domega_S = 8 omega_S^3 omega_I^2 / (pi c^5) * Phi,
//   Phi = int d^2kappa/(4 pi^2) (k_z/k_S) F(kappa)   (forward photon flux)
//
// with Gamma = chi_sheet E0 in SI units. The prefactor collects the field
// normalization of the fluctuation-dissipation idler source, the factor 2 in the
// positive-frequency nonlinear polarization 2 eps0 Gamma E_I^(-), and the
// conversion of intensity 2 eps0 c |E|^2 to photon flux.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qiup/spectral.hpp"

namespace qiup::rates {

namespace si {
inline constexpr double c = 299792458.0;
inline constexpr double eps0 = 8.8541878128e-12;
}  // namespace si

/// Complex permittivity sampled at increasing wavelengths (um), linear interpolation.
class DispersionTable {
 public:
  DispersionTable() = default;
  DispersionTable(std::vector<double> lambda_um, std::vector<cplx> eps) : lambda_(std::move(lambda_um)), eps_(std::move(eps)) {
    if (lambda_.size() != eps_.size() || lambda_.empty()) throw DomainError("dispersion table: mismatched or empty columns");
    for (std::size_t i = 1; i < lambda_.size(); ++i)
      if (!(lambda_[i] > lambda_[i - 1])) throw DomainError("dispersion table: wavelengths must increase");
  }

  /// CSV with columns lambda_um, eps_real, eps_imag; '#' lines are comments.
  static DispersionTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("dispersion table: cannot open " + path);
    std::vector<double> l;
    std::vector<cplx> e;
    std::string line;
    int lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      if (header && line.find_first_of("0123456789") != 0) {
        header = false;
        continue;
      }
      header = false;
      std::stringstream ss(line);
      std::string a, b, c;
      if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
        throw DomainError(path + ":" + std::to_string(lineno) + ": expected lambda_um,eps_real,eps_imag");
      try {
        l.push_back(std::stod(a));
        e.emplace_back(std::stod(b), std::stod(c));
      } catch (const std::exception&) {
        throw DomainError(path + ":" + std::to_string(lineno) + ": non-numeric field");
      }
    }
    return {std::move(l), std::move(e)};
  }

  [[nodiscard]] cplx at(double lambda_um) const {
    if (lambda_.empty() || lambda_um < lambda_.front() - 1e-12 || lambda_um > lambda_.back() + 1e-12)
      throw DomainError("no dispersion data at lambda = " + std::to_string(lambda_um) + " um");
    if (lambda_.size() == 1) return eps_.front();
    std::size_t i = 1;
    while (i + 1 < lambda_.size() && lambda_[i] < lambda_um) ++i;
    const double t = std::clamp((lambda_um - lambda_[i - 1]) / (lambda_[i] - lambda_[i - 1]), 0.0, 1.0);
    return eps_[i - 1] + t * (eps_[i] - eps_[i - 1]);
  }
  [[nodiscard]] double min_um() const { return lambda_.front(); }
  [[nodiscard]] double max_um() const { return lambda_.back(); }

 private:
  std::vector<double> lambda_;
  std::vector<cplx> eps_;
};

/// GaP sheet scenario. Every conversion constant is a named field.
struct AbsoluteScenario {
  std::string slab_material = "GaP";
  double thickness_nm = 10.0;
  double d14_pm_per_v = 70.6;  // GaP, Shoji et al., JOSA B 14, 2268 (1997)
  double chi_per_d = 2.0;      // chi_abc = 2 d_abc
  double power_mw = 100.0;
  double waist_um = 5.0;
  double lambda_p_nm = 500.0;
  double band_lo_nm = 577.0;
  double band_hi_nm = 591.0;
  double radius_nm = 5.0;
  double gap_nm = 5.0;  // surface to the bottom of the particle
  Vec3 pump_polarization{1.0, 0.0, 0.0};
  DispersionTable permittivity;
  unsigned band_nodes = 6;

  void validate() const {
    if (!(thickness_nm > 0.0)) throw DomainError("slab thickness must be positive");
    if (!(power_mw >= 0.0)) throw DomainError("pump power must be nonnegative");
    if (!(waist_um > 0.0)) throw DomainError("pump waist must be positive");
    if (!(band_hi_nm > band_lo_nm)) throw DomainError("detection band must be nonempty");
    if (!(band_lo_nm > lambda_p_nm)) throw DomainError("signal band must lie above the pump wavelength");
    if (!(radius_nm > 0.0) || !(gap_nm >= 0.0)) throw DomainError("particle radius must be positive and gap nonnegative");
    if (band_nodes == 0) throw DomainError("band quadrature needs at least one node");
  }
  [[nodiscard]] double center_height_um() const { return (gap_nm + radius_nm) * 1e-3; }
};

struct SpectralSample {
  double lambda_s_nm;
  double lambda_i_nm;
  cplx permittivity;
  double omega_weight;    // rad/s
  double dn_domega;       // photons per second per rad/s
  double contribution;    // photons per second
};

struct RateReport {
  double rate_per_s = 0.0;
  double e0_squared = 0.0;      // (V/m)^2
  double chi_sheet_m2_per_v = 0.0;
  std::vector<SpectralSample> samples;
};

/// Signal photons per second induced by the particle, forward half-space, over the band.
inline RateReport total_rate(const AbsoluteScenario& a, const SourceQuadrature& q = SourceQuadrature::paper(),
                             const spectral::SpectralQuadrature& sq = {}) {
  a.validate();
  RateReport rep;
  const double w_m = a.waist_um * 1e-6;
  rep.e0_squared = a.power_mw * 1e-3 / (si::eps0 * si::c * pi * w_m * w_m);
  rep.chi_sheet_m2_per_v = a.chi_per_d * a.d14_pm_per_v * 1e-12 * a.thickness_nm * 1e-9;
  const double gamma2 = rep.chi_sheet_m2_per_v * rep.chi_sheet_m2_per_v * rep.e0_squared;

  const double om_lo = 2.0 * pi * si::c / (a.band_hi_nm * 1e-9);
  const double om_hi = 2.0 * pi * si::c / (a.band_lo_nm * 1e-9);
  const auto& rule = quad::gauss_legendre(a.band_nodes);
  rep.samples.resize(rule.nodes.size());
  parallel_for(rule.nodes.size(), [&](std::size_t i) {
    const double om_s = 0.5 * (om_lo + om_hi) + 0.5 * (om_hi - om_lo) * rule.nodes[i];
    const double lam_s_nm = 2.0 * pi * si::c / om_s * 1e9;
    const double lam_i_nm = SpdcScenario::idler_from(a.lambda_p_nm, lam_s_nm);
    const double om_i = 2.0 * pi * si::c / (lam_i_nm * 1e-9);

    SpdcScenario s;
    s.pump.wavelength_nm = a.lambda_p_nm;
    s.pump.waist_um = a.waist_um;
    s.pump.power_mw = a.power_mw;
    s.pump.polarization = a.pump_polarization;
    s.chi = ChiTensor::zincblende(1.0);
    s.lambda_s_nm = lam_s_nm;
    s.lambda_i_nm = lam_i_nm;
    NanoParticle p;
    p.center = {0.0, 0.0, a.center_height_um()};
    p.radius_nm = a.radius_nm;
    p.permittivity = a.permittivity.at(lam_i_nm * 1e-3);
    s.particles = {p};
    s.source_quadrature = q;

    // engine flux is in um^3 for unit Gamma
    const double flux_m3 = spectral::forward_flux_ic(s, sq) * 1e-18;
    const double pref = 8.0 * om_s * om_s * om_s * om_i * om_i / (pi * std::pow(si::c, 5));
    const double dn = pref * flux_m3 * gamma2;
    const double wt = 0.5 * (om_hi - om_lo) * rule.weights[i];
    rep.samples[i] = {lam_s_nm, lam_i_nm, p.permittivity, wt, dn, wt * dn};
  });
  for (const auto& smp : rep.samples) rep.rate_per_s += smp.contribution;
  return rep;
}

}  // namespace qiup::rates
