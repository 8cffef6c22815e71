#pragma once

// Signal count rate of a planar chi(2) sheet at z = 0:
//
//   R(r_S) = sum_d sum_{sigma,sigma'} d_sigma d_sigma' sum_{alpha beta alpha' beta'}
//            int int Gamma_{alpha beta}(rho) conj(Gamma_{alpha' beta'}(rho'))
//            Im[G_{beta beta'}(rho, rho', w_I)] G_{sigma alpha}(r_S, rho, w_S) conj(G_{sigma' alpha'}(r_S, rho', w_S))
//
// with Gamma_{ab} = sum_c chi_{abc} E_{P,c}. The idler GF splits into free space
// (background R0) and the particle term (induced coherence R_IC). All rates here are
// in arbitrary units: lengths in um, pump amplitude relative.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qiup/greens.hpp"
#include "qiup/parallel.hpp"
#include "qiup/quadrature.hpp"
#include "qiup/scatterer.hpp"
#include "qiup/types.hpp"

namespace qiup {

using Vec3 = std::array<double, 3>;

enum class PumpProfile { Gaussian, PlaneWave };

/// Monochromatic pump at normal incidence. The Gaussian envelope is
/// amplitude * exp(-|rho - c|^2 / w^2).
struct PumpField {
  double wavelength_nm = 500.0;
  double waist_um = 5.0;
  double power_mw = 100.0;  // only read by the absolute rate estimate
  Vec3 polarization{1.0, 0.0, 0.0};
  PumpProfile profile = PumpProfile::Gaussian;
  double amplitude = 1.0;
  double center_x_um = 0.0;
  double center_y_um = 0.0;

  void validate() const {
    if (!(wavelength_nm > 0.0)) throw DomainError("pump wavelength must be positive");
    if (profile == PumpProfile::Gaussian && !(waist_um > 0.0)) throw DomainError("pump waist must be positive");
    const double n = std::sqrt(polarization[0] * polarization[0] + polarization[1] * polarization[1] +
                               polarization[2] * polarization[2]);
    if (std::abs(n - 1.0) > 1e-9) throw DomainError("pump polarization must be a unit vector");
  }

  [[nodiscard]] double envelope(double x, double y) const {
    if (profile == PumpProfile::PlaneWave) return amplitude;
    const double dx = x - center_x_um, dy = y - center_y_um;
    return amplitude * std::exp(-(dx * dx + dy * dy) / (waist_um * waist_um));
  }

  /// In-plane Fourier transform int E(rho) e^{-i p.rho} d^2rho of the Gaussian envelope.
  [[nodiscard]] cplx spectrum(double px, double py) const {
    const double w2 = waist_um * waist_um;
    return amplitude * pi * w2 * std::exp(-(px * px + py * py) * w2 / 4.0) *
           std::exp(-I * (px * center_x_um + py * center_y_um));
  }
};

/// Second-order susceptibility chi_{abc} in relative units.
struct ChiTensor {
  std::array<double, 27> c{};

  double& operator()(int a, int b, int g) { return c[static_cast<std::size_t>(9 * a + 3 * b + g)]; }
  [[nodiscard]] double operator()(int a, int b, int g) const { return c[static_cast<std::size_t>(9 * a + 3 * b + g)]; }

  static ChiTensor xxx(double v = 1.0) {
    ChiTensor t;
    t(0, 0, 0) = v;
    return t;
  }
  /// Zinc-blende (43m) crystal in its cube axes: nonzero only for all-distinct indices.
  static ChiTensor zincblende(double v = 1.0) {
    ChiTensor t;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int g = 0; g < 3; ++g)
          if (a != b && b != g && a != g) t(a, b, g) = v;
    return t;
  }
  void validate() const {
    for (double v : c)
      if (v != 0.0) return;
    throw DomainError("chi tensor needs at least one nonzero component");
  }
};

/// M_{ab} = sum_c chi_{abc} e_c, so that Gamma(rho) = M * envelope(rho).
inline RealTensor3 coupling_matrix(const ChiTensor& chi, const PumpField& pump) {
  RealTensor3 m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int g = 0; g < 3; ++g) m(a, b) += chi(a, b, g) * pump.polarization[static_cast<std::size_t>(g)];
  return m;
}

/// Gamma_{ab}(rho) = sum_c chi_{abc} E_{P,c}(rho) on the source plane.
inline ComplexTensor3 gamma_field(const PumpField& pump, const ChiTensor& chi, const Point3& rho) {
  if (rho.z != 0.0) throw DomainError("gamma_field: point must lie in the source plane z = 0");
  const RealTensor3 m = coupling_matrix(chi, pump);
  const double e = pump.envelope(rho.x, rho.y);
  ComplexTensor3 g;
  for (std::size_t i = 0; i < 9; ++i) g.m[i] = m.m[i] * e;
  return g;
}

/// Maximum background signal emission angle arcsin(lambda_S / lambda_I), degrees.
inline double emission_angle_relation(double degeneracy) {
  if (!(degeneracy > 0.0)) throw DomainError("degeneracy factor must be positive");
  if (degeneracy > 1.0)
    throw DomainError("degeneracy factor above 1: signal longer than idler is outside this imaging regime");
  return std::asin(degeneracy) * 180.0 / pi;
}

/// Source-plane rule for the induced-coherence integrals: polar around the particle's
/// projection with radial panels graded from a fraction of the particle height up to
/// `far_panel_um`, then uniform panels out to cutoff_waists * w. Each ring carries
/// enough azimuthal nodes to resolve the signal kernel's angular harmonics (~k_S rho).
struct SourceQuadrature {
  unsigned radial_order = 8;
  double near_start_fraction = 0.25;
  double far_panel_um = 0.25;
  double angular_density = 1.5;
  unsigned angular_margin = 12;
  unsigned min_angular = 16;
  double cutoff_waists = 3.0;
  unsigned kernel_samples_per_wavelength = 128;

  static SourceQuadrature paper() { return {}; }
  static SourceQuadrature fast() { return {6, 0.25, 0.5, 1.2, 8, 12, 3.0, 96}; }
  /// Coarse rule for oracle comparisons (about a thousand nodes for w ~ 1 um).
  static SourceQuadrature oracle() { return {4, 0.25, 0.4, 1.0, 4, 8, 3.0, 64}; }
  [[nodiscard]] SourceQuadrature refined() const {
    SourceQuadrature r = *this;
    r.radial_order = radial_order + radial_order / 2;
    r.far_panel_um = far_panel_um / 1.5;
    r.angular_density = angular_density * 1.5;
    r.angular_margin = angular_margin + 8;
    r.kernel_samples_per_wavelength = kernel_samples_per_wavelength * 2;
    return r;
  }
};

/// Grids for the background: idler directions (solid angle) and the signal
/// transverse-wavenumber plane, the latter scaled by the pump waist.
struct BackgroundQuadrature {
  unsigned idler_theta = 16;
  unsigned idler_phi = 96;
  unsigned kappa_order = 6;
  double kappa_step_waists = 1.4;  // radial panel width in units of 1/w
  double arc_step_waists = 1.4;    // azimuthal spacing in units of 1/w
  double spectrum_cutoff = 36.0;   // skip |p|^2 w^2 / 4 above this

  static BackgroundQuadrature paper() { return {16, 96, 6, 1.4, 1.4, 36.0}; }
  static BackgroundQuadrature fast() { return {12, 64, 4, 2.0, 2.0, 30.0}; }
  [[nodiscard]] BackgroundQuadrature refined() const {
    return {idler_theta * 3 / 2, idler_phi * 3 / 2, kappa_order + 4, kappa_step_waists / 1.5, arc_step_waists / 1.5,
            spectrum_cutoff};
  }
};

/// Full problem statement for one evaluation of the engine.
struct SpdcScenario {
  PumpField pump;
  ChiTensor chi = ChiTensor::xxx();
  double lambda_s_nm = 0.0;
  double lambda_i_nm = 0.0;
  std::vector<NanoParticle> particles;
  std::vector<Point3> detector_points;
  std::size_t grid_nx = 0;
  std::size_t grid_ny = 0;
  std::vector<Vec3> detector_polarizations{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  AngularFilter filter;
  SourceQuadrature source_quadrature;
  BackgroundQuadrature background_quadrature;

  [[nodiscard]] WaveNumber k_signal() const { return WaveNumber::from_wavelength_nm(lambda_s_nm); }
  [[nodiscard]] WaveNumber k_idler() const { return WaveNumber::from_wavelength_nm(lambda_i_nm); }

  /// Relative residual of 1/lambda_P = 1/lambda_S + 1/lambda_I.
  [[nodiscard]] double energy_residual() const {
    const double lhs = 1.0 / pump.wavelength_nm;
    return std::abs(lhs - 1.0 / lambda_s_nm - 1.0 / lambda_i_nm) / lhs;
  }

  void validate() const {
    pump.validate();
    chi.validate();
    filter.validate();
    if (!(lambda_s_nm > 0.0) || !(lambda_i_nm > 0.0)) throw DomainError("signal and idler wavelengths must be positive");
    if (energy_residual() > 1e-9)
      throw DomainError("energy conservation 1/lP = 1/lS + 1/lI violated, relative residual " +
                        std::to_string(energy_residual()));
    for (const auto& p : particles) p.validate();
    for (const auto& r : detector_points)
      if (!r.finite() || r.z != 0.0) throw DomainError("detector points must be finite image-plane points (z = 0)");
    if (detector_polarizations.empty()) throw DomainError("at least one detector polarization is required");
  }

  /// Scenario consistent with energy conservation for a given pump and idler.
  static double signal_from(double lambda_p_nm, double lambda_i_nm) {
    return 1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_i_nm);
  }
  static double idler_from(double lambda_p_nm, double lambda_s_nm) {
    return 1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_s_nm);
  }
  static double pump_from(double lambda_s_nm, double lambda_i_nm) {
    return 1.0 / (1.0 / lambda_s_nm + 1.0 / lambda_i_nm);
  }
};

/// Square image-plane grid of n x n points over [-half, half]^2, x fastest.
inline std::vector<Point3> image_grid(double half_extent_um, std::size_t n) {
  std::vector<Point3> pts;
  pts.reserve(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.0 : -half_extent_um + 2.0 * half_extent_um * static_cast<double>(i) / (n - 1);
      const double u = n == 1 ? 0.0 : -half_extent_um + 2.0 * half_extent_um * static_cast<double>(j) / (n - 1);
      pts.push_back({t, u, 0.0});
    }
  return pts;
}

enum class Axis { X, Y };

/// Points along the x or y axis between `from` and `to` (um), inclusive.
inline std::vector<Point3> axis_cut(Axis axis, double from, double to, std::size_t n) {
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
    pts.push_back(axis == Axis::X ? Point3{t, 0.0, 0.0} : Point3{0.0, t, 0.0});
  }
  return pts;
}

enum class Normalization { Raw, PeakNormalized, FilterSweepNormalized };

inline const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::Raw: return "raw";
    case Normalization::PeakNormalized: return "peak-normalized";
    case Normalization::FilterSweepNormalized: return "fig4-normalized";
  }
  return "raw";
}

/// Rate values over image-plane points. `values` are clamped at zero; `raw` keeps
/// the unclamped numbers (linear operations such as superposition act on `raw`).
struct RateField {
  std::vector<Point3> points;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;
  std::vector<double> raw;
  Normalization normalization = Normalization::Raw;
  double pre_clamp_min = 0.0;
  double max_imag_residual = 0.0;

  static RateField from_raw(std::vector<Point3> pts, std::size_t nx, std::size_t ny, std::vector<double> raw) {
    RateField f;
    f.points = std::move(pts);
    f.nx = nx;
    f.ny = ny;
    f.raw = std::move(raw);
    f.values.resize(f.raw.size());
    f.pre_clamp_min = f.raw.empty() ? 0.0 : *std::min_element(f.raw.begin(), f.raw.end());
    for (std::size_t i = 0; i < f.raw.size(); ++i) f.values[i] = std::max(0.0, f.raw[i]);
    return f;
  }

  [[nodiscard]] double peak() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  }

  [[nodiscard]] RateField scaled(double reference, Normalization tag) const {
    if (!(reference > 0.0)) throw DomainError("normalization reference must be positive");
    RateField f = *this;
    for (auto& v : f.values) v /= reference;
    for (auto& v : f.raw) v /= reference;
    f.pre_clamp_min /= reference;
    f.normalization = tag;
    return f;
  }

  friend RateField operator+(const RateField& a, const RateField& b) {
    if (a.raw.size() != b.raw.size()) throw DomainError("rate fields on different point sets");
    std::vector<double> r(a.raw.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a.raw[i] + b.raw[i];
    RateField f = from_raw(a.points, a.nx, a.ny, std::move(r));
    f.normalization = a.normalization;
    f.max_imag_residual = std::max(a.max_imag_residual, b.max_imag_residual);
    return f;
  }
};

namespace engine {

struct SourceNode {
  double x;
  double y;
  double w;
};

/// Polar source rule around (cx, cy) for a particle at height `height` (um).
inline std::vector<SourceNode> source_rule(double cx, double cy, double height, const PumpField& pump, double k_s,
                                           const SourceQuadrature& q) {
  const double h = std::abs(height);
  if (!(h > 0.0)) throw DomainError("particle center must lie off the source plane");
  const double offset = std::hypot(cx - pump.center_x_um, cy - pump.center_y_um);
  const double r_out = q.cutoff_waists * pump.waist_um + offset;
  std::vector<double> breaks{0.0};
  for (double r = h * q.near_start_fraction; r < std::min(q.far_panel_um, r_out); r *= 2.0) breaks.push_back(r);
  double last = breaks.back();
  const auto n_far = static_cast<unsigned>(std::ceil((r_out - last) / q.far_panel_um));
  for (unsigned i = 1; i <= n_far; ++i) breaks.push_back(last + (r_out - last) * i / n_far);

  std::vector<SourceNode> nodes;
  const auto& rule = quad::gauss_legendre(q.radial_order);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    auto n_phi = static_cast<unsigned>(std::ceil(q.angular_density * k_s * b)) + q.angular_margin;
    n_phi = std::max(n_phi, q.min_angular);
    n_phi = (n_phi + 3u) / 4u * 4u;
    const double dphi = 2.0 * pi / n_phi;
    const double hw = 0.5 * (b - a), c = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double rho = c + hw * rule.nodes[i];
      const double wr = hw * rule.weights[i] * rho * dphi;
      for (unsigned j = 0; j < n_phi; ++j) {
        const double ph = (j + 0.5) * dphi;
        nodes.push_back({cx + rho * std::cos(ph), cy + rho * std::sin(ph), wr});
      }
    }
  }
  return nodes;
}

/// Cache of radial imaging-kernel tables keyed by wavenumber, filter and pitch.
inline std::shared_ptr<const greens::PlanarImagingKernel> imaging_kernel(WaveNumber k, const AngularFilter& f,
                                                                         double max_sep, unsigned samples) {
  struct Entry {
    double k;
    double lo, hi;
    unsigned samples;
    std::shared_ptr<const greens::PlanarImagingKernel> kernel;
  };
  static std::mutex mtx;
  static std::list<Entry> cache;
  std::lock_guard lock(mtx);
  for (auto it = cache.begin(); it != cache.end(); ++it) {
    if (it->k == k.value() && it->lo == f.theta_min_deg && it->hi == f.theta_max_deg && it->samples == samples &&
        it->kernel->max_separation() >= max_sep) {
      cache.splice(cache.begin(), cache, it);
      return cache.front().kernel;
    }
  }
  auto kern = std::make_shared<const greens::PlanarImagingKernel>(k, f, max_sep * 1.25 + 1.0, samples);
  cache.push_front({k.value(), f.theta_min_deg, f.theta_max_deg, samples, kern});
  if (cache.size() > 12) cache.pop_back();
  return kern;
}

inline double max_separation(const std::vector<Point3>& pts, const std::vector<SourceNode>& nodes) {
  double cx0 = std::numeric_limits<double>::max(), cx1 = -cx0, cy0 = cx0, cy1 = -cx0;
  for (const auto& n : nodes) {
    cx0 = std::min(cx0, n.x);
    cx1 = std::max(cx1, n.x);
    cy0 = std::min(cy0, n.y);
    cy1 = std::max(cy1, n.y);
  }
  double best = 0.0;
  for (const auto& r : pts) {
    const double dx = std::max(std::abs(r.x - cx0), std::abs(r.x - cx1));
    const double dy = std::max(std::abs(r.y - cy0), std::abs(r.y - cy1));
    best = std::max(best, std::hypot(dx, dy));
  }
  return best;
}

// d . T for a real detector vector over the row index of a 3x3 complex tensor.
inline std::array<cplx, 3> project_rows(const Vec3& d, const ComplexTensor3& t) {
  std::array<cplx, 3> out{};
  for (int j = 0; j < 3; ++j)
    for (int s = 0; s < 3; ++s) out[static_cast<std::size_t>(j)] += d[static_cast<std::size_t>(s)] * t(s, j);
  return out;
}

struct ParticleSetup {
  std::vector<SourceNode> nodes;
  std::vector<ComplexTensor3> s_direct;  // w * M * E(rho) * G0(rho, c)
  std::vector<ComplexTensor3> s_conj;    // w * M * E(rho) * conj(G0(rho, c))
  cplx coupling;                         // k_I^2 alpha
};

inline ParticleSetup prepare_particle(const SpdcScenario& s, const NanoParticle& p, const SourceQuadrature& q) {
  const WaveNumber ks = s.k_signal(), ki = s.k_idler();
  ParticleSetup out;
  out.nodes = source_rule(p.center.x, p.center.y, p.center.z, s.pump, ks.value(), q);
  out.coupling = ki.value() * ki.value() * scatterer::polarizability(p, ki).value;
  const RealTensor3 m = coupling_matrix(s.chi, s.pump);
  ComplexTensor3 mc;
  for (std::size_t i = 0; i < 9; ++i) mc.m[i] = m.m[i];
  out.s_direct.reserve(out.nodes.size());
  out.s_conj.reserve(out.nodes.size());
  for (const auto& n : out.nodes) {
    const double e = n.w * s.pump.envelope(n.x, n.y);
    const ComplexTensor3 g = greens::g0_closed_form({n.x, n.y, 0.0}, p.center, ki);
    out.s_direct.push_back(e * (mc * g));
    out.s_conj.push_back(e * (mc * conj(g)));
  }
  return out;
}

inline void require_gaussian(const SpdcScenario& s) {
  if (s.pump.profile != PumpProfile::Gaussian)
    throw DomainError("induced-coherence rates need a Gaussian pump (finite source support)");
}

}  // namespace engine

/// Induced-coherence rate by the factorized path: for each particle the two
/// auxiliary fields A = sum_n G_S(r, rho_n) S_n and A~ (conjugated idler propagator)
/// are single source-plane sums, and R_IC = sum_d sum_j Im[k^2 alpha (d.A)_j conj((d.A~)_j)].
inline RateField rate_ic_fast(const SpdcScenario& s) {
  s.validate();
  if (s.particles.empty())
    return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, std::vector<double>(s.detector_points.size()));
  engine::require_gaussian(s);
  const auto& q = s.source_quadrature;
  std::vector<engine::ParticleSetup> setups;
  double max_sep = 0.0;
  for (const auto& p : s.particles) {
    setups.push_back(engine::prepare_particle(s, p, q));
    max_sep = std::max(max_sep, engine::max_separation(s.detector_points, setups.back().nodes));
  }
  const auto kernel = engine::imaging_kernel(s.k_signal(), s.filter, max_sep, q.kernel_samples_per_wavelength);

  std::vector<double> out(s.detector_points.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const Point3& r = s.detector_points[i];
    double total = 0.0;
    for (const auto& ps : setups) {
      ComplexTensor3 a, at;
      for (std::size_t n = 0; n < ps.nodes.size(); ++n) {
        const ComplexTensor3 g = (*kernel)(r.x - ps.nodes[n].x, r.y - ps.nodes[n].y);
        a += g * ps.s_direct[n];
        at += g * ps.s_conj[n];
      }
      for (const auto& d : s.detector_polarizations) {
        const auto pa = engine::project_rows(d, a);
        const auto pt = engine::project_rows(d, at);
        for (std::size_t j = 0; j < 3; ++j) total += (ps.coupling * pa[j] * std::conj(pt[j])).imag();
      }
    }
    out[i] = total;
  });
  return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, std::move(out));
}

enum class ImagPart { Entrywise, Hermitian };

/// Oracle path: the full double source-plane sum with the idler kernel Im G_sca
/// tabulated for every node pair. Cost O(N_pix N_src^2).
inline RateField rate_ic_brute(const SpdcScenario& s, ImagPart mode = ImagPart::Entrywise) {
  s.validate();
  if (s.particles.empty())
    return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, std::vector<double>(s.detector_points.size()));
  engine::require_gaussian(s);
  const auto& q = s.source_quadrature;
  const WaveNumber ks = s.k_signal(), ki = s.k_idler();
  const RealTensor3 m = coupling_matrix(s.chi, s.pump);

  std::vector<double> out(s.detector_points.size(), 0.0);
  std::vector<double> imag_res(out.size(), 0.0);
  for (const auto& p : s.particles) {
    const auto nodes = engine::source_rule(p.center.x, p.center.y, p.center.z, s.pump, ks.value(), q);
    const std::size_t n = nodes.size();
    const cplx coupling = ki.value() * ki.value() * scatterer::polarizability(p, ki).value;
    std::vector<ComplexTensor3> g_in(n), g_out(n);
    for (std::size_t a = 0; a < n; ++a) {
      g_in[a] = greens::g0_closed_form({nodes[a].x, nodes[a].y, 0.0}, p.center, ki);
      g_out[a] = greens::g0_closed_form(p.center, {nodes[a].x, nodes[a].y, 0.0}, ki);
    }
    // kernel[a*n + b] = Im G_sca(rho_a, rho_b)
    std::vector<RealTensor3> kernel(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const ComplexTensor3 g = coupling * (g_in[a] * g_out[b]);
        if (mode == ImagPart::Entrywise) {
          kernel[a * n + b] = imag_part(g);
        } else {
          const ComplexTensor3 gba = coupling * (g_in[b] * g_out[a]);
          RealTensor3 h;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) h(i, j) = ((g(i, j) - std::conj(gba(j, i))) / (2.0 * I)).real();
          kernel[a * n + b] = h;
        }
      }
    const auto imaging = engine::imaging_kernel(ks, s.filter, engine::max_separation(s.detector_points, nodes),
                                                q.kernel_samples_per_wavelength);
    parallel_for(out.size(), [&](std::size_t i) {
      const Point3& r = s.detector_points[i];
      std::vector<std::array<cplx, 3>> v(n);
      cplx total{};
      for (const auto& d : s.detector_polarizations) {
        for (std::size_t a = 0; a < n; ++a) {
          const ComplexTensor3 g = (*imaging)(r.x - nodes[a].x, r.y - nodes[a].y);
          const double e = nodes[a].w * s.pump.envelope(nodes[a].x, nodes[a].y);
          std::array<cplx, 3> row{};
          for (int beta = 0; beta < 3; ++beta)
            for (int sg = 0; sg < 3; ++sg)
              for (int al = 0; al < 3; ++al)
                row[static_cast<std::size_t>(beta)] += d[static_cast<std::size_t>(sg)] * g(sg, al) * m(al, beta) * e;
          v[a] = row;
        }
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) {
            const RealTensor3& kk = kernel[a * n + b];
            for (int x = 0; x < 3; ++x)
              for (int y = 0; y < 3; ++y)
                total += v[a][static_cast<std::size_t>(x)] * kk(x, y) * std::conj(v[b][static_cast<std::size_t>(y)]);
          }
      }
      out[i] += total.real();
      imag_res[i] += total.imag();
    });
  }
  RateField f = RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, out);
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    scale = std::max(scale, std::abs(out[i]));
    worst = std::max(worst, std::abs(imag_res[i]));
  }
  f.max_imag_residual = scale > 0.0 ? worst / scale : worst;
  return f;
}

/// Background rate from the propagating-mode decomposition of the free-space CDOS,
///   Im G0(rho, rho') = k_I / (16 pi^2) sum_p int dOmega e_p e_p^T e^{i q.(rho - rho')},
/// so R0 = k_I/(16 pi^2) int dOmega sum_p sum_d |d . H(q) . e_p|^2 with
///   H(q) = int d^2kappa/(4 pi^2) g_S(kappa) e^{i kappa.r} Gamma^(kappa - q)
/// over the signal's propagating band. Every term is nonnegative and evanescent
/// idler waves never enter.
inline RateField rate_background(const SpdcScenario& s) {
  s.validate();
  const double ks = s.k_signal().value(), ki = s.k_idler().value();
  const auto& bq = s.background_quadrature;
  const RealTensor3 m = coupling_matrix(s.chi, s.pump);
  const double t0 = s.filter.theta_min_rad(), t1 = s.filter.theta_max_rad();
  const double kappa_lo = ks * std::sin(t0), kappa_hi_band = ks * std::sin(t1);

  struct IdlerDir {
    double qx, qy, weight;
    std::array<Vec3, 4> pol;  // e_theta, e_phi for the upper and mirrored lower hemisphere
  };
  std::vector<IdlerDir> dirs;
  {
    const auto& rt = quad::gauss_legendre(bq.idler_theta);
    const double h = pi / 4.0;
    for (std::size_t i = 0; i < rt.nodes.size(); ++i) {
      const double th = h + h * rt.nodes[i];
      const double st = std::sin(th), ct = std::cos(th);
      for (const auto& a : quad::periodic(bq.idler_phi)) {
        const double cp = std::cos(a.x), sp = std::sin(a.x);
        IdlerDir d;
        d.qx = ki * st * cp;
        d.qy = ki * st * sp;
        d.weight = st * h * rt.weights[i] * a.w * ki / (16.0 * pi * pi);
        d.pol = {Vec3{ct * cp, ct * sp, -st}, Vec3{-sp, cp, 0.0}, Vec3{-ct * cp, -ct * sp, -st}, Vec3{-sp, cp, 0.0}};
        dirs.push_back(d);
      }
    }
  }

  // g_S(kappa) M for a forward plane wave with transverse wavevector (kx, ky).
  auto signal_dyad = [&](double kx, double ky) {
    const double kz = std::sqrt(std::max(0.0, ks * ks - kx * kx - ky * ky));
    const double u[3] = {kx / ks, ky / ks, kz / ks};
    ComplexTensor3 g;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        cplx acc{};
        for (int c = 0; c < 3; ++c) acc += ((a == c ? 1.0 : 0.0) - u[a] * u[c]) * m(c, b);
        g(a, b) = acc;
      }
    return std::pair{g, kz};
  };

  auto accumulate = [&](const ComplexTensor3& h, const IdlerDir& d, double& total) {
    for (const auto& det : s.detector_polarizations) {
      const auto x = engine::project_rows(det, h);
      for (const auto& e : d.pol) {
        const cplx v = x[0] * e[0] + x[1] * e[1] + x[2] * e[2];
        total += d.weight * std::norm(v);
      }
    }
  };

  std::vector<double> out(s.detector_points.size(), 0.0);
  if (s.filter.empty()) return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, out);

  if (s.pump.profile == PumpProfile::PlaneWave) {
    // Gamma^ is a delta at kappa = q: phase matching is exact.
    parallel_for(out.size(), [&](std::size_t i) {
      const Point3& r = s.detector_points[i];
      double total = 0.0;
      for (const auto& d : dirs) {
        const double qn = std::hypot(d.qx, d.qy);
        if (qn < kappa_lo || qn > kappa_hi_band) continue;
        auto [g, kz] = signal_dyad(d.qx, d.qy);
        const cplx pre = (I / (2.0 * kz)) * s.pump.amplitude * std::exp(I * (d.qx * r.x + d.qy * r.y));
        accumulate(pre * g, d, total);
      }
      out[i] = total;
    });
    return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, std::move(out));
  }

  const double w = s.pump.waist_um;
  const double p_cut = 2.0 * std::sqrt(bq.spectrum_cutoff) / w;
  const double kappa_hi = std::min(kappa_hi_band, ki + p_cut);
  if (!(kappa_hi > kappa_lo)) return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, out);
  const double th_hi = std::asin(std::min(1.0, kappa_hi / ks));

  struct KappaNode {
    double kx, ky;
    ComplexTensor3 gm;  // d^2kappa/(4 pi^2) g_S(kappa) M
  };
  std::vector<KappaNode> grid;
  {
    const double step = bq.kappa_step_waists / w;
    const auto n_pan = static_cast<unsigned>(std::ceil((th_hi - t0) * ks / step)) + 1u;
    auto n_phi = static_cast<unsigned>(std::ceil(2.0 * pi * kappa_hi / (bq.arc_step_waists / w))) + 8u;
    n_phi = (n_phi + 7u) / 8u * 8u;
    const auto az = quad::periodic(n_phi);
    for (const auto& rn : quad::panels(t0, th_hi, n_pan, bq.kappa_order)) {
      const double st = std::sin(rn.x);
      const double kap = ks * st;
      for (const auto& a : az) {
        const double kx = kap * std::cos(a.x), ky = kap * std::sin(a.x);
        auto [g, kz] = signal_dyad(kx, ky);
        (void)kz;
        // kappa dkappa / k_z = k_S sin(theta) dtheta
        const cplx wgt = (I / 2.0) * ks * st * rn.w * a.w / (4.0 * pi * pi);
        grid.push_back({kx, ky, wgt * g});
      }
    }
  }

  const double w2q = w * w / 4.0;
  parallel_for(out.size(), [&](std::size_t i) {
    const Point3& r = s.detector_points[i];
    std::vector<ComplexTensor3> phased(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n)
      phased[n] = std::exp(I * (grid[n].kx * r.x + grid[n].ky * r.y)) * grid[n].gm;
    double total = 0.0;
    for (const auto& d : dirs) {
      ComplexTensor3 h;
      for (std::size_t n = 0; n < grid.size(); ++n) {
        const double px = grid[n].kx - d.qx, py = grid[n].ky - d.qy;
        const double arg = (px * px + py * py) * w2q;
        if (arg > bq.spectrum_cutoff) continue;
        h += s.pump.spectrum(px, py) * phased[n];
      }
      accumulate(h, d, total);
    }
    out[i] = total;
  });
  return RateField::from_raw(s.detector_points, s.grid_nx, s.grid_ny, std::move(out));
}

/// Relative change of R_IC at the detector points when the source rule is refined.
inline double rate_ic_convergence(const SpdcScenario& s) {
  const RateField base = rate_ic_fast(s);
  SpdcScenario fine = s;
  fine.source_quadrature = s.source_quadrature.refined();
  const RateField ref = rate_ic_fast(fine);
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < base.raw.size(); ++i) {
    scale = std::max(scale, std::abs(ref.raw[i]));
    diff = std::max(diff, std::abs(ref.raw[i] - base.raw[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace qiup
