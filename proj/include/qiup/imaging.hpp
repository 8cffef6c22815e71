#pragma once

// PSF widths, wavelength sweeps, two-particle resolution and the angular-filter study.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qiup/spdc.hpp"

namespace qiup::imaging {

/// One-dimensional cut through an image, peak-normalized.
struct PsfCut {
  Axis axis = Axis::X;
  std::vector<double> coords_um;
  std::vector<double> values;
};

inline PsfCut normalized_cut(Axis axis, std::vector<double> coords, std::vector<double> values) {
  if (coords.size() != values.size() || coords.size() < 3) throw DomainError("cut needs at least three samples");
  const double peak = *std::max_element(values.begin(), values.end());
  if (!(peak > 0.0)) throw DomainError("cut has no positive maximum");
  for (auto& v : values) v = std::max(0.0, v) / peak;
  return {axis, std::move(coords), std::move(values)};
}

/// Full width at half maximum in nm, between the outermost half-maximum
/// crossings (linear interpolation).
inline double fwhm(const PsfCut& cut) {
  const auto& x = cut.coords_um;
  const auto& v = cut.values;
  if (x.size() != v.size() || x.size() < 3) throw DomainError("fwhm: cut needs at least three samples");
  const auto imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const double half = 0.5 * v[imax];
  if (!(half > 0.0)) throw DomainError("fwhm: cut has no positive maximum");
  // a split central lobe still reports the envelope width
  std::size_t lo = 0, hi = v.size() - 1;
  while (v[lo] < half) ++lo;
  while (v[hi] < half) --hi;
  if (lo == 0 || hi + 1 == v.size())
    throw DomainError("fwhm: no half-maximum crossing inside the sampled window (window too small)");
  auto cross = [&](std::size_t a, std::size_t b) { return x[a] + (half - v[a]) * (x[b] - x[a]) / (v[b] - v[a]); };
  return (cross(hi, hi + 1) - cross(lo - 1, lo)) * 1e3;
}

/// Peak-normalized R_IC map for a single particle centered under the pump.
inline RateField psf(const SpdcScenario& s) {
  if (s.particles.size() != 1) throw DomainError("psf needs exactly one particle");
  const auto& c = s.particles.front().center;
  if (std::hypot(c.x - s.pump.center_x_um, c.y - s.pump.center_y_um) > 1e-9)
    throw DomainError("psf needs the particle centered under the pump");
  const RateField f = rate_ic_fast(s);
  return f.scaled(f.peak(), Normalization::PeakNormalized);
}

/// Cut along an axis through the particle, sampled at `n` points over +-half_extent.
inline PsfCut psf_cut(const SpdcScenario& base, Axis axis, double half_extent_um, std::size_t n) {
  SpdcScenario s = base;
  const auto& c = s.particles.at(0).center;
  s.detector_points.clear();
  std::vector<double> coords;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -half_extent_um + 2.0 * half_extent_um * static_cast<double>(i) / static_cast<double>(n - 1);
    coords.push_back(t);
    s.detector_points.push_back(axis == Axis::X ? Point3{c.x + t, c.y, 0.0} : Point3{c.x, c.y + t, 0.0});
  }
  s.grid_nx = n;
  s.grid_ny = 1;
  const RateField f = rate_ic_fast(s);
  return normalized_cut(axis, std::move(coords), f.values);
}

struct PsfWidths {
  double fwhm_x_nm = 0.0;
  double fwhm_y_nm = 0.0;
  PsfCut x_cut;
  PsfCut y_cut;
};

/// Window and sampling for PSF cuts, scaled with the signal wavelength.
struct CutSampling {
  double half_extent_waves = 2.5;  // in units of lambda_S
  double step_waves = 1.0 / 48.0;
};

inline PsfWidths psf_widths(const SpdcScenario& s, const CutSampling& cs = {}) {
  const double lam = s.lambda_s_nm * 1e-3;
  const double half = cs.half_extent_waves * lam;
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / (cs.step_waves * lam))) | 1u;
  PsfWidths w;
  w.x_cut = psf_cut(s, Axis::X, half, n);
  w.y_cut = psf_cut(s, Axis::Y, half, n);
  w.fwhm_x_nm = fwhm(w.x_cut);
  w.fwhm_y_nm = fwhm(w.y_cut);
  return w;
}

enum class SweepVariable { Signal, Idler };

struct SweepPoint {
  double lambda_p_nm;
  double lambda_s_nm;
  double lambda_i_nm;
  double fwhm_x_nm;
  double fwhm_y_nm;
};

/// Scenario at a new wavelength pair; the pump wavelength follows from energy conservation.
inline SpdcScenario with_wavelengths(const SpdcScenario& base, double lambda_s_nm, double lambda_i_nm) {
  SpdcScenario s = base;
  s.lambda_s_nm = lambda_s_nm;
  s.lambda_i_nm = lambda_i_nm;
  s.pump.wavelength_nm = SpdcScenario::pump_from(lambda_s_nm, lambda_i_nm);
  return s;
}

/// FWHM curves while varying one wavelength with the other held at its base value.
/// For `Signal`, `values` are pump wavelengths (nm) and lambda_S follows from the
/// fixed idler; for `Idler`, `values` are idler wavelengths (nm).
inline std::vector<SweepPoint> fwhm_sweep(SweepVariable vary, const std::vector<double>& values,
                                          const SpdcScenario& base, const CutSampling& cs = {}) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    SpdcScenario s;
    if (vary == SweepVariable::Signal) {
      s = with_wavelengths(base, SpdcScenario::signal_from(v, base.lambda_i_nm), base.lambda_i_nm);
      s.pump.wavelength_nm = v;
    } else {
      s = with_wavelengths(base, base.lambda_s_nm, v);
    }
    const PsfWidths w = psf_widths(s, cs);
    out.push_back({s.pump.wavelength_nm, s.lambda_s_nm, s.lambda_i_nm, w.fwhm_x_nm, w.fwhm_y_nm});
  }
  return out;
}

/// Least-squares line through (x, y); returns the max |residual| over the y range.
inline double linear_fit_residual_fraction(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 3) throw DomainError("linear fit needs at least three points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(y[i] - (slope * x[i] + icpt)));
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  return worst / (*mx - *mn);
}

/// (max - min) / mean.
inline double relative_spread(const std::vector<double>& y) {
  if (y.empty()) throw DomainError("spread of an empty series");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  double mean = 0.0;
  for (double v : y) mean += v / static_cast<double>(y.size());
  return (*mx - *mn) / mean;
}

/// Two identical particles at +-separation/2 along `axis` around the pump center.
inline SpdcScenario two_particle_scenario(const SpdcScenario& base, double separation_um, Axis axis) {
  if (base.particles.empty()) throw DomainError("two-particle scenario needs a template particle");
  SpdcScenario s = base;
  NanoParticle a = base.particles.front(), b = a;
  const double cx = base.pump.center_x_um, cy = base.pump.center_y_um, h = separation_um / 2.0;
  a.center = axis == Axis::X ? Point3{cx - h, cy, a.center.z} : Point3{cx, cy - h, a.center.z};
  b.center = axis == Axis::X ? Point3{cx + h, cy, b.center.z} : Point3{cx, cy + h, b.center.z};
  s.particles = {a, b};
  return s;
}

/// Image cut of two particles separated by `separation_um` along `axis`.
inline PsfCut two_particle_image(const SpdcScenario& base, double separation_um, Axis axis,
                                 double half_extent_um, std::size_t n) {
  SpdcScenario s = two_particle_scenario(base, separation_um, axis);
  s.detector_points = axis_cut(axis, -half_extent_um, half_extent_um, n);
  for (auto& p : s.detector_points) {
    p.x += base.pump.center_x_um;
    p.y += base.pump.center_y_um;
  }
  s.grid_nx = n;
  s.grid_ny = 1;
  const RateField f = rate_ic_fast(s);
  std::vector<double> coords;
  for (std::size_t i = 0; i < n; ++i)
    coords.push_back(-half_extent_um + 2.0 * half_extent_um * static_cast<double>(i) / static_cast<double>(n - 1));
  return normalized_cut(axis, std::move(coords), f.values);
}

/// Minimum of the image over the central quarter-separation window divided by the
/// image maximum. Restricting the minimum to the window around the midpoint keeps
/// side-lobe structure of a single PSF out of the dip.
inline double dip_ratio(const PsfCut& image, double separation_um) {
  double peak = 0.0, dip = std::numeric_limits<double>::max();
  const double win = std::max(separation_um / 4.0, 0.0);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    peak = std::max(peak, image.values[i]);
    if (std::abs(image.coords_um[i]) <= win + 1e-12) dip = std::min(dip, image.values[i]);
  }
  if (!(peak > 0.0) || dip == std::numeric_limits<double>::max()) throw DomainError("dip ratio: empty image");
  return std::clamp(dip / peak, 0.0, 1.0);
}

struct ResolutionResult {
  Axis axis = Axis::X;
  double separation_nm = 0.0;
  double dip_ratio = 0.0;
  double linear_reference_nm = 0.0;  // 0.6 lambda_I
  unsigned iterations = 0;
};

struct ResolutionSearch {
  double lo_um = 0.2;
  double hi_um = 2.5;
  double target = 0.70;
  double tolerance_nm = 5.0;
  double step_waves = 1.0 / 48.0;
};

inline double dip_at(const SpdcScenario& base, double separation_um, Axis axis, double step_um) {
  const double half = separation_um / 2.0 + 0.75 * base.lambda_s_nm * 1e-3;
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / step_um)) | 1u;
  return dip_ratio(two_particle_image(base, separation_um, axis, half, n), separation_um);
}

/// Bisection for the separation whose midpoint dip equals the target ratio.
inline ResolutionResult resolution_limit(const SpdcScenario& base, Axis axis, const ResolutionSearch& rs = {}) {
  const double step = rs.step_waves * base.lambda_s_nm * 1e-3;
  double lo = rs.lo_um, hi = rs.hi_um;
  double f_lo = dip_at(base, lo, axis, step) - rs.target;
  double f_hi = dip_at(base, hi, axis, step) - rs.target;
  if (!(f_lo > 0.0 && f_hi < 0.0))
    throw DomainError("resolution bracket failure: dip ratio does not cross " + std::to_string(rs.target) +
                      " between " + std::to_string(lo) + " and " + std::to_string(hi) + " um");
  ResolutionResult r;
  r.axis = axis;
  r.linear_reference_nm = 0.6 * base.lambda_i_nm;
  while ((hi - lo) * 1e3 > rs.tolerance_nm) {
    const double mid = 0.5 * (lo + hi);
    const double f = dip_at(base, mid, axis, step) - rs.target;
    ++r.iterations;
    if (f > 0.0) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
  }
  // linear interpolation inside the final bracket
  const double t = f_lo / (f_lo - f_hi);
  r.separation_nm = (lo + t * (hi - lo)) * 1e3;
  r.dip_ratio = rs.target + f_lo + t * (f_hi - f_lo);
  return r;
}

struct FilterSweep {
  std::vector<double> theta_deg;
  std::vector<double> background;  // R0 at the particle's projection, normalized to R_IC(0)
  std::vector<double> induced;     // R_IC, same normalization
  double reference = 0.0;          // unnormalized R_IC at theta = 0
  double crossing_deg = std::numeric_limits<double>::quiet_NaN();
};

/// R0 and R_IC at the particle's image point versus the high-pass filter angle.
inline FilterSweep filter_sweep(const SpdcScenario& base, const std::vector<double>& theta_deg) {
  if (base.particles.empty()) throw DomainError("filter sweep needs a particle");
  const Point3 c = base.particles.front().center;
  SpdcScenario s = base;
  s.detector_points = {Point3{c.x, c.y, 0.0}};
  s.grid_nx = s.grid_ny = 1;
  s.filter = AngularFilter{};
  FilterSweep out;
  out.reference = rate_ic_fast(s).raw.at(0);
  if (!(out.reference > 0.0)) throw DomainError("filter sweep: unfiltered R_IC is not positive");
  for (double th : theta_deg) {
    s.filter = AngularFilter::high_pass(th);
    s.filter.validate();
    out.theta_deg.push_back(th);
    out.background.push_back(rate_background(s).values.at(0) / out.reference);
    out.induced.push_back(rate_ic_fast(s).values.at(0) / out.reference);
  }
  for (std::size_t i = 0; i + 1 < out.theta_deg.size(); ++i) {
    const double d0 = out.background[i] - out.induced[i], d1 = out.background[i + 1] - out.induced[i + 1];
    if (d0 > 0.0 && d1 <= 0.0) {
      // interpolate log(R0 / R_IC), which is close to linear in theta on the falling edge
      const double l0 = std::log(out.background[i] / out.induced[i]);
      const double l1 = out.background[i + 1] > 0.0 ? std::log(out.background[i + 1] / out.induced[i + 1]) : -50.0;
      out.crossing_deg = out.theta_deg[i] + (out.theta_deg[i + 1] - out.theta_deg[i]) * l0 / (l0 - l1);
      break;
    }
  }
  return out;
}

struct FilteredImage {
  RateField background;
  RateField induced;
  RateField total;
};

/// R0 + R_IC over the scenario's detector points with the given high-pass filter.
inline FilteredImage filtered_total_image(const SpdcScenario& base, double theta_filt_deg) {
  SpdcScenario s = base;
  s.filter = AngularFilter::high_pass(theta_filt_deg);
  s.filter.validate();
  FilteredImage out;
  out.background = rate_background(s);
  out.induced = rate_ic_fast(s);
  out.total = out.background + out.induced;
  return out;
}

/// Ratio of the image value at `center` to the mean over points farther than `far_um`.
inline double peak_to_far_contrast(const RateField& f, const Point3& center, double far_um) {
  double at_center = 0.0, best = std::numeric_limits<double>::max(), far_sum = 0.0;
  std::size_t far_n = 0;
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    const double d = std::hypot(f.points[i].x - center.x, f.points[i].y - center.y);
    if (d < best) {
      best = d;
      at_center = f.values[i];
    }
    if (d >= far_um) {
      far_sum += f.values[i];
      ++far_n;
    }
  }
  if (far_n == 0) throw DomainError("contrast: no points beyond the far radius");
  return at_center / (far_sum / static_cast<double>(far_n));
}

}  // namespace qiup::imaging
