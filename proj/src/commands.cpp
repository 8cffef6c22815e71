#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include "qiup/imaging.hpp"
#include "qiup/rate_estimator.hpp"
#include "qiup/scatterer.hpp"
#include "qiup/verify.hpp"

namespace qiup::cli {
namespace {

using Artifacts = std::vector<Artifact>;
using config::Config;

double convergence_threshold(const Config& c) { return config::quality(c) == config::Quality::Paper ? 1e-4 : 1e-2; }

/// Refines the source rule at a few representative points; fails past the preset threshold.
nlohmann::ordered_json ic_convergence(const Config& c, SpdcScenario s, std::vector<Point3> pts) {
  s.detector_points = std::move(pts);
  const double change = rate_ic_convergence(s);
  const double thr = convergence_threshold(c);
  if (change > thr) throw ConvergenceError("R_IC source quadrature not converged", change);
  return {{"quantity", "R_IC"},
          {"method", "source rule refinement"},
          {"points", s.detector_points.size()},
          {"relative_change", change},
          {"threshold", thr}};
}

nlohmann::ordered_json background_convergence(const Config& c, SpdcScenario s, Point3 pt) {
  s.detector_points = {pt};
  const double a = rate_background(s).raw.at(0);
  s.background_quadrature = s.background_quadrature.refined();
  const double b = rate_background(s).raw.at(0);
  const double change = b != 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a);
  const double thr = convergence_threshold(c);
  if (change > thr && std::abs(b) > 1e-14) throw ConvergenceError("R0 quadrature not converged", change);
  return {{"quantity", "R0"}, {"method", "grid refinement"}, {"relative_change", change}, {"threshold", thr}};
}

Point3 image_of(const SpdcScenario& s) {
  const auto& c = s.particles.at(0).center;
  return {c.x, c.y, 0.0};
}

imaging::CutSampling cut_sampling(const Config& c) {
  imaging::CutSampling cs;
  cs.half_extent_waves = c.num("cut_half_extent_waves");
  cs.step_waves = c.num("cut_step_waves");
  if (!(cs.half_extent_waves > 0.0) || !(cs.step_waves > 0.0)) throw config::ConfigError("cut sampling must be positive");
  return cs;
}

Artifact cut_artifact(const std::string& name, const std::string& sub, const imaging::PsfCut& cut) {
  Artifact a{name, sub, "peak-normalized", {"coord_um", "value"}};
  for (std::size_t i = 0; i < cut.coords_um.size(); ++i) a.add_row({cut.coords_um[i], cut.values[i]});
  return a;
}

Artifacts ldos_map(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  const NanoParticle& p = s.particles.front();
  const double h = c.num("ldos_half_extent_nm") * 1e-3;
  const std::size_t n = c.count("ldos_pixels");
  const scatterer::PlaneGrid g{p.center.x - h, p.center.x + h, n, p.center.y - h, p.center.y + h, n};
  const auto map = scatterer::ldos_map(g, p, s.k_idler());
  Artifact a{"ldos_map", "ldos-map", "ldos/free-space", {"x_nm", "y_nm", "ldos_ratio"}};
  double peak = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      a.add_row({(g.x(i) - p.center.x) * 1e3, (g.y(j) - p.center.y) * 1e3, map.at(i, j)});
      peak = std::max(peak, map.at(i, j));
    }
  a.meta = {{"peak_ldos_ratio", fmt(peak)}, {"lambda_i_nm", fmt(s.lambda_i_nm)}};
  return {a};
}

Artifacts ldos_sweep(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  const NanoParticle& p = s.particles.front();
  const auto& mode = c.str("ldos_sweep");
  if (mode == "radial") {
    std::vector<double> rho_nm, rho;
    for (int i = 0; i <= 100; ++i) {
      rho_nm.push_back(2.0 * i);
      rho.push_back(rho_nm.back() * 1e-3);
    }
    const auto x = scatterer::ldos_radial(rho, p, s.k_idler(), 0.0);
    const auto y = scatterer::ldos_radial(rho, p, s.k_idler(), pi / 2.0);
    Artifact a{"ldos_radial", "ldos-sweep", "ldos/free-space", {"rho_nm", "ldos_x", "ldos_y"}};
    for (std::size_t i = 0; i < rho.size(); ++i) a.add_row({rho_nm[i], x[i].second, y[i].second});
    return {a};
  }
  scatterer::SweepAxis axis;
  std::vector<double> values;
  if (mode == "distance") {
    axis = scatterer::SweepAxis::Distance;
    values = c.list("ldos_distance_values_nm");
  } else if (mode == "absorption") {
    axis = scatterer::SweepAxis::Absorption;
    values = c.list("ldos_absorption_values");
  } else {
    throw config::ConfigError(c.entry("ldos_sweep").origin + ": `ldos_sweep` must be distance, absorption or radial");
  }
  const auto pts = scatterer::ldos_peak_sweep(axis, values, p, s.k_idler());
  Artifact a{"ldos_sweep_" + mode, "ldos-sweep", "ldos/free-space", {"parameter", "value"}};
  for (const auto& [v, l] : pts) a.add_row({v, l});
  a.meta = {{"parameter", mode == "distance" ? "z_nm" : "eps_imag"}};
  return {a};
}

Artifacts psf(const Config& c) {
  SpdcScenario s = config::build_scenario(c);
  const Point3 o = image_of(s);
  const std::size_t n = c.count("image_pixels");
  s.detector_points = image_grid(c.num("image_half_extent_um"), n);
  for (auto& p : s.detector_points) p = p + o;
  s.grid_nx = s.grid_ny = n;
  const RateField f = imaging::psf(s);
  Artifact map{"psf_map", "psf", to_string(f.normalization), {"x_um", "y_um", "value"}};
  for (std::size_t i = 0; i < f.points.size(); ++i) map.add_row({f.points[i].x, f.points[i].y, f.values[i]});
  const auto w = imaging::psf_widths(s, cut_sampling(c));
  auto cx = cut_artifact("psf_cut_x", "psf", w.x_cut);
  auto cy = cut_artifact("psf_cut_y", "psf", w.y_cut);
  map.meta = {{"fwhm_x_nm", fmt(w.fwhm_x_nm)},
              {"fwhm_y_nm", fmt(w.fwhm_y_nm)},
              {"pre_clamp_min", fmt(f.pre_clamp_min)},
              {"lambda_s_nm", fmt(s.lambda_s_nm)},
              {"lambda_i_nm", fmt(s.lambda_i_nm)}};
  cx.meta = {{"fwhm_nm", fmt(w.fwhm_x_nm)}};
  cy.meta = {{"fwhm_nm", fmt(w.fwhm_y_nm)}};
  map.sidecar["convergence"] = ic_convergence(c, s, {o, o + Point3{0.3, 0.0, 0.0}, o + Point3{0.0, 0.3, 0.0}});
  return {map, cx, cy};
}

Artifacts fwhm_sweep(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  const auto& var = c.str("sweep_variable");
  imaging::SweepVariable v;
  std::vector<double> values;
  if (var == "signal") {
    v = imaging::SweepVariable::Signal;
    values = c.list("sweep_pump_nm");
  } else if (var == "idler") {
    v = imaging::SweepVariable::Idler;
    values = c.list("sweep_idler_nm");
  } else {
    throw config::ConfigError(c.entry("sweep_variable").origin + ": `sweep_variable` must be signal or idler");
  }
  const auto pts = imaging::fwhm_sweep(v, values, s, cut_sampling(c));
  Artifact a{"fwhm_sweep_" + var, "fwhm-sweep", "raw", {"lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "fwhm_x_nm", "fwhm_y_nm"}};
  std::vector<double> lx, fx, fy;
  for (const auto& p : pts) {
    a.add_row({p.lambda_p_nm, p.lambda_s_nm, p.lambda_i_nm, p.fwhm_x_nm, p.fwhm_y_nm});
    lx.push_back(var == "signal" ? p.lambda_s_nm : p.lambda_i_nm);
    fx.push_back(p.fwhm_x_nm);
    fy.push_back(p.fwhm_y_nm);
  }
  a.meta = {{"relative_spread_x", fmt(imaging::relative_spread(fx))},
            {"relative_spread_y", fmt(imaging::relative_spread(fy))}};
  if (pts.size() >= 3) {
    a.meta.emplace_back("linear_fit_residual_fraction_x", fmt(imaging::linear_fit_residual_fraction(lx, fx)));
    a.meta.emplace_back("linear_fit_residual_fraction_y", fmt(imaging::linear_fit_residual_fraction(lx, fy)));
  }
  return {a};
}

Artifacts two_particle(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  const double d = c.num("separation_nm") * 1e-3;
  const Axis ax = config::axis(c, "axis", c.str("axis"));
  const double step = c.num("cut_step_waves") * s.lambda_s_nm * 1e-3;
  const double half = d / 2.0 + c.num("cut_half_extent_waves") * s.lambda_s_nm * 1e-3;
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / step)) | 1u;
  const auto img = imaging::two_particle_image(s, d, ax, half, n);
  Artifact a = cut_artifact("two_particle", "two-particle", img);
  a.meta = {{"axis", c.str("axis")}, {"separation_nm", fmt(d * 1e3)}, {"dip_ratio", fmt(imaging::dip_ratio(img, d))}};
  return {a};
}

Artifacts resolution(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  imaging::ResolutionSearch rs;
  rs.lo_um = c.num("resolution_lo_nm") * 1e-3;
  rs.hi_um = c.num("resolution_hi_nm") * 1e-3;
  rs.target = c.num("resolution_target");
  rs.tolerance_nm = c.num("resolution_tolerance_nm");
  rs.step_waves = c.num("cut_step_waves");
  Artifact a{"resolution", "resolution", "raw", {"axis", "separation_nm", "dip_ratio", "linear_reference_nm"}};
  for (const auto& name : c.items("resolution_axes")) {
    const auto r = imaging::resolution_limit(s, config::axis(c, "resolution_axes", name), rs);
    a.rows.push_back({name, fmt(r.separation_nm), fmt(r.dip_ratio), fmt(r.linear_reference_nm)});
  }
  a.meta = {{"target_dip", fmt(rs.target)}, {"tolerance_nm", fmt(rs.tolerance_nm)}};
  return {a};
}

Artifacts filter_sweep(const Config& c) {
  const SpdcScenario s = config::build_scenario(c);
  const auto fs = imaging::filter_sweep(s, c.list("filter_angles_deg"));
  Artifact a{"filter_sweep", "filter-sweep", "fig4-normalized", {"theta_deg", "r0", "r_ic"}};
  for (std::size_t i = 0; i < fs.theta_deg.size(); ++i) a.add_row({fs.theta_deg[i], fs.background[i], fs.induced[i]});
  a.meta = {{"crossing_deg", std::isnan(fs.crossing_deg) ? "none" : fmt(fs.crossing_deg)},
            {"theta_s_max_deg", fmt(emission_angle_relation(s.lambda_s_nm / s.lambda_i_nm))},
            {"reference_r_ic", fmt(fs.reference)}};
  a.sidecar["convergence"] = {ic_convergence(c, s, {image_of(s)}), background_convergence(c, s, image_of(s))};
  return {a};
}

Artifacts filtered_image(const Config& c) {
  SpdcScenario s = config::build_scenario(c);
  const Point3 o = image_of(s);
  const Axis ax = config::axis(c, "axis", c.str("axis"));
  const double h = c.num("image_half_extent_um");
  const std::size_t n = c.count("image_pixels");
  s.detector_points = axis_cut(ax, -h, h, n);
  for (auto& p : s.detector_points) p = p + o;
  s.grid_nx = n;
  s.grid_ny = 1;
  SpdcScenario ref = s;
  ref.detector_points = {o};
  ref.filter = {};
  const double norm = rate_ic_fast(ref).raw.at(0);
  const double th = c.num("filter_theta_deg");
  const auto un = imaging::filtered_total_image(s, 0.0);
  const auto fi = imaging::filtered_total_image(s, th);
  Artifact a{"filtered_image", "filtered-image", "fig4-normalized",
             {"coord_um", "r0_unfiltered", "r_ic_unfiltered", "total_unfiltered", "r0_filtered", "r_ic_filtered",
              "total_filtered"}};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -h + 2.0 * h * static_cast<double>(i) / static_cast<double>(n - 1);
    a.add_row({t, un.background.values[i] / norm, un.induced.values[i] / norm, un.total.values[i] / norm,
               fi.background.values[i] / norm, fi.induced.values[i] / norm, fi.total.values[i] / norm});
  }
  const double far = 0.6 * h;
  a.meta = {{"axis", c.str("axis")},
            {"theta_filt_deg", fmt(th)},
            {"contrast_unfiltered", fmt(imaging::peak_to_far_contrast(un.total, o, far))},
            {"contrast_filtered", fmt(imaging::peak_to_far_contrast(fi.total, o, far))}};
  return {a};
}

Artifacts total_rate(const Config& c) {
  Artifact a{"total_rate", "total-rate", "photons-per-second", {"radius_nm", "rate_per_s"}};
  Artifact sp{"total_rate_spectrum", "total-rate", "photons-per-second",
              {"radius_nm", "lambda_s_nm", "lambda_i_nm", "eps_real", "eps_imag", "omega_weight", "dn_domega",
               "contribution_per_s"}};
  const SourceQuadrature q = config::source_quadrature(c);
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  rates::AbsoluteScenario last;
  for (double r : c.list("rate_radii_nm")) {
    const auto as = config::build_absolute(c, r);
    last = as;
    const auto rep = rates::total_rate(as, q);
    a.add_row({r, rep.rate_per_s});
    nlohmann::ordered_json spec = nlohmann::ordered_json::array();
    for (const auto& smp : rep.samples) {
      sp.add_row({r, smp.lambda_s_nm, smp.lambda_i_nm, smp.permittivity.real(), smp.permittivity.imag(),
                  smp.omega_weight, smp.dn_domega, smp.contribution});
      spec.push_back({{"lambda_s_nm", smp.lambda_s_nm}, {"lambda_i_nm", smp.lambda_i_nm}, {"dn_domega", smp.dn_domega}});
    }
    report.push_back({{"radius_nm", r}, {"rate_per_s", rep.rate_per_s}, {"center_height_nm", as.gap_nm + r},
                      {"spectral_density", spec}});
  }
  a.meta = {{"slab", last.slab_material + " " + fmt_short(last.thickness_nm) + " nm"},
            {"d14_pm_per_v", fmt_short(last.d14_pm_per_v)},
            {"chi_per_d", fmt(last.chi_per_d)},
            {"power_mw", fmt(last.power_mw)},
            {"waist_um", fmt(last.waist_um)},
            {"band_nm", fmt(last.band_lo_nm) + "-" + fmt(last.band_hi_nm)},
            {"collection", "forward half-space photon flux"}};
  a.sidecar["report"] = report;
  a.sidecar["constants"] = {{"c_m_per_s", rates::si::c}, {"eps0_f_per_m", rates::si::eps0}};
  return {a, sp};
}

Artifacts verify_all(const Config&, bool& ok) {
  Artifact a{"verify", "verify", "raw", {"check", "passed", "measured", "tolerance"}};
  ok = true;
  for (const auto& ch : verify::run_all()) {
    a.rows.push_back({ch.name, ch.passed ? "1" : "0", fmt(ch.measured), fmt(ch.tolerance)});
    ok = ok && ch.passed;
  }
  a.meta = {{"all_passed", ok ? "1" : "0"}};
  return {a};
}

}  // namespace

int run(const std::string& sub, const Config& cfg, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Artifacts arts;
  int status = 0;
  static const std::map<std::string, std::function<Artifacts(const Config&)>> table = {
      {"ldos-map", ldos_map},         {"ldos-sweep", ldos_sweep},     {"psf", psf},
      {"fwhm-sweep", fwhm_sweep},     {"two-particle", two_particle}, {"resolution", resolution},
      {"filter-sweep", filter_sweep}, {"filtered-image", filtered_image}, {"total-rate", total_rate}};
  if (sub == "verify") {
    bool ok = true;
    arts = verify_all(cfg, ok);
    status = ok ? 0 : 4;
  } else {
    const auto it = table.find(sub);
    if (it == table.end()) throw config::ConfigError("unknown subcommand `" + sub + "`");
    arts = it->second(cfg);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& a : arts) {
    const auto path = write_artifact(opt.out_dir, a, opt.format, cfg, wall);
    std::printf("%s\n", path.c_str());
    for (const auto& [k, v] : a.meta) std::printf("  %s = %s\n", k.c_str(), v.c_str());
  }
  return status;
}

}  // namespace qiup::cli
