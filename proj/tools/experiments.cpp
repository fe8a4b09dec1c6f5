#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spincat/constants.hpp"
#include "spincat/energy_expansion.hpp"
#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"
#include "spincat/loss_model.hpp"
#include "spincat/open_quantum.hpp"
#include "spincat/phase_space.hpp"
#include "spincat/radial_gpe.hpp"

namespace spincat::cli {

namespace {

namespace c = constants;
using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string index_name(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03zu", i);
  return stem + buf + ext;
}

// Axes are configured in Hz; 12 significant digits undo the 2 pi round trip.
double to_hz(double omega) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", omega / c::two_pi);
  return std::strtod(buf, nullptr);
}

std::string hz_label(double omega) { return "omega_b_Hz=" + fmt(to_hz(omega)); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

RelaxOptions relax_options(const SolverSettings& s) { return {s.tol, s.max_steps, false}; }

EtaExpansion fit_at(const ExperimentConfig& config, const BecConfig& bec, bool derivatives) {
  const auto curve =
      sample_energy_curve(bec, bec.N_total, static_cast<int>(config.integer("fit.n_max")),
                          static_cast<int>(config.integer("fit.stride")), config.solver());
  FitOptions fo;
  fo.degree = static_cast<int>(config.integer("fit.degree"));
  fo.with_derivatives = derivatives;
  fo.dN = config.num("fit.dN_frac") * bec.N_total;
  return fit_eta(curve, fo);
}

EtaExpansion resolve_eta(const ExperimentConfig& config, const BecConfig& bec,
                         bool need_derivatives) {
  const auto source = config.str("eta.source");
  if (source == "fit") {
    return fit_at(config, bec, need_derivatives || config.flag("fit.derivatives"));
  }
  EtaExpansion eta;
  if (source == "file") {
    if (!config.has("eta.file")) throw InvalidArgument("eta.source=file needs eta.file");
    std::ifstream in(config.str("eta.file"));
    if (!in) throw IoError("cannot read eta file '" + config.str("eta.file") + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("eta file is not valid JSON: ") + e.what());
    }
    eta = eta_from_json(j);
  } else if (source == "inline") {
    eta.eta = config.list("eta.values");
    if (eta.eta.empty()) throw InvalidArgument("eta.source=inline needs eta.values");
    eta.N = bec.N_total;
  } else if (source == "kerr") {
    eta = EtaExpansion::kerr(config.num("eta.kerr"));
    eta.N = bec.N_total;
  } else {
    throw InvalidArgument("eta.source must be fit, file, inline or kerr");
  }
  if (need_derivatives && !eta.eta_prime) {
    throw InvalidArgument("dephasing needs eta derivatives; use eta.source=fit or a file "
                          "written with fit.derivatives=true");
  }
  return eta;
}

BestCatOptions cat_options(const ExperimentConfig& config) {
  BestCatOptions o;
  o.rotating_frame = config.flag("q.rotating_frame");
  return o;
}

void write_q(RunManifest& out, const ExperimentConfig& config, const std::string& stem,
             const PolarGrid& grid, const std::vector<std::string>& preamble) {
  const auto format = config.str("q.format");
  if (format != "csv" && format != "bin" && format != "both") {
    throw InvalidArgument("q.format must be csv, bin or both");
  }
  if (format != "bin") {
    std::ostringstream s;
    write_q_csv(s, grid, preamble);
    out.write(stem + ".csv", s.str());
  }
  if (format != "csv") {
    std::ostringstream s;
    write_q_binary(s, grid);
    out.write(stem + ".qfld", s.str());
  }
}

// Peaks above a quarter of the global maximum count as significant.
json peak_summary(const PolarGrid& grid) {
  const double qmax = grid.max_value();
  const auto peaks = find_peaks(grid, 0.0);
  json list = json::array();
  int significant = 0;
  for (const auto& p : peaks.peaks) {
    if (p.q >= 0.25 * qmax) ++significant;
    if (list.size() < 6) list.push_back({{"s", p.s}, {"theta", p.theta}, {"q", p.q}});
  }
  return {{"q_max", qmax}, {"significant_peaks", significant}, {"peaks", list}};
}

std::vector<std::string> header_lines(const ExperimentConfig& config,
                                      std::vector<std::string> extra = {}) {
  std::vector<std::string> lines{"config_hash=" + config.hash()};
  lines.insert(lines.end(), extra.begin(), extra.end());
  return lines;
}

std::string preamble_text(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += "# " + l + "\n";
  return s;
}

std::vector<double> omega_axis(const ExperimentConfig& config,
                               const std::vector<double>& default_hz) {
  std::vector<double> hz = default_hz;
  if (config.str("sweep.param") == "omega_b_Hz") {
    const auto v = sweep_values(config);
    if (!v.empty()) hz = v;
  }
  std::vector<double> out;
  for (double f : hz) out.push_back(c::two_pi * f);
  return out;
}

int exit_for(const RunManifest& out) { return out.any_failed() ? 3 : 0; }

// Shared by ground and several figures.
struct GroundPoint {
  TwoComponentGroundState state;
  DensityMoments moments;
  LossBreakdown loss;
};

GroundPoint ground_point(const BecConfig& bec, double n, const SolverSettings& solver) {
  const auto grid = build_grid(bec, solver);
  GroundPoint g;
  g.state = relax_ground_state(bec, bec.N_total - n, n, grid, relax_options(solver));
  if (!g.state.converged) {
    throw ConvergenceError("ground state did not converge (n=" + fmt(n) + ")");
  }
  g.moments = density_moments(g.state);
  if (n > 0.0) g.loss = loss_times(g.moments, bec);
  return g;
}

json moments_json(const DensityMoments& m) {
  return {{"I_b", m.I_b},       {"I_bb", m.I_bb},     {"I_ab", m.I_ab},
          {"I_bbb", m.I_bbb},   {"I_abb", m.I_abb},   {"I_aab", m.I_aab},
          {"rho_a0", m.rho_a0}, {"rho_b0", m.rho_b0}, {"fwhm_b", m.fwhm_b}};
}

double channel(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? std::numeric_limits<double>::infinity() : it->second;
}

// ---- qfunc ------------------------------------------------------------

struct QPanel {
  double t = 0.0;
  double r_sq = 0.0;
  double delta_N = 0.0;
};

PolarGrid panel_q(const EtaExpansion& eta, double alpha, const QPanel& p,
                  const ExperimentConfig& config, const GridSpec& spec) {
  const bool frame = config.flag("q.rotating_frame");
  if (p.delta_N > 0.0) {
    auto rho = dephased_state(alpha, eta, p.t, p.delta_N, frame);
    if (p.r_sq > 0.0) rho = apply_photon_loss(rho, p.r_sq);
    return q_function(rho, spec);
  }
  if (p.r_sq > 0.0) {
    LossyQOptions lo;
    lo.rotating_frame = frame;
    return q_function_lossy(alpha, eta, p.t, p.r_sq, spec, lo);
  }
  const auto state =
      evolve(coherent_state(alpha, default_truncation(alpha * alpha)), eta, p.t, frame);
  return q_function(state, spec);
}

json run_q_series(const ExperimentConfig& config, RunManifest& out, const std::string& stem,
                  const EtaExpansion& eta, double nbar, const std::vector<QPanel>& panels,
                  const json& extra) {
  const double alpha = std::sqrt(nbar);
  const auto spec = config.q_grid(alpha);
  json entries = json::array();
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& p = panels[i];
    const auto grid = panel_q(eta, alpha, p, config, spec);
    const auto name = index_name(stem, i, "");
    write_q(out, config, name, grid,
            header_lines(config, {"nbar=" + fmt(nbar), "t_s=" + fmt(p.t),
                                  "r_sq=" + fmt(p.r_sq), "delta_N=" + fmt(p.delta_N)}));
    auto e = peak_summary(grid);
    e["file"] = name;
    e["t"] = p.t;
    e["r_sq"] = p.r_sq;
    e["delta_N"] = p.delta_N;
    entries.push_back(std::move(e));
  }
  json summary = extra;
  summary["nbar"] = nbar;
  summary["rotating_frame"] = config.flag("q.rotating_frame");
  summary["grid"] = {{"n_s", spec.n_s}, {"n_theta", spec.n_theta}, {"s_max", spec.s_max}};
  summary["panels"] = entries;
  return summary;
}

// ---- jumps ------------------------------------------------------------

json run_jump_series(const ExperimentConfig& config, RunManifest& out,
                     const std::string& stem, const EtaExpansion& eta, double nbar,
                     double L1, const std::vector<double>& times, const json& extra) {
  const double alpha = std::sqrt(nbar);
  const auto spec = config.q_grid(alpha);
  json entries = json::array();
  for (std::size_t i = 0; i < times.size(); ++i) {
    TrajectoryConfig tc;
    tc.eta = eta;
    tc.alpha = alpha;
    tc.L1 = L1;
    tc.t_final = times[i];
    tc.n_traj = static_cast<int>(config.integer("jumps.n_traj"));
    tc.seed = config.seed();
    tc.rotating_frame = config.flag("q.rotating_frame");
    const auto ens = run_ensemble(tc);
    const auto grid = ensemble_q(ens, spec);
    const auto name = index_name(stem, i, "");
    write_q(out, config, name, grid,
            header_lines(config, {"nbar=" + fmt(nbar), "t_s=" + fmt(times[i]),
                                  "L1=" + fmt(L1), "n_traj=" + std::to_string(tc.n_traj)}));
    auto e = summary_json(ens);
    const auto mj = mean_jumps(ens);
    const auto mn = mean_photon_number(ens);
    e["mean_jumps_stderr"] = mj.standard_error;
    e["mean_photon_number"] = mn.mean;
    e["mean_photon_number_stderr"] = mn.standard_error;
    e["expected_mean_jumps"] = nbar * (1.0 - std::exp(-L1 * times[i]));
    e["q"] = peak_summary(grid);
    e["file"] = name;
    entries.push_back(std::move(e));
  }
  json summary = extra;
  summary["nbar"] = nbar;
  summary["L1"] = L1;
  summary["runs"] = entries;
  return summary;
}

// ---- figures ----------------------------------------------------------

const std::vector<double> kLossSweepHz = {100, 125, 150, 200, 250, 300, 350, 400,
                                          500, 600, 700, 800, 900, 1000};
const std::vector<double> kPropertySweepHz = {30,  40,  50,  55,  60,  70,  80,  100,
                                              150, 200, 250, 300, 350, 375, 400, 450,
                                              500, 600, 700, 800, 900, 1000};

struct LossRow {
  double omega = 0.0;
  double tau_c = kNan;
  double tau_c_gaussian = kNan;
  LossBreakdown numeric;
  LossBreakdown analytic;
  std::string error;
};

std::vector<LossRow> loss_sweep(const ExperimentConfig& config, const BecConfig& base,
                                const std::vector<double>& omegas, double nbar) {
  std::vector<LossRow> rows(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    auto& r = rows[i];
    r.omega = omegas[i];
    BecConfig bec = base;
    bec.omega_b = omegas[i];
    try {
      try {
        r.tau_c = cat_time(fit_at(config, bec, false).coefficient(2));
      } catch (const DivergentCatTime&) {
        r.tau_c = std::numeric_limits<double>::infinity();
      }
      r.tau_c_gaussian = cat_time(eta2_gaussian_limit(bec));
      r.numeric = ground_point(bec, nbar, config.solver()).loss;
      r.analytic = loss_times_analytic(bec, bec.N_total, nbar);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }
  return rows;
}

void fig2a(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const auto rows = loss_sweep(config, bec, omega_axis(config, kLossSweepHz), nbar);
  std::string csv = preamble_text(header_lines(config, {"nbar=" + fmt(nbar)}));
  csv += "omega_b_Hz,tau_c,tau_1,tau_3_baa,tau_3_bba,tau_3_bbb,tau_ell,"
         "tau_c_gaussian,tau_3_baa_analytic,tau_3_bba_analytic,tau_3_bbb_analytic,"
         "tau_ell_analytic\n";
  for (const auto& r : rows) {
    out.point(hz_label(r.omega), r.error.empty() ? "ok" : "failed", r.error);
    if (!r.error.empty()) continue;
    csv += csv_row({to_hz(r.omega), r.tau_c, r.numeric.tau_1,
                    channel(r.numeric.tau_3, "baa"), channel(r.numeric.tau_3, "bba"),
                    channel(r.numeric.tau_3, "bbb"), r.numeric.tau_ell, r.tau_c_gaussian,
                    channel(r.analytic.tau_3, "baa"), channel(r.analytic.tau_3, "bba"),
                    channel(r.analytic.tau_3, "bbb"), r.analytic.tau_ell});
  }
  out.write("fig2a.csv", csv);
}

void fig2b(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const auto omegas = omega_axis(config, config.list("lossmap.omega_b_Hz"));
  const auto nbars = config.list("lossmap.nbar");
  PhaseDiagramOptions opts;
  opts.fit_n_max = static_cast<int>(config.integer("fit.n_max"));
  opts.fit_stride = static_cast<int>(config.integer("fit.stride"));
  opts.solver = config.solver();

  const auto full = phase_diagram(bec, omegas, nbars, opts);
  BecConfig reduced = bec;
  reduced.N_total = 0.5 * bec.N_total;
  const auto half = phase_diagram(reduced, omegas, nbars, opts);
  out.note("reduced-N boundary uses N = " + fmt(reduced.N_total));
  out.note("nbar axis: " + config.str("lossmap.nbar"));

  for (const auto* d : {&full, &half}) {
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      for (std::size_t j = 0; j < nbars.size(); ++j) {
        const auto& note = d->notes[i][j];
        if (!note.empty()) out.point(hz_label(omegas[i]) + ",nbar=" + fmt(nbars[j]), "failed", note);
      }
    }
  }
  for (const auto& [d, n] : {std::pair{&full, bec.N_total}, std::pair{&half, reduced.N_total}}) {
    std::ostringstream s;
    write_phase_diagram_csv(s, *d, header_lines(config, {"N=" + fmt(n)}));
    out.write("fig2b_N" + fmt(n) + ".csv", s.str());
  }
  std::string csv = preamble_text(header_lines(config));
  csv += "omega_b_Hz,nbar_max_1x,nbar_max_10x,nbar_max_1x_reduced_N\n";
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    csv += csv_row({to_hz(omegas[i]), full.max_feasible_nbar(i, 1.0),
                    full.max_feasible_nbar(i, 10.0), half.max_feasible_nbar(i, 1.0)});
  }
  out.write("fig2b_boundary.csv", csv);
  json contour = json::array();
  for (const auto& p : tau_c_contour(full, config.list("lossmap.contour_tau_c"))) {
    contour.push_back({{"tau_c", p.tau_c}, {"omega_b_Hz", to_hz(p.omega_b)},
                       {"nbar_max", p.nbar_max}});
  }
  out.write_json("fig2b_contour.json", contour);
}

json cat_summary(const BestCatTime& b) {
  return {{"tau_c", b.tau_c}, {"tau_c_star", b.tau_c_star}, {"ratio", b.ratio},
          {"well_defined", b.well_defined}};
}

void fig3a(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const auto eta = fit_at(config, bec, false);
  const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
  const double ts = best.tau_c_star;
  auto summary = run_q_series(config, out, "fig3a_q", eta, nbar,
                              {{0.0, 0, 0}, {ts, 0, 0}, {2 * ts, 0, 0}},
                              {{"cat", cat_summary(best)}, {"eta", to_json(eta)}});
  out.write_json("fig3a.json", summary);
}

void fig3b(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const auto eta = fit_at(config, bec, true);
  const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
  const double ts = best.tau_c_star;
  const double r_sq = config.num("q.r_sq") > 0.0 ? config.num("q.r_sq") : 0.9;
  const double frac = config.num("q.delta_N_frac") > 0.0 ? config.num("q.delta_N_frac") : 0.05;
  const double dN = frac * bec.N_total;
  auto summary = run_q_series(config, out, "fig3b_q", eta, nbar,
                              {{ts, r_sq, 0}, {ts, 0, dN}, {ts, r_sq, dN}},
                              {{"cat", cat_summary(best)},
                               {"dephasing", {{"delta_N", dN},
                                              {"delta_phi", dephasing_angle(eta, nbar, dN).delta_phi}}}});
  out.write_json("fig3b.json", summary);
}

void figS1(const ExperimentConfig& config, RunManifest& out) {
  const auto base = config.bec();
  const double nbar = config.num("state.nbar");
  const auto omegas = omega_axis(config, kPropertySweepHz);
  const std::vector<double> cat_sizes = {9, 49, 100};
  struct Row {
    bool ok = false;
    DensityMoments m;
    EtaExpansion eta;
    double eta1_pert = kNan, eta2_gauss = kNan, width = 0, s_b = 0;
    std::vector<double> ratio;
  };
  std::vector<Row> rows(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    BecConfig bec = base;
    bec.omega_b = omegas[i];
    auto& r = rows[i];
    try {
      r.m = ground_point(bec, nbar, config.solver()).moments;
      r.eta = fit_at(config, bec, false);
      r.eta1_pert = eta1_perturbative(bec, bec.N_total);
      r.eta2_gauss = eta2_gaussian_limit(bec);
      r.width = bec.oscillator_length(bec.omega_b);
      r.s_b = bec.s_b();
      for (double n : cat_sizes) {
        try {
          r.ratio.push_back(best_cat_time(r.eta, std::sqrt(n), cat_options(config)).ratio);
        } catch (const PhysicsError&) {
          r.ratio.push_back(kNan);
        }
      }
      r.ok = true;
      out.point(hz_label(omegas[i]), "ok");
    } catch (const std::exception& e) {
      out.point(hz_label(omegas[i]), "failed", e.what());
    }
  }
  const auto pre = preamble_text(header_lines(config, {"nbar=" + fmt(nbar)}));
  std::string a = pre + "omega_b_Hz,fwhm_b_m,fwhm_gaussian_m\n";
  std::string b = pre + "omega_b_Hz,rho_a0_m3,rho_b0_m3,rho_b0_gaussian_m3\n";
  std::string c1 = pre + "omega_b_Hz,eta1_fit,eta1_perturbative\n";
  std::string d = pre + "omega_b_Hz,eta2_fit,eta2_gaussian\n";
  std::string e = pre + "omega_b_Hz,eta3_fit,eta4_fit\n";
  std::string f = pre + "omega_b_Hz,ratio_nbar9,ratio_nbar49,ratio_nbar100\n";
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const auto& r = rows[i];
    if (!r.ok) continue;
    const double hz = to_hz(omegas[i]);
    a += csv_row({hz, r.m.fwhm_b, 2.0 * r.width * std::sqrt(std::log(2.0))});
    b += csv_row({hz, r.m.rho_a0, r.m.rho_b0, nbar / (r.s_b * r.s_b * r.s_b)});
    c1 += csv_row({hz, r.eta.coefficient(1), r.eta1_pert});
    d += csv_row({hz, r.eta.coefficient(2), r.eta2_gauss});
    e += csv_row({hz, r.eta.coefficient(3), r.eta.coefficient(4)});
    f += csv_row({hz, r.ratio[0], r.ratio[1], r.ratio[2]});
  }
  out.write("figS1a_fwhm.csv", a);
  out.write("figS1b_central_density.csv", b);
  out.write("figS1c_eta1.csv", c1);
  out.write("figS1d_eta2.csv", d);
  out.write("figS1e_eta3.csv", e);
  out.write("figS1f_cat_time_ratio.csv", f);
}

void figS3(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const double alpha = std::sqrt(nbar);
  const auto eta = fit_at(config, bec, false);
  const double tau_c = cat_time(eta.coefficient(2));
  const bool frame = config.flag("q.rotating_frame");
  const auto initial = coherent_state(alpha, default_truncation(nbar));
  const GridSpec scan{128, 256, alpha + 5.0};
  constexpr int kTimes = 251;
  std::vector<double> first(kTimes, 0.0), second(kTimes, 0.0);
  kernels::parallel::for_each_index(kTimes, [&](std::size_t k) {
    const double t = 2.5 * tau_c * static_cast<double>(k) / (kTimes - 1);
    const auto st = evolve(initial, eta, t, frame);
    const auto grid = q_function(st, scan);
    const auto pk = refine_peaks(find_peaks(grid, 0.0), grid, st);
    if (!pk.peaks.empty()) first[k] = pk.peaks[0].q;
    if (pk.peaks.size() > 1) second[k] = pk.peaks[1].q;
  });
  std::string csv = preamble_text(header_lines(config, {"nbar=" + fmt(nbar), "tau_c=" + fmt(tau_c)}));
  csv += "t_over_tau_c,q_first,q_second\n";
  for (int k = 0; k < kTimes; ++k) {
    csv += csv_row({2.5 * k / (kTimes - 1), first[k], second[k]});
  }
  out.write("figS3_peaks.csv", csv);
  const auto best = best_cat_time(eta, alpha, cat_options(config));
  out.write_json("figS3.json", {{"cat", cat_summary(best)}});
}

void figS4(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const auto eta = fit_at(config, bec, false);
  json summary = json::array();
  for (double nbar : {9.0, 49.0}) {
    const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
    auto s = run_q_series(config, out, "figS4_nbar" + fmt(nbar), eta, nbar,
                          {{best.tau_c_star, 0, 0}}, {{"cat", cat_summary(best)}});
    summary.push_back(std::move(s));
  }
  out.write_json("figS4.json", summary);
}

void figS5rb(const ExperimentConfig& config, RunManifest& out) {
  ExperimentConfig rb = config;
  rb.set("bec.preset", "rb-figS5");
  const auto bec = rb.bec();
  out.note("Rb parameter set applied: preset rb-figS5");
  constexpr double nbar = 10.0;
  std::vector<double> hz = kLossSweepHz;
  hz.insert(hz.end(), {1250, 1500, 2000});
  const auto rows = loss_sweep(rb, bec, omega_axis(config, hz), nbar);
  std::string csv = preamble_text(header_lines(rb, {"nbar=" + fmt(nbar)}));
  csv += "omega_b_Hz,tau_c,tau_1,tau_2_bb,tau_2_ab,tau_3_baa,tau_3_bba,tau_3_bbb,tau_ell\n";
  for (const auto& r : rows) {
    out.point(hz_label(r.omega), r.error.empty() ? "ok" : "failed", r.error);
    if (!r.error.empty()) continue;
    csv += csv_row({to_hz(r.omega), r.tau_c, r.numeric.tau_1,
                    channel(r.numeric.tau_2, "bb"), channel(r.numeric.tau_2, "ab"),
                    channel(r.numeric.tau_3, "baa"), channel(r.numeric.tau_3, "bba"),
                    channel(r.numeric.tau_3, "bbb"), r.numeric.tau_ell});
  }
  out.write("figS5rb_loss.csv", csv);

  const std::vector<double> nbars = {1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 100};
  PhaseDiagramOptions opts;
  opts.solver = rb.solver();
  const auto omegas = omega_axis(config, {100, 200, 300, 400, 500, 600, 800, 1000, 1250,
                                          1500, 2000});
  const auto d = phase_diagram(bec, omegas, nbars, opts);
  std::ostringstream s;
  write_phase_diagram_csv(s, d, header_lines(rb));
  out.write("figS5rb_phase.csv", s.str());
  double best = 0.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) best = std::max(best, d.max_feasible_nbar(i, 1.0));
  out.write_json("figS5rb.json", {{"max_feasible_nbar", best}, {"nbar_axis", nbars}});
}

void figS6(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const auto eta = fit_at(config, bec, false);
  const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
  const double L1 = config.has("jumps.L1") ? config.num("jumps.L1") : bec.L1;
  auto summary = run_jump_series(config, out, "figS6_q", eta, nbar, L1,
                                 {best.tau_c_star, 2.0 * best.tau_c_star},
                                 {{"cat", cat_summary(best)}});
  out.write_json("figS6.json", summary);
}

void figS7(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  const auto rows = loss_sweep(config, bec, omega_axis(config, kLossSweepHz), nbar);
  std::string csv = preamble_text(header_lines(config, {"nbar=" + fmt(nbar)}));
  csv += "omega_b_Hz,tau_3_baa,tau_3_baa_analytic,tau_3_bba,tau_3_bba_analytic,"
         "tau_3_bbb,tau_3_bbb_analytic,tau_ell,tau_ell_analytic\n";
  for (const auto& r : rows) {
    out.point(hz_label(r.omega), r.error.empty() ? "ok" : "failed", r.error);
    if (!r.error.empty()) continue;
    csv += csv_row({to_hz(r.omega), channel(r.numeric.tau_3, "baa"),
                    channel(r.analytic.tau_3, "baa"), channel(r.numeric.tau_3, "bba"),
                    channel(r.analytic.tau_3, "bba"), channel(r.numeric.tau_3, "bbb"),
                    channel(r.analytic.tau_3, "bbb"), r.numeric.tau_ell, r.analytic.tau_ell});
  }
  out.write("figS7.csv", csv);
}

void figS8(const ExperimentConfig& config, RunManifest& out) {
  const auto base = config.bec();
  const double nbar = config.num("state.nbar");
  const double frac = config.num("q.delta_N_frac") > 0.0 ? config.num("q.delta_N_frac") : 0.05;
  const auto omegas = omega_axis(config, {200, 250, 300, 350, 400, 450, 500, 550, 600,
                                          650, 700, 750, 800, 900, 1000});
  std::string csv = preamble_text(header_lines(config, {"nbar=" + fmt(nbar),
                                                        "delta_N_frac=" + fmt(frac)}));
  csv += "omega_b_Hz,eta1_prime,eta2_prime,eta3_prime,eta4_prime,phi_prime,delta_phi,"
         "delta_N_allowed\n";
  for (double w : omegas) {
    BecConfig bec = base;
    bec.omega_b = w;
    try {
      const auto eta = fit_at(config, bec, true);
      const auto rep = dephasing_angle(eta, nbar, frac * bec.N_total);
      const auto& p = *eta.eta_prime;
      csv += csv_row({to_hz(w), p[1], p[2], p[3], p[4], rep.phi_prime, rep.delta_phi,
                      1.0 / std::abs(rep.phi_prime)});
      out.point(hz_label(w), "ok");
    } catch (const std::exception& e) {
      out.point(hz_label(w), "failed", e.what());
    }
  }
  out.write("figS8.csv", csv);
}

void figS9(const ExperimentConfig& config, RunManifest& out) {
  const auto base = config.bec();
  const auto omegas = omega_axis(config, kPropertySweepHz);
  std::string csv = preamble_text(header_lines(config));
  csv += "a_ab_nm,omega_b_Hz,eta1,eta2,eta3,eta4\n";
  json crossings = json::array();
  for (double a_ab : {0.0, 2.5, 3.4, 4.0}) {
    double prev = kNan, prev_hz = kNan;
    json zero = json::array();
    for (double w : omegas) {
      BecConfig bec = base;
      bec.a_ab = a_ab * 1e-9;
      bec.omega_b = w;
      const auto label = "a_ab_nm=" + fmt(a_ab) + "," + hz_label(w);
      try {
        const auto eta = fit_at(config, bec, false);
        csv += csv_row({a_ab, to_hz(w), eta.coefficient(1), eta.coefficient(2),
                        eta.coefficient(3), eta.coefficient(4)});
        const double e2 = eta.coefficient(2);
        if (std::isfinite(prev) && prev * e2 < 0.0) {
          zero.push_back(prev_hz + (to_hz(w) - prev_hz) * prev / (prev - e2));
        }
        prev = e2;
        prev_hz = to_hz(w);
        out.point(label, "ok");
      } catch (const std::exception& e) {
        out.point(label, "failed", e.what());
      }
    }
    crossings.push_back({{"a_ab_nm", a_ab}, {"eta2_zero_crossings_Hz", zero}});
  }
  out.write("figS9.csv", csv);
  out.write_json("figS9.json", crossings);
}

}  // namespace

int cmd_ground(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double n = config.num("state.n");
  if (n < 0.0 || n > bec.N_total) throw InvalidArgument("state.n must lie in [0, N]");
  const auto g = ground_point(bec, n, config.solver());
  std::ostringstream csv;
  write_ground_state_csv(csv, g.state);
  out.write("ground.csv", csv.str());
  const double hw = c::hbar * bec.omega_a;
  json summary = {{"N_a", g.state.N_a},
                  {"N_b", g.state.N_b},
                  {"energy_J", g.state.energy},
                  {"energy_per_atom_hbar_omega_a", g.state.energy / (bec.N_total * hw)},
                  {"mu_a_J", g.state.mu_a},
                  {"mu_b_J", g.state.mu_b},
                  {"converged", g.state.converged},
                  {"steps", g.state.steps},
                  {"residual", g.state.residual},
                  {"moments", moments_json(g.moments)},
                  {"fwhm_b_m", g.moments.fwhm_b},
                  {"config", to_json(bec)}};
  if (n > 0.0) summary["loss"] = to_json(g.loss);
  out.write_json("ground_summary.json", summary);
  out.point("n=" + fmt(n), "ok");
  return 0;
}

int cmd_coeffs(const ExperimentConfig& config, RunManifest& out) {
  const auto base = config.bec();
  const auto param = config.str("sweep.param");
  auto values = sweep_values(config);
  if (!param.empty() && values.empty()) {
    throw InvalidArgument("sweep.param set but no sweep values given");
  }
  const bool single = values.empty();
  if (single) values.push_back(kNan);
  std::string table = preamble_text(header_lines(config));
  table += (single ? std::string("point") : param) +
           ",eta0,eta1,eta2,eta3,eta4,tau_c,eta1_perturbative,eta2_gaussian,rms_residual_J\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    BecConfig bec = base;
    std::string label = "single";
    if (!single) {
      apply_parameter(bec, param, values[i]);
      label = param + "=" + fmt(values[i]);
    }
    try {
      bec.validate();
      const auto eta = fit_at(config, bec, config.flag("fit.derivatives"));
      double tau_c = std::numeric_limits<double>::infinity();
      try {
        tau_c = cat_time(eta.coefficient(2));
      } catch (const DivergentCatTime&) {
      }
      auto j = to_json(eta);
      j["label"] = label;
      j["tau_c"] = finite_or_null(tau_c);
      j["eta1_perturbative"] = eta1_perturbative(bec, bec.N_total);
      j["eta2_gaussian"] = eta2_gaussian_limit(bec);
      out.write_json(index_name("coeffs", i, ".json"), j);
      table += csv_row({single ? 0.0 : values[i], eta.coefficient(0), eta.coefficient(1),
                        eta.coefficient(2), eta.coefficient(3), eta.coefficient(4), tau_c,
                        j["eta1_perturbative"].get<double>(),
                        j["eta2_gaussian"].get<double>(), eta.rms_residual});
      out.point(label, "ok");
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      out.point(label, "failed", e.what());
    }
  }
  out.write("coeffs.csv", table);
  return exit_for(out);
}

int cmd_qfunc(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  if (!(nbar > 0.0)) throw InvalidArgument("state.nbar must be > 0");
  const auto times = config.list("q.times");
  if (times.empty()) throw InvalidArgument("q.times is empty");
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("q.times must be >= 0");
  }
  const auto unit = config.str("q.time_unit");
  if (unit != "s" && unit != "tau_c" && unit != "tau_c_star") {
    throw InvalidArgument("q.time_unit must be s, tau_c or tau_c_star");
  }
  const double r_sq = config.num("q.r_sq");
  if (!(r_sq >= 0.0 && r_sq <= 1.0)) throw InvalidArgument("q.r_sq must lie in [0, 1]");
  const double frac = config.num("q.delta_N_frac");
  if (frac < 0.0) throw InvalidArgument("q.delta_N_frac must be >= 0");

  const auto eta = resolve_eta(config, bec, frac > 0.0);
  json extra = {{"eta", to_json(eta)}};
  double scale = 1.0;
  if (unit != "s") {
    const double tau_c = cat_time(eta.coefficient(2));
    extra["tau_c"] = tau_c;
    scale = tau_c;
    if (unit == "tau_c_star") {
      const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
      extra["cat"] = cat_summary(best);
      scale = best.tau_c_star;
    }
  }
  std::vector<QPanel> panels;
  for (double t : times) panels.push_back({t * scale, r_sq, frac * eta.N});
  extra["time_unit"] = unit;
  out.write_json("qfunc.json", run_q_series(config, out, "q", eta, nbar, panels, extra));
  out.point("qfunc", "ok");
  return 0;
}

int cmd_lossmap(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  std::vector<double> omegas;
  if (config.has("sweep.param")) {
    if (config.str("sweep.param") != "omega_b_Hz") {
      throw InvalidArgument("lossmap sweeps omega_b_Hz only");
    }
    for (double hz : sweep_values(config)) omegas.push_back(c::two_pi * hz);
  } else {
    for (double hz : config.list("lossmap.omega_b_Hz")) omegas.push_back(c::two_pi * hz);
  }
  const auto nbars = config.list("lossmap.nbar");
  if (omegas.empty() || nbars.empty()) throw InvalidArgument("lossmap: empty sweep");
  PhaseDiagramOptions opts;
  opts.fit_n_max = static_cast<int>(config.integer("fit.n_max"));
  opts.fit_stride = static_cast<int>(config.integer("fit.stride"));
  opts.solver = config.solver();
  const auto d = phase_diagram(bec, omegas, nbars, opts);
  out.note("nbar axis: " + config.str("lossmap.nbar"));
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    for (std::size_t j = 0; j < nbars.size(); ++j) {
      const auto label = hz_label(omegas[i]) + ",nbar=" + fmt(nbars[j]);
      const auto& note = d.notes[i][j];
      out.point(label, note.empty() ? "ok" : "failed", note);
    }
  }
  std::ostringstream s;
  write_phase_diagram_csv(s, d, header_lines(config, {"N=" + fmt(bec.N_total)}));
  out.write("phase_diagram.csv", s.str());
  std::string csv = preamble_text(header_lines(config));
  csv += "omega_b_Hz,nbar_max_1x,nbar_max_10x\n";
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    csv += csv_row({to_hz(omegas[i]), d.max_feasible_nbar(i, 1.0),
                    d.max_feasible_nbar(i, 10.0)});
  }
  out.write("boundary.csv", csv);
  json contour = json::array();
  for (const auto& p : tau_c_contour(d, config.list("lossmap.contour_tau_c"))) {
    contour.push_back({{"tau_c", p.tau_c}, {"omega_b_Hz", to_hz(p.omega_b)},
                       {"nbar_max", p.nbar_max}});
  }
  out.write_json("contour.json", contour);
  return exit_for(out);
}

int cmd_jumps(const ExperimentConfig& config, RunManifest& out) {
  const auto bec = config.bec();
  const double nbar = config.num("state.nbar");
  if (!(nbar > 0.0)) throw InvalidArgument("state.nbar must be > 0");
  const auto eta = resolve_eta(config, bec, false);
  const double tau_c = cat_time(eta.coefficient(2));
  json extra = {{"eta", to_json(eta)}, {"tau_c", tau_c}};
  const auto ref = config.str("jumps.time_ref");
  double t_ref = tau_c;
  if (ref == "tau_c_star") {
    const auto best = best_cat_time(eta, std::sqrt(nbar), cat_options(config));
    extra["cat"] = cat_summary(best);
    t_ref = best.tau_c_star;
  } else if (ref != "tau_c") {
    throw InvalidArgument("jumps.time_ref must be tau_c or tau_c_star");
  }
  double L1 = bec.L1;
  if (config.has("jumps.L1_tau_c")) {
    L1 = config.num("jumps.L1_tau_c") / tau_c;
  } else if (config.has("jumps.L1")) {
    L1 = config.num("jumps.L1");
  }
  std::vector<double> times;
  for (double m : config.list("jumps.multiples")) {
    if (!(m >= 0.0)) throw InvalidArgument("jumps.multiples must be >= 0");
    times.push_back(m * t_ref);
  }
  if (times.empty()) throw InvalidArgument("jumps.multiples is empty");
  extra["time_ref"] = ref;
  out.write_json("jumps.json", run_jump_series(config, out, "jumps_q", eta, nbar, L1, times, extra));
  out.point("jumps", "ok");
  return 0;
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = {"fig2a", "fig2b", "fig3a",   "fig3b",
                                               "figS1", "figS3", "figS4",   "figS5rb",
                                               "figS6", "figS7", "figS8",   "figS9"};
  return ids;
}

void check_figure_id(const std::string& id) {
  const auto& ids = figure_ids();
  if (std::find(ids.begin(), ids.end(), id) != ids.end()) return;
  std::string valid;
  for (const auto& v : ids) valid += " " + v;
  throw InvalidArgument("unknown figure id '" + id + "' (valid:" + valid + ")");
}

int cmd_figure(const std::string& id, const ExperimentConfig& config, RunManifest& out) {
  check_figure_id(id);
  if (id == "fig2a") fig2a(config, out);
  if (id == "fig2b") fig2b(config, out);
  if (id == "fig3a") fig3a(config, out);
  if (id == "fig3b") fig3b(config, out);
  if (id == "figS1") figS1(config, out);
  if (id == "figS3") figS3(config, out);
  if (id == "figS4") figS4(config, out);
  if (id == "figS5rb") figS5rb(config, out);
  if (id == "figS6") figS6(config, out);
  if (id == "figS7") figS7(config, out);
  if (id == "figS8") figS8(config, out);
  if (id == "figS9") figS9(config, out);
  return exit_for(out);
}

}  // namespace spincat::cli
