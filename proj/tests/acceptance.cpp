// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spincat/constants.hpp"
#include "spincat/energy_expansion.hpp"
#include "spincat/loss_model.hpp"
#include "spincat/open_quantum.hpp"
#include "spincat/phase_space.hpp"
#include "spincat/radial_gpe.hpp"
#include "support.hpp"

using namespace spincat;
using namespace spincat::testing;
namespace c = spincat::constants;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

namespace tol {
constexpr double eta2_zero_hz = 55.0, eta2_zero_rel = 0.10, sweep_seconds = 300.0;
constexpr double eta3_zero_hz = 375.0, eta3_zero_rel = 0.15;
constexpr double tau_c = 0.646, tau_c_rel = 0.10;
constexpr double ratio_100 = 1.06, ratio_100_abs = 0.02;
constexpr double ratio_9 = 1.005, ratio_9_abs = 0.005;
constexpr double ratio_49 = 1.026, ratio_49_abs = 0.01;
constexpr double eta2_gauss_rel = 0.25, eta2_slope = 1.5, eta2_slope_abs = 0.1;
constexpr double eta1_rel = 0.05;
constexpr double bbb_slope = -3.0, bbb_slope_abs = 0.2, rb_nbar_max = 20.0;
constexpr double q_max_abs = 1e-6, overlap_abs = 1e-10, revival_abs = 1e-4, norm_abs = 1e-3,
                 lossy_abs = 1e-10;
constexpr double readout_radius_abs = 1.0;
constexpr double unitary_abs = 1e-12, jumps_mean = 0.68, jumps_se = 3.0, contrast = 2.0,
                 revival_angle = 0.1;
constexpr double delta_phi = 0.5, delta_phi_abs = 0.15, phi_min_hz = 600.0, phi_min_rel = 0.20;
constexpr double optical_depth = 34.0, optical_depth_abs = 1.0;
constexpr double grid_ratio = 4.0, grid_ratio_abs = 1.0;
}  // namespace tol

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string f(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::map<double, EtaExpansion>& fit_cache() {
  static std::map<double, EtaExpansion> cache;
  return cache;
}

const EtaExpansion& na_fit(double hz) {
  auto& cache = fit_cache();
  auto it = cache.find(hz);
  if (it == cache.end()) it = cache.emplace(hz, fit_na(hz, hz == 500.0)).first;
  return it->second;
}

std::vector<double> axis(double lo, double step, double hi) {
  std::vector<double> v;
  for (double x = lo; x <= hi + 1e-9; x += step) v.push_back(x);
  return v;
}

Verdict eta2_crossing() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const auto hz = axis(30, 5, 80);
  std::vector<double> e2;
  for (double h : hz) e2.push_back(na_fit(h).coefficient(2));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto z = zero_crossing(hz, e2);
  v.require(z.has_value() && std::abs(*z / tol::eta2_zero_hz - 1.0) <= tol::eta2_zero_rel,
            "eta2 = 0 at " + (z ? f("%.1f", *z) : std::string("none")) + " Hz");
  v.require(seconds <= tol::sweep_seconds, "sweep " + f("%.0f", seconds) + " s");
  return v;
}

Verdict eta3_crossing() {
  Verdict v;
  const auto hz = axis(250, 25, 500);
  std::vector<double> e3;
  for (double h : hz) e3.push_back(na_fit(h).coefficient(3));
  const auto z = zero_crossing(hz, e3);
  v.require(z.has_value() && std::abs(*z / tol::eta3_zero_hz - 1.0) <= tol::eta3_zero_rel,
            "eta3 = 0 at " + (z ? f("%.1f", *z) : std::string("none")) + " Hz");
  return v;
}

Verdict cat_times() {
  Verdict v;
  const auto& eta = na_fit(500);
  const double tau_c = cat_time(eta.coefficient(2));
  v.require(std::abs(tau_c / tol::tau_c - 1.0) <= tol::tau_c_rel, "tau_c " + f("%.4f", tau_c) + " s");
  const std::vector<std::tuple<double, double, double>> sizes = {
      {100, tol::ratio_100, tol::ratio_100_abs},
      {9, tol::ratio_9, tol::ratio_9_abs},
      {49, tol::ratio_49, tol::ratio_49_abs}};
  for (const auto& [nbar, target, slack] : sizes) {
    const double r = best_cat_time(eta, std::sqrt(nbar)).ratio;
    v.require(std::abs(r - target) <= slack, "nbar " + f("%.0f", nbar) + " ratio " + f("%.4f", r));
  }
  return v;
}

Verdict gaussian_limit() {
  Verdict v;
  const double fitted = na_fit(1000).coefficient(2);
  const double gauss = eta2_gaussian_limit(na_at(1000));
  v.require(std::abs(fitted / gauss - 1.0) <= tol::eta2_gauss_rel,
            "eta2(1000 Hz) " + f("%.3f", fitted) + " vs " + f("%.3f", gauss));
  const auto hz = axis(500, 100, 1500);
  std::vector<double> e2;
  for (double h : hz) e2.push_back(na_fit(h).coefficient(2));
  const double slope = loglog_slope(hz, e2);
  v.require(std::abs(slope - tol::eta2_slope) <= tol::eta2_slope_abs, "slope " + f("%.3f", slope));
  return v;
}

Verdict perturbative_eta1() {
  Verdict v;
  double worst = 0.0;
  for (double h : {100.0, 150.0, 200.0, 300.0, 400.0, 500.0, 700.0, 1000.0}) {
    const double fit = na_fit(h).coefficient(1);
    worst = std::max(worst, std::abs(eta1_perturbative(na_at(h), 1e5) / fit - 1.0));
  }
  v.require(worst <= tol::eta1_rel, "worst relative gap " + f("%.4f", worst));
  return v;
}

Verdict loss_structure() {
  Verdict v;
  const std::vector<double> hz{100, 125, 150, 200, 250, 300, 350, 400, 500, 600, 700, 800, 900, 1000};
  std::vector<double> bbb;
  bool bounded = true;
  for (double h : hz) {
    const auto cfg = na_at(h);
    const auto s = relax_ground_state(cfg, cfg.N_total - 100, 100, build_grid(cfg));
    const auto num = loss_times(density_moments(s), cfg);
    const auto ana = loss_times_analytic(cfg, cfg.N_total, 100);
    for (const auto& [key, t] : ana.tau_3) bounded = bounded && t <= num.tau_3.at(key);
    bbb.push_back(num.tau_3.at("bbb"));
  }
  v.require(bounded, "analytic tau_3 <= numeric at all points");
  const double slope = loglog_slope(hz, bbb);
  v.require(std::abs(slope - tol::bbb_slope) <= tol::bbb_slope_abs, "tau_3bbb slope " + f("%.3f", slope));

  const auto star = phase_diagram(presets::na_fig2(), {c::two_pi * 500}, {100});
  v.require(star.feasible_at(0, 0, 1.0), "Na star feasible");

  std::vector<double> omegas;
  for (double h : {100, 200, 300, 400, 500, 600, 800, 1000, 1250, 1500, 2000}) omegas.push_back(c::two_pi * h);
  const std::vector<double> nbars{1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 100};
  const auto rb = phase_diagram(presets::rb_figS5(), omegas, nbars);
  double best = 0.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) best = std::max(best, rb.max_feasible_nbar(i, 1.0));
  v.require(best <= tol::rb_nbar_max, "Rb max feasible nbar " + f("%.0f", best));
  return v;
}

Verdict phase_space_identities() {
  Verdict v;
  const double alpha = 10.0;
  const auto spec = GridSpec::for_alpha(alpha);
  const auto coh = coherent_state(alpha, default_truncation(alpha * alpha));
  const double qmax = q_function(coh, spec).max_value();
  v.require(std::abs(qmax - 1.0 / kPi) <= tol::q_max_abs, "coherent Q_max*pi " + f("%.9f", qmax * kPi));

  const auto kerr = EtaExpansion::kerr(2.44);
  const double tau_c = cat_time(2.44);
  const auto cat = evolve(coh, kerr, tau_c);
  const auto minus = coherent_state(-alpha, coh.n_max());
  FockState target;
  target.amplitudes.resize(coh.amplitudes.size());
  for (std::size_t n = 0; n < target.amplitudes.size(); ++n) {
    target.amplitudes[n] = (coh.amplitudes[n] + std::complex<double>(0, 1) * minus.amplitudes[n]) / std::sqrt(2.0);
  }
  const double overlap = std::norm(inner_product(target, cat));
  v.require(std::abs(overlap - 1.0) <= tol::overlap_abs, "cat overlap-1 " + f("%.1e", overlap - 1.0));

  const auto revived = evolve(coh, kerr, 2.0 * tau_c);
  const auto rq = q_function(revived, spec);
  const auto peaks = refine_peaks(find_peaks(rq, 0.25 * rq.max_value()), rq, revived);
  v.require(peaks.peaks.size() == 1 && std::abs(peaks.peaks[0].q - 1.0 / kPi) <= tol::revival_abs,
            "revival peaks " + std::to_string(peaks.peaks.size()));

  const double integral = q_function(cat, spec).integral();
  v.require(std::abs(integral - 1.0) <= tol::norm_abs, "integral " + f("%.6f", integral));

  const auto& eta = na_fit(500);
  const double t = cat_time(eta.coefficient(2));
  const auto lossless = q_function(evolve(coh, eta, t), spec);
  const auto lossy = q_function_lossy(alpha, eta, t, 0.0, spec);
  double worst = 0.0;
  for (std::size_t k = 0; k < lossy.values.size(); ++k) worst = std::max(worst, std::abs(lossy.values[k] - lossless.values[k]));
  v.require(worst <= tol::lossy_abs, "lossy r_sq=0 gap " + f("%.1e", worst));
  return v;
}

Verdict readout_loss() {
  Verdict v;
  const auto& eta = na_fit(500);
  const double t = best_cat_time(eta, 10.0).tau_c_star;
  LossyQOptions o;
  o.rotating_frame = true;
  const auto q = q_function_lossy(10.0, eta, t, 0.9, GridSpec::for_alpha(10.0), o);
  const auto peaks = find_peaks(q, 0.25 * q.max_value()).peaks;
  v.require(peaks.size() == 2, std::to_string(peaks.size()) + " peaks");
  for (const auto& p : peaks) {
    v.require(std::abs(p.s - std::sqrt(10.0)) <= tol::readout_radius_abs, "radius " + f("%.3f", p.s));
  }
  return v;
}

Verdict quantum_jumps() {
  Verdict v;
  const auto& eta = na_fit(500);
  {
    TrajectoryConfig cfg;
    cfg.eta = eta;
    cfg.alpha = 10.0;
    cfg.t_final = 0.68;
    cfg.n_traj = 1;
    const auto traj = run_trajectory(cfg, 0);
    const auto expected = evolve(coherent_state(10.0, cfg.truncation()), eta, cfg.t_final);
    double worst = 0.0;
    for (int n = 0; n <= expected.n_max(); ++n) {
      worst = std::max(worst, std::abs(traj.state.amplitudes[n] - expected.amplitudes[n]));
    }
    v.require(traj.jump_times.empty() && worst <= tol::unitary_abs, "L1=0 gap " + f("%.1e", worst));
  }
  {
    TrajectoryConfig cfg;
    cfg.eta = eta;
    cfg.alpha = 10.0;
    cfg.L1 = 0.01;
    cfg.t_final = 0.68;
    cfg.n_traj = 5000;
    cfg.seed = 2024;
    const auto m = mean_jumps(run_ensemble(cfg));
    v.require(std::abs(m.mean - tol::jumps_mean) <= tol::jumps_se * m.standard_error,
              "mean jumps " + f("%.4f", m.mean) + " +- " + f("%.4f", m.standard_error));
  }
  const double eta2 = 2.44, tau_c = cat_time(eta2);
  auto kerr_run = [&](double L1_tau_c, double multiple) {
    TrajectoryConfig cfg;
    cfg.eta = EtaExpansion::kerr(eta2);
    cfg.alpha = 10.0;
    cfg.L1 = L1_tau_c / tau_c;
    cfg.t_final = multiple * tau_c;
    cfg.n_traj = 5000;
    cfg.seed = 2024;
    return ring_view(ensemble_q(run_ensemble(cfg), GridSpec::for_alpha(10.0)));
  };
  const auto cat = kerr_run(0.01, 1.0);
  const bool two = cat.top.size() >= 2 && cat.top[1].q > tol::contrast * cat.background;
  v.require(two, "cat at L1 tau_c=0.01: peaks/ring " +
                     (cat.top.size() >= 2 ? f("%.2f", cat.top[1].q / cat.background) : std::string("n/a")));
  const auto revival = kerr_run(0.025, 2.0);
  const auto& top = revival.top.front();
  const bool at_pi = std::abs(top.theta - kPi) <= tol::revival_angle;
  const auto exact = q_function(kerr_loss_density(10.0, 0.0, eta2, 0.025 / tau_c, 2.0 * tau_c,
                                                  default_truncation(100.0)),
                                GridSpec::for_alpha(10.0));
  const auto exact_view = ring_view(exact);
  v.require(at_pi && top.q > tol::contrast * revival.background,
            "revival at L1 tau_c=0.025: top peak theta " + f("%.2f", top.theta) + ", peak/ring " +
                f("%.2f", top.q / revival.background) + " (master equation " +
                f("%.2f", exact_view.top.front().q / exact_view.background) + ")");
  return v;
}

Verdict dephasing() {
  Verdict v;
  const auto& eta = na_fit(500);
  const double dphi = std::abs(dephasing_angle(eta, 100, 0.05 * 1e5).delta_phi);
  v.require(std::abs(dphi - tol::delta_phi) <= tol::delta_phi_abs, "|dphi| " + f("%.3f", dphi));
  std::vector<double> hz{300, 400, 500, 550, 600, 650, 700, 800, 900, 1000};
  std::vector<double> phi;
  for (double h : hz) {
    const auto e = h == 500.0 ? eta : fit_na(h, true);
    phi.push_back(dephasing_angle(e, 100, 1.0).phi_prime);
  }
  double at = 0.0;
  if (const auto z = zero_crossing(hz, phi)) {
    at = *z;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < hz.size(); ++i) {
      if (std::abs(phi[i]) < std::abs(phi[best])) best = i;
    }
    at = hz[best];
  }
  v.require(std::abs(at / tol::phi_min_hz - 1.0) <= tol::phi_min_rel, "|phi'| minimum at " + f("%.0f", at) + " Hz");
  return v;
}

Verdict optical_depth_check() {
  Verdict v;
  const double d = optical_depth(1e5, 590e-9, 18e-6);
  v.require(std::abs(d - tol::optical_depth) <= tol::optical_depth_abs, "d " + f("%.3f", d));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict infrastructure() {
  Verdict v;
  const auto root = fs::temp_directory_path() / "spincat_acceptance";
  fs::remove_all(root);
  const std::string args =
      " jumps --set eta.source=kerr --set eta.kerr=2.44 --set state.nbar=25 --set jumps.n_traj=300"
      " --set jumps.L1_tau_c=0.025 --set jumps.time_ref=tau_c --set q.n_s=64 --set q.n_theta=128"
      " --set q.format=both --seed 12345 --out ";
  bool ran = true;
  for (const char* run : {"a", "b"}) {
    const auto cmd = std::string(SPINCAT_EXE) + args + (root / run).string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    ran = ran && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }
  v.require(ran, "two seeded runs");
  int files = 0, same = 0;
  if (ran) {
    for (const auto& e : fs::directory_iterator(root / "a")) {
      if (e.path().filename() == "manifest.json") continue;
      ++files;
      same += slurp(e.path()) == slurp(root / "b" / e.path().filename());
    }
  }
  v.require(files > 0 && same == files, std::to_string(same) + "/" + std::to_string(files) + " files identical");

  const auto na = presets::na_fig2();
  const double r_max = build_grid(na).r_max;
  std::vector<double> e;
  for (int n : {1024, 2048, 4096}) e.push_back(relax_ground_state(na, 1e5 - 100, 100, build_grid(na, r_max, n)).energy);
  const double ratio = (e[0] - e[1]) / (e[1] - e[2]);
  v.require(std::abs(ratio - tol::grid_ratio) <= tol::grid_ratio_abs, "grid error ratio " + f("%.3f", ratio));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"eta_2 zero crossing", eta2_crossing},
      {"eta_3 zero crossing", eta3_crossing},
      {"cat times at the star point", cat_times},
      {"Gaussian-limit eta_2", gaussian_limit},
      {"perturbative eta_1", perturbative_eta1},
      {"loss structure", loss_structure},
      {"phase-space identities", phase_space_identities},
      {"readout loss", readout_loss},
      {"quantum jumps", quantum_jumps},
      {"dephasing", dephasing},
      {"optical depth", optical_depth_check},
      {"infrastructure", infrastructure},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("[%s] criterion %zu: %s | %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), v.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
