#include "spincat/loss_model.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <limits>
#include <ostream>

#include "spincat/constants.hpp"
#include "spincat/energy_expansion.hpp"
#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"

namespace spincat {

namespace c = constants;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inverse_rate(double coefficient, double integral) {
  const double rate = coefficient * integral;
  return rate > 0.0 ? 1.0 / rate : kInf;
}

LossBreakdown combine(const BecConfig& cfg, double n, double I_b, double I_bb,
                      double I_ab, double I_bbb, double I_abb, double I_aab) {
  LossBreakdown out;
  out.n = n;
  out.omega_b = cfg.omega_b;
  out.tau_1 = inverse_rate(cfg.L1, I_b);
  if (cfg.L2_bb != 0.0) out.tau_2["bb"] = inverse_rate(cfg.L2_bb, I_bb);
  if (cfg.L2_ab != 0.0) out.tau_2["ab"] = inverse_rate(cfg.L2_ab, I_ab);
  out.tau_3["bbb"] = inverse_rate(cfg.L3, I_bbb);
  out.tau_3["bba"] = inverse_rate(cfg.L3, I_abb);
  out.tau_3["baa"] = inverse_rate(cfg.L3, I_aab);
  const double rate = out.total_rate();
  out.lossless = !(rate > 0.0);
  out.tau_ell = out.lossless ? kInf : 1.0 / rate;
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// 12 significant digits undo the 2 pi round trip of axes given in Hz.
double to_hz(double omega) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", omega / c::two_pi);
  return std::strtod(buf, nullptr);
}

}  // namespace

double LossBreakdown::total_rate() const {
  double rate = 0.0;
  auto add = [&](double tau) {
    if (std::isfinite(tau)) rate += 1.0 / tau;
  };
  add(tau_1);
  for (const auto& [_, tau] : tau_2) add(tau);
  for (const auto& [_, tau] : tau_3) add(tau);
  return rate;
}

LossBreakdown loss_times(const DensityMoments& m, const BecConfig& config) {
  if (!(m.I_b > 0.0)) {
    throw InvalidArgument("loss_times: small component must be occupied");
  }
  return combine(config, m.I_b, m.I_b, m.I_bb, m.I_ab, m.I_bbb, m.I_abb,
                 m.I_aab);
}

AnalyticMoments analytic_moments(const BecConfig& cfg, double N, double n) {
  const double s_a = cfg.s_a();
  const double s_b = cfg.s_b();
  const double a = cfg.a_aa;
  AnalyticMoments m;
  m.I_b = n;
  m.I_bb = std::pow(std::sqrt(2.0) * s_b, -3) * n * n;
  m.I_ab = tfa_chemical_potential(cfg, N, cfg.omega_a, a) / cfg.U_aa() * n;
  m.I_bbb = std::pow(3.0, -1.5) * std::pow(s_b, -6) * n * n * n;
  m.I_abb = std::pow(15.0, 0.4) * std::pow(c::pi, 0.2) / (16.0 * std::sqrt(2.0)) *
            std::pow(N, 0.4) /
            (std::pow(a, 0.6) * std::pow(s_a, 2.4) * std::pow(s_b, 3)) * n * n;
  m.I_aab = std::pow(15.0, 0.8) * std::pow(c::pi, 0.4) / 64.0 * std::pow(N, 0.8) /
            (std::pow(a, 1.2) * std::pow(s_a, 4.8)) * n;
  return m;
}

LossBreakdown loss_times_analytic(const BecConfig& config, double N, double n) {
  const auto m = analytic_moments(config, N, n);
  return combine(config, n, m.I_b, m.I_bb, m.I_ab, m.I_bbb, m.I_abb, m.I_aab);
}

bool PhaseDiagram::feasible_at(std::size_t i, std::size_t j,
                               double margin_factor) const {
  const double tc = tau_c_grid[i][j];
  const double tl = tau_ell_grid[i][j];
  if (!std::isfinite(tc) || std::isnan(tl)) return false;
  return margin_factor * tc < tl;
}

double PhaseDiagram::max_feasible_nbar(std::size_t i, double margin_factor) const {
  double best = 0.0;
  for (std::size_t j = 0; j < nbar_axis.size(); ++j) {
    if (feasible_at(i, j, margin_factor)) best = std::max(best, nbar_axis[j]);
  }
  return best;
}

PhaseDiagram phase_diagram(const BecConfig& config,
                           const std::vector<double>& omega_b_list,
                           const std::vector<double>& nbar_list,
                           const PhaseDiagramOptions& options) {
  if (omega_b_list.empty() || nbar_list.empty()) {
    throw InvalidArgument("phase_diagram: omega_b and nbar lists must be non-empty");
  }
  const std::size_t ni = omega_b_list.size();
  const std::size_t nj = nbar_list.size();
  PhaseDiagram d;
  d.omega_b_axis = omega_b_list;
  d.nbar_axis = nbar_list;
  d.margin = options.margin_factor;
  d.tau_c_grid.assign(ni, std::vector<double>(nj, kInf));
  d.tau_ell_grid.assign(ni, std::vector<double>(nj, std::nan("")));
  d.feasible.assign(ni, std::vector<bool>(nj, false));
  d.notes.assign(ni, std::vector<std::string>(nj));

  // Cat time per trap frequency (independent of nbar).
  std::vector<double> tau_c(ni, kInf);
  std::vector<std::string> tau_c_note(ni);
  std::vector<RadialGrid> grids(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    BecConfig cfg = config;
    cfg.omega_b = omega_b_list[i];
    grids[i] = build_grid(cfg, options.solver);
    SolverSettings s = options.solver;
    s.r_max = grids[i].r_max;
    try {
      const auto curve = sample_energy_curve(cfg, cfg.N_total, options.fit_n_max,
                                             options.fit_stride, s);
      tau_c[i] = cat_time(fit_polynomial(curve).coefficient(2));
    } catch (const DivergentCatTime& e) {
      tau_c_note[i] = std::string("divergent tau_c: ") + e.what();
    } catch (const std::exception& e) {
      tau_c_note[i] = e.what();
    }
  }

  const RelaxOptions relax{options.solver.tol, options.solver.max_steps, false};
  kernels::parallel::for_each_index(ni * nj, [&](std::size_t idx) {
    const std::size_t i = idx / nj;
    const std::size_t j = idx % nj;
    d.tau_c_grid[i][j] = tau_c[i];
    BecConfig cfg = config;
    cfg.omega_b = omega_b_list[i];
    const double nbar = nbar_list[j];
    try {
      const auto state =
          relax_ground_state(cfg, cfg.N_total - nbar, nbar, grids[i], relax);
      if (!state.converged) throw ConvergenceError("relaxation did not converge");
      d.tau_ell_grid[i][j] = loss_times(density_moments(state), cfg).tau_ell;
    } catch (const std::exception& e) {
      d.notes[i][j] = e.what();
    }
    if (d.notes[i][j].empty()) d.notes[i][j] = tau_c_note[i];
  });
  for (std::size_t i = 0; i < ni; ++i) {
    for (std::size_t j = 0; j < nj; ++j) {
      d.feasible[i][j] = d.feasible_at(i, j, d.margin);
    }
  }
  return d;
}

std::vector<ContourPoint> tau_c_contour(const PhaseDiagram& d,
                                        const std::vector<double>& tau_c_values) {
  std::vector<ContourPoint> out;
  const std::size_t ni = d.omega_b_axis.size();
  for (double target : tau_c_values) {
    for (std::size_t i = 0; i + 1 < ni; ++i) {
      const double t0 = d.tau_c_grid[i].front();
      const double t1 = d.tau_c_grid[i + 1].front();
      if (!std::isfinite(t0) || !std::isfinite(t1)) continue;
      if ((t0 - target) * (t1 - target) > 0.0) continue;
      // Interpolate in log tau_c, which is close to linear in log omega.
      const double f = (std::log(target) - std::log(t0)) / (std::log(t1) - std::log(t0));
      const double n0 = d.max_feasible_nbar(i, 1.0);
      const double n1 = d.max_feasible_nbar(i + 1, 1.0);
      out.push_back({target,
                     d.omega_b_axis[i] + f * (d.omega_b_axis[i + 1] - d.omega_b_axis[i]),
                     n0 + f * (n1 - n0)});
      break;
    }
  }
  return out;
}

double optical_depth(double N, double lambda, double R) {
  if (N < 0.0 || !(lambda > 0.0) || !(R > 0.0)) {
    throw InvalidArgument("optical_depth: lambda and R must be positive, N >= 0");
  }
  return N * lambda * lambda / (c::pi * R * R);
}

nlohmann::json to_json(const LossBreakdown& loss) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  nlohmann::json j;
  j["n"] = loss.n;
  j["omega_b_Hz"] = loss.omega_b / c::two_pi;
  j["tau_1"] = num(loss.tau_1);
  for (const auto& [k, v] : loss.tau_2) j["tau_2_" + k] = num(v);
  for (const auto& [k, v] : loss.tau_3) j["tau_3_" + k] = num(v);
  j["tau_ell"] = num(loss.tau_ell);
  j["lossless"] = loss.lossless;
  return j;
}

void write_phase_diagram_csv(std::ostream& out, const PhaseDiagram& d,
                             const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "# tau_ell evaluated at n = nbar (initial occupation)\n";
  out << "omega_b_Hz,nbar,tau_c_s,tau_ell_s,feasible_1x,feasible_10x\n";
  for (std::size_t i = 0; i < d.omega_b_axis.size(); ++i) {
    for (std::size_t j = 0; j < d.nbar_axis.size(); ++j) {
      out << fmt(to_hz(d.omega_b_axis[i])) << ',' << fmt(d.nbar_axis[j]) << ','
          << fmt(d.tau_c_grid[i][j]) << ',' << fmt(d.tau_ell_grid[i][j]) << ','
          << (d.feasible_at(i, j, 1.0) ? 1 : 0) << ','
          << (d.feasible_at(i, j, 10.0) ? 1 : 0) << '\n';
    }
  }
}

}  // namespace spincat
