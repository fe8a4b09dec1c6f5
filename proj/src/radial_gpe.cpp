#include "spincat/radial_gpe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "spincat/constants.hpp"
#include "spincat/errors.hpp"

namespace spincat {

namespace c = constants;

namespace {

// Solver state in oscillator units of component A: length l = sqrt(hbar/(m
// omega_a)), energy hbar omega_a. u_i(x) = sqrt(4 pi) x psi_i l^(3/2), so
// dx * sum u^2 = 1. Array slot j holds node x = (j+1) dx; the last slot is the
// wall and stays zero.
struct ReducedProblem {
  int n = 0;
  double dx = 0.0;
  std::vector<double> x;
  double gamma_a = 1.0;  // omega_a / omega_a
  double gamma_b = 1.0;  // omega_b / omega_a
  double g_aa = 0.0;     // a_aa / l
  double g_bb = 0.0;
  double g_ab = 0.0;
  double N_a = 0.0;
  double N_b = 0.0;
  double length = 1.0;   // l in m
  double energy_unit = 1.0;  // hbar omega_a in J

  ReducedProblem(const BecConfig& cfg, const RadialGrid& grid, double Na,
                 double Nb) {
    length = cfg.oscillator_length(cfg.omega_a);
    energy_unit = c::hbar * cfg.omega_a;
    n = grid.n_points;
    dx = grid.dr / length;
    x.resize(n);
    for (int j = 0; j < n; ++j) x[j] = grid.r[j] / length;
    gamma_b = cfg.omega_b / cfg.omega_a;
    g_aa = cfg.a_aa / length;
    g_bb = cfg.a_bb / length;
    g_ab = cfg.a_ab / length;
    N_a = Na;
    N_b = Nb;
  }

  [[nodiscard]] double kinetic(std::span<const double> u) const {
    double acc = u[0] * u[0];
    for (int j = 0; j + 1 < n; ++j) {
      const double d = u[j + 1] - u[j];
      acc += d * d;
    }
    return 0.5 * acc / dx;
  }

  [[nodiscard]] double potential(std::span<const double> u,
                                 double gamma) const {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += x[j] * x[j] * u[j] * u[j];
    return 0.5 * gamma * gamma * acc * dx;
  }

  // \int u^2 v^2 / x^2 dx
  [[nodiscard]] double overlap(std::span<const double> u,
                               std::span<const double> v) const {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += u[j] * u[j] * v[j] * v[j] / (x[j] * x[j]);
    return acc * dx;
  }

  [[nodiscard]] double energy(std::span<const double> ua,
                              std::span<const double> ub) const {
    double e = 0.0;
    if (N_a != 0.0) {
      e += N_a * (kinetic(ua) + potential(ua, gamma_a) +
                  0.5 * (N_a - 1.0) * g_aa * overlap(ua, ua));
    }
    if (N_b != 0.0) {
      e += N_b * (kinetic(ub) + potential(ub, gamma_b) +
                  0.5 * (N_b - 1.0) * g_bb * overlap(ub, ub));
    }
    if (N_a != 0.0 && N_b != 0.0) e += N_a * N_b * g_ab * overlap(ua, ub);
    return e;
  }

  // Self and cross mean-field potentials felt by one component.
  void mean_fields(std::span<const double> self, std::span<const double> other,
                   double self_coeff, double cross_coeff,
                   std::vector<double>& w_self,
                   std::vector<double>& w_cross) const {
    for (int j = 0; j < n; ++j) {
      const double inv_x2 = 1.0 / (x[j] * x[j]);
      w_self[j] = self_coeff * self[j] * self[j] * inv_x2;
      w_cross[j] = cross_coeff * other[j] * other[j] * inv_x2;
    }
  }

  // <u| H |u> for H = -1/2 d^2 + 1/2 gamma^2 x^2 + w.
  [[nodiscard]] double rayleigh(std::span<const double> u, double gamma,
                                std::span<const double> w) const {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += (0.5 * gamma * gamma * x[j] * x[j] + w[j]) * u[j] * u[j];
    }
    return kinetic(u) + acc * dx;
  }

  void normalize(std::vector<double>& u) const {
    double acc = 0.0;
    for (double v : u) acc += v * v;
    const double s = 1.0 / std::sqrt(acc * dx);
    for (double& v : u) v *= s;
  }
};

// Solves the symmetric tridiagonal system with constant off-diagonal `off`
// over slots 0..n-2 (the wall slot is pinned to zero).
void solve_tridiagonal(std::span<const double> diag, double off,
                       std::span<const double> rhs, std::vector<double>& out,
                       std::vector<double>& scratch) {
  const int m = static_cast<int>(diag.size()) - 1;
  scratch.resize(m);
  double denom = diag[0];
  scratch[0] = off / denom;
  out[0] = rhs[0] / denom;
  for (int j = 1; j < m; ++j) {
    denom = diag[j] - off * scratch[j - 1];
    scratch[j] = off / denom;
    out[j] = (rhs[j] - off * out[j - 1]) / denom;
  }
  for (int j = m - 2; j >= 0; --j) out[j] -= scratch[j] * out[j + 1];
  out[m] = 0.0;
}

std::vector<double> to_reduced(const ReducedProblem& p,
                               const RadialWavefunction& psi) {
  std::vector<double> u(p.n);
  const double scale = std::sqrt(4.0 * c::pi) * std::pow(p.length, 1.5);
  for (int j = 0; j < p.n; ++j) u[j] = scale * p.x[j] * psi.values[j];
  u[p.n - 1] = 0.0;
  return u;
}

RadialWavefunction from_reduced(const ReducedProblem& p, const RadialGrid& grid,
                                std::span<const double> u) {
  RadialWavefunction psi{grid, std::vector<double>(p.n)};
  const double scale = 1.0 / (std::sqrt(4.0 * c::pi) * std::pow(p.length, 1.5));
  for (int j = 0; j < p.n; ++j) psi.values[j] = scale * u[j] / p.x[j];
  return psi;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RadialGrid RadialGrid::uniform(double r_max, int n_points) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InvalidArgument("radial grid: r_max must be positive");
  }
  if (n_points < 64) throw InvalidArgument("radial grid: n_points must be >= 64");
  RadialGrid g;
  g.r_max = r_max;
  g.n_points = n_points;
  g.dr = r_max / n_points;
  g.r.resize(n_points);
  for (int k = 0; k < n_points; ++k) g.r[k] = (k + 1) * g.dr;
  g.r.back() = r_max;
  return g;
}

double radial_trapezoid(const RadialGrid& grid,
                        std::span<const double> integrand) {
  // Nodes 0, dr, ..., r_max with f(0) = 0.
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < integrand.size(); ++k) acc += integrand[k];
  acc += 0.5 * integrand.back();
  return acc * grid.dr;
}

double RadialWavefunction::norm() const {
  std::vector<double> f(values.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = 4.0 * c::pi * values[k] * values[k] * grid.r[k] * grid.r[k];
  }
  return radial_trapezoid(grid, f);
}

double RadialWavefunction::central_value() const {
  return (4.0 * values[0] - values[1]) / 3.0;
}

RadialGrid build_grid(const BecConfig& config,
                      std::optional<double> r_max_override, int n_points) {
  config.validate();
  if (r_max_override) {
    if (!(*r_max_override > 0.0)) {
      throw InvalidArgument("build_grid: r_max_override must be positive");
    }
    return RadialGrid::uniform(*r_max_override, n_points);
  }
  const double r_tf =
      config.a_aa > 0.0
          ? tfa_radius(config, config.N_total, config.omega_a, config.a_aa)
          : 3.0 * config.s_a();
  const double r_max = 2.0 * std::max(r_tf, 6.0 * config.s_b());
  return RadialGrid::uniform(r_max, n_points);
}

RadialGrid build_grid(const BecConfig& config, const SolverSettings& settings) {
  return build_grid(config, settings.r_max, settings.n_points);
}

RadialWavefunction gaussian_ground(double mass, double omega,
                                   const RadialGrid& grid) {
  if (!(omega > 0.0) || !(mass > 0.0)) {
    throw InvalidArgument("gaussian_ground: omega and mass must be positive");
  }
  const double sigma = std::sqrt(c::hbar / (mass * omega));
  if (sigma / grid.dr < 8.0) {
    throw ResolutionError("gaussian_ground: fewer than 8 grid points inside one "
                          "oscillator length; refine the grid");
  }
  const double amp = std::pow(mass * omega / (c::pi * c::hbar), 0.75);
  RadialWavefunction psi{grid, std::vector<double>(grid.r.size())};
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    const double r = grid.r[k];
    psi.values[k] = amp * std::exp(-mass * omega * r * r / (2.0 * c::hbar));
  }
  return psi;
}

TfaGround tfa_ground(const BecConfig& config, double N, double omega,
                     double a_self, const RadialGrid& grid) {
  if (!(a_self > 0.0)) {
    throw InvalidArgument("tfa_ground: Thomas-Fermi profile needs a_self > 0");
  }
  if (!(N >= 1.0)) throw InvalidArgument("tfa_ground: N must be >= 1");
  const double mu0 = tfa_chemical_potential(config, N, omega, a_self);
  const double U = config.coupling(a_self);
  const double m = config.atom_mass;
  RadialWavefunction psi{grid, std::vector<double>(grid.r.size())};
  for (std::size_t k = 0; k < grid.r.size(); ++k) {
    const double V = 0.5 * m * omega * omega * grid.r[k] * grid.r[k];
    psi.values[k] = std::sqrt(std::max(mu0 - V, 0.0) / (N * U));
  }
  psi.values.back() = 0.0;
  const double nrm = psi.norm();
  if (!(nrm > 0.0)) {
    throw ResolutionError("tfa_ground: Thomas-Fermi radius below grid spacing");
  }
  const double s = 1.0 / std::sqrt(nrm);
  for (double& v : psi.values) v *= s;
  return {std::move(psi), mu0};
}

TwoComponentGroundState relax_ground_state(const BecConfig& config, double N_a,
                                           double N_b, const RadialGrid& grid,
                                           const RelaxOptions& options) {
  config.validate();
  if (N_a < 0.0 || N_b < 0.0) {
    throw InvalidArgument("relax_ground_state: particle numbers must be >= 0");
  }
  if (N_a + N_b < 1.0) {
    throw InvalidArgument("relax_ground_state: N_a + N_b must be >= 1");
  }
  ReducedProblem p(config, grid, N_a, N_b);
  const int n = p.n;

  // Initial guesses: Thomas-Fermi for A when meaningful, Gaussians otherwise.
  std::vector<double> ua;
  if (config.a_aa > 0.0 && N_a >= 1.0 &&
      tfa_radius(config, N_a, config.omega_a, config.a_aa) > 4.0 * grid.dr) {
    ua = to_reduced(p, tfa_ground(config, N_a, config.omega_a, config.a_aa, grid).psi);
  } else {
    ua = to_reduced(p, gaussian_ground(config.atom_mass, config.omega_a, grid));
  }
  std::vector<double> ub =
      to_reduced(p, gaussian_ground(config.atom_mass, config.omega_b, grid));
  p.normalize(ua);
  p.normalize(ub);

  // The self-interaction of a component with fewer than one atom is clamped
  // at zero: (N - 1) only enters the energy multiplied by N.
  const double self_a = std::max(N_a - 1.0, 0.0) * p.g_aa;
  const double self_b = std::max(N_b - 1.0, 0.0) * p.g_bb;
  const double cross_a = N_b * p.g_ab;
  const double cross_b = N_a * p.g_ab;

  std::vector<double> ws(n), wc(n), wfull(n), diag(n), rhs(n), scratch;
  std::vector<double> na(n), nb(n);

  auto step_component = [&](std::span<const double> self,
                            std::span<const double> other, double gamma,
                            double self_coeff, double cross_coeff, double dtau,
                            std::vector<double>& out) {
    p.mean_fields(self, other, self_coeff, cross_coeff, ws, wc);
    for (int j = 0; j < n; ++j) wfull[j] = ws[j] + wc[j];
    const double sigma = p.rayleigh(self, gamma, wfull);
    const double inv_dx2 = 1.0 / (p.dx * p.dx);
    for (int j = 0; j < n; ++j) {
      diag[j] = 1.0 / dtau + inv_dx2 + 0.5 * gamma * gamma * p.x[j] * p.x[j] +
                wc[j] + 3.0 * ws[j] - sigma;
      rhs[j] = self[j] / dtau + 2.0 * ws[j] * self[j];
    }
    solve_tridiagonal(diag, -0.5 * inv_dx2, rhs, out, scratch);
    p.normalize(out);
    return sigma;
  };

  TwoComponentGroundState state;
  state.N_a = N_a;
  state.N_b = N_b;
  state.config = config;

  double energy = p.energy(ua, ub);
  // Start on the stiffest trap time scale; large early steps act like Newton
  // iterations and can land on an excited stationary state.
  double dtau = 0.1 / std::max(p.gamma_a, p.gamma_b);
  constexpr double kMaxDtau = 1e4;
  double d_mu_last = std::numeric_limits<double>::infinity();
  int rejected_in_row = 0;
  double mu_a = 0.0, mu_b = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  long step = 0;
  if (options.record_history) state.energy_history.push_back(energy * p.energy_unit);

  for (; step < options.max_steps; ++step) {
    const double new_mu_a = step_component(ua, ub, p.gamma_a, self_a, cross_a, dtau, na);
    const double new_mu_b = step_component(ub, ua, p.gamma_b, self_b, cross_b, dtau, nb);
    const double new_energy = p.energy(na, nb);
    const double scale = std::max(std::abs(energy), 1e-300);
    if (!std::isfinite(new_energy) ||
        new_energy - energy > 1e-14 * scale) {
      // Energy went up: shrink the imaginary-time step and retry.
      if (++rejected_in_row >= 100) {
        throw InstabilityError(
            "relax_ground_state: energy increased for 100 consecutive steps; "
            "use a smaller imaginary-time step");
      }
      dtau *= 0.5;
      continue;
    }
    rejected_in_row = 0;
    const double d_energy = std::abs(new_energy - energy) / scale;
    const double d_mu = std::max(
        std::abs(new_mu_a - mu_a) / std::max(std::abs(new_mu_a), 1.0),
        std::abs(new_mu_b - mu_b) / std::max(std::abs(new_mu_b), 1.0));
    ua.swap(na);
    ub.swap(nb);
    energy = new_energy;
    mu_a = new_mu_a;
    mu_b = new_mu_b;
    if (options.record_history) state.energy_history.push_back(energy * p.energy_unit);
    // Chemical potentials converge linearly in the wavefunction error, the
    // energy quadratically; demand both.
    residual = std::max(d_energy, d_mu * d_mu);
    if (step >= 4 && residual < options.tol) {
      ++step;
      state.converged = true;
      break;
    }
    d_mu_last = d_mu;
    dtau = std::min(dtau * (d_mu_last > 1e-4 ? 1.2 : 2.0), kMaxDtau);
  }

  // Final eigenvalues with the converged fields.
  p.mean_fields(ua, ub, self_a, cross_a, ws, wc);
  for (int j = 0; j < n; ++j) wfull[j] = ws[j] + wc[j];
  mu_a = p.rayleigh(ua, p.gamma_a, wfull);
  p.mean_fields(ub, ua, self_b, cross_b, ws, wc);
  for (int j = 0; j < n; ++j) wfull[j] = ws[j] + wc[j];
  mu_b = p.rayleigh(ub, p.gamma_b, wfull);

  state.psi_a = from_reduced(p, grid, ua);
  state.psi_b = from_reduced(p, grid, ub);
  state.mu_a = mu_a * p.energy_unit;
  state.mu_b = mu_b * p.energy_unit;
  state.residual = residual;
  state.steps = step;
  state.energy = total_energy(state);
  return state;
}

double total_energy(const BecConfig& config, const RadialWavefunction& psi_a,
                    const RadialWavefunction& psi_b, double N_a, double N_b) {
  ReducedProblem p(config, psi_a.grid, N_a, N_b);
  const auto ua = to_reduced(p, psi_a);
  const auto ub = to_reduced(p, psi_b);
  return p.energy(ua, ub) * p.energy_unit;
}

double total_energy(const TwoComponentGroundState& state) {
  return total_energy(state.config, state.psi_a, state.psi_b, state.N_a,
                      state.N_b);
}

DensityMoments density_moments(const TwoComponentGroundState& state) {
  const RadialGrid& grid = state.psi_a.grid;
  const std::size_t n = grid.r.size();
  std::vector<double> rho_a(n), rho_b(n);
  for (std::size_t k = 0; k < n; ++k) {
    rho_a[k] = state.N_a * state.psi_a.values[k] * state.psi_a.values[k];
    rho_b[k] = state.N_b * state.psi_b.values[k] * state.psi_b.values[k];
  }
  auto integrate = [&](auto&& f) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = 4.0 * c::pi * grid.r[k] * grid.r[k] * f(k);
    }
    return radial_trapezoid(grid, w);
  };
  DensityMoments m;
  m.I_b = integrate([&](std::size_t k) { return rho_b[k]; });
  m.I_bb = integrate([&](std::size_t k) { return rho_b[k] * rho_b[k]; });
  m.I_ab = integrate([&](std::size_t k) { return rho_a[k] * rho_b[k]; });
  m.I_bbb = integrate([&](std::size_t k) { return rho_b[k] * rho_b[k] * rho_b[k]; });
  m.I_abb = integrate([&](std::size_t k) { return rho_a[k] * rho_b[k] * rho_b[k]; });
  m.I_aab = integrate([&](std::size_t k) { return rho_a[k] * rho_a[k] * rho_b[k]; });
  const double psi_a0 = state.psi_a.central_value();
  const double psi_b0 = state.psi_b.central_value();
  m.rho_a0 = state.N_a * psi_a0 * psi_a0;
  m.rho_b0 = state.N_b * psi_b0 * psi_b0;

  // FWHM of rho_b; radial shell thickness when the maximum is off-centre.
  const double b0 = psi_b0 * psi_b0;
  double peak = b0;
  std::size_t peak_idx = 0;
  bool centred = true;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = state.psi_b.values[k] * state.psi_b.values[k];
    if (v > peak) {
      peak = v;
      peak_idx = k;
      centred = false;
    }
  }
  const double half = 0.5 * peak;
  auto dens = [&](std::size_t k) {
    return state.psi_b.values[k] * state.psi_b.values[k];
  };
  auto crossing = [&](std::size_t k0, std::size_t k1) {
    const double f0 = dens(k0), f1 = dens(k1);
    return grid.r[k0] + (half - f0) / (f1 - f0) * (grid.r[k1] - grid.r[k0]);
  };
  double outer = grid.r_max;
  for (std::size_t k = peak_idx; k + 1 < n; ++k) {
    if (dens(k) >= half && dens(k + 1) < half) {
      outer = crossing(k, k + 1);
      break;
    }
  }
  if (centred) {
    m.fwhm_b = 2.0 * outer;
  } else {
    double inner = 0.0;
    for (std::size_t k = peak_idx; k > 0; --k) {
      if (dens(k) >= half && dens(k - 1) < half) {
        inner = crossing(k - 1, k);
        break;
      }
    }
    m.fwhm_b = outer - inner;
  }
  return m;
}

std::vector<std::string> config_lines(const BecConfig& cfg) {
  return {
      "species=" + cfg.species,
      "atom_mass_kg=" + format_double(cfg.atom_mass),
      "a_aa_m=" + format_double(cfg.a_aa),
      "a_bb_m=" + format_double(cfg.a_bb),
      "a_ab_m=" + format_double(cfg.a_ab),
      "omega_a_rad_s=" + format_double(cfg.omega_a),
      "omega_b_rad_s=" + format_double(cfg.omega_b),
      "L1_per_s=" + format_double(cfg.L1),
      "L2_aa_m3_s=" + format_double(cfg.L2_aa),
      "L2_bb_m3_s=" + format_double(cfg.L2_bb),
      "L2_ab_m3_s=" + format_double(cfg.L2_ab),
      "L3_m6_s=" + format_double(cfg.L3),
      "N_total=" + format_double(cfg.N_total),
  };
}

void write_ground_state_csv(std::ostream& out,
                            const TwoComponentGroundState& state) {
  for (const auto& line : config_lines(state.config)) out << "# " << line << '\n';
  out << "# N_a=" << format_double(state.N_a) << '\n';
  out << "# N_b=" << format_double(state.N_b) << '\n';
  out << "r_m,psi_a,psi_b,rho_a,rho_b\n";
  const auto& r = state.psi_a.grid.r;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double a = state.psi_a.values[k];
    const double b = state.psi_b.values[k];
    out << format_double(r[k]) << ',' << format_double(a) << ','
        << format_double(b) << ',' << format_double(state.N_a * a * a) << ','
        << format_double(state.N_b * b * b) << '\n';
  }
}

}  // namespace spincat
