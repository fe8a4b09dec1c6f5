#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spincat/config.hpp"

namespace spincat {

/// Uniform radial grid r_k = k dr, k = 1..n_points. The origin is implied
/// (not stored); the last node sits on the outer Dirichlet wall.
struct RadialGrid {
  double r_max = 0.0;
  int n_points = 0;
  double dr = 0.0;
  std::vector<double> r;

  static RadialGrid uniform(double r_max, int n_points);
};

/// Trapezoid rule on the grid for an integrand that vanishes at r = 0.
[[nodiscard]] double radial_trapezoid(const RadialGrid& grid,
                                      std::span<const double> integrand);

/// Spherically symmetric real wavefunction psi(r) in m^(-3/2).
struct RadialWavefunction {
  RadialGrid grid;
  std::vector<double> values;

  /// 4 pi \int |psi|^2 r^2 dr.
  [[nodiscard]] double norm() const;
  /// Extrapolated psi(0) from the first two nodes (psi is even in r).
  [[nodiscard]] double central_value() const;
};

struct TwoComponentGroundState {
  RadialWavefunction psi_a;
  RadialWavefunction psi_b;
  double N_a = 0.0;
  double N_b = 0.0;
  double energy = 0.0;  // J
  double mu_a = 0.0;    // J
  double mu_b = 0.0;    // J
  BecConfig config;
  bool converged = false;
  double residual = 0.0;
  long steps = 0;
  /// Accepted-step energies (J); filled only when requested.
  std::vector<double> energy_history;
};

struct DensityMoments {
  double I_b = 0.0;
  double I_bb = 0.0;
  double I_ab = 0.0;
  double I_bbb = 0.0;
  double I_abb = 0.0;
  double I_aab = 0.0;
  double rho_a0 = 0.0;
  double rho_b0 = 0.0;
  double fwhm_b = 0.0;
};

/// r_max defaults to 2 max(R_TF(N_total, omega_a), 6 s_b); 3 s_a replaces R_TF
/// when a_aa = 0.
[[nodiscard]] RadialGrid build_grid(const BecConfig& config,
                                    std::optional<double> r_max_override = {},
                                    int n_points = 4096);
[[nodiscard]] RadialGrid build_grid(const BecConfig& config,
                                    const SolverSettings& settings);

/// Harmonic-oscillator ground state sampled on the grid (not renormalized).
/// Throws ResolutionError with fewer than 8 nodes inside one oscillator length.
[[nodiscard]] RadialWavefunction gaussian_ground(double mass, double omega,
                                                 const RadialGrid& grid);

struct TfaGround {
  RadialWavefunction psi;
  double mu0 = 0.0;  // J
};

/// Thomas-Fermi profile of a single repulsive component, renormalized on the
/// grid after truncation.
[[nodiscard]] TfaGround tfa_ground(const BecConfig& config, double N,
                                   double omega, double a_self,
                                   const RadialGrid& grid);

struct RelaxOptions {
  double tol = 1e-12;
  long max_steps = 500000;
  bool record_history = false;
};

/// Imaginary-time relaxation of the coupled radial GPEs.
[[nodiscard]] TwoComponentGroundState relax_ground_state(
    const BecConfig& config, double N_a, double N_b, const RadialGrid& grid,
    const RelaxOptions& options = {});

/// Mean-field energy functional including the (N_i - 1) self-interaction
/// factor, in J.
[[nodiscard]] double total_energy(const BecConfig& config,
                                  const RadialWavefunction& psi_a,
                                  const RadialWavefunction& psi_b, double N_a,
                                  double N_b);
[[nodiscard]] double total_energy(const TwoComponentGroundState& state);

[[nodiscard]] DensityMoments density_moments(
    const TwoComponentGroundState& state);

/// CSV with a '#' preamble carrying the config as key=value lines.
void write_ground_state_csv(std::ostream& out,
                            const TwoComponentGroundState& state);

/// key=value lines (no comment marker) describing a config.
[[nodiscard]] std::vector<std::string> config_lines(const BecConfig& config);

}  // namespace spincat
