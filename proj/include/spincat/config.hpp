#pragma once

#include <optional>
#include <string>

namespace spincat {

/// Physical parameters of a two-component condensate in spherical traps.
/// SI units throughout.
struct BecConfig {
  std::string species = "custom";
  double atom_mass = 0.0;  // kg
  double a_aa = 0.0;       // m
  double a_bb = 0.0;       // m
  double a_ab = 0.0;       // m
  double omega_a = 0.0;    // rad/s
  double omega_b = 0.0;    // rad/s
  double L1 = 0.0;         // 1/s
  double L2_aa = 0.0;      // m^3/s
  double L2_bb = 0.0;      // m^3/s
  double L2_ab = 0.0;      // m^3/s
  double L3 = 0.0;         // m^6/s
  double N_total = 1.0;

  /// Throws InvalidArgument when any invariant is violated.
  void validate() const;

  /// Contact coupling U_ij = 4 pi hbar^2 a_ij / m (J m^3).
  [[nodiscard]] double coupling(double scattering_length) const;
  [[nodiscard]] double U_aa() const { return coupling(a_aa); }
  [[nodiscard]] double U_bb() const { return coupling(a_bb); }
  [[nodiscard]] double U_ab() const { return coupling(a_ab); }

  /// sqrt(hbar / (m omega)).
  [[nodiscard]] double oscillator_length(double omega) const;
  /// Gaussian width s = sqrt(pi hbar / (m omega)).
  [[nodiscard]] double gaussian_width(double omega) const;
  [[nodiscard]] double s_a() const { return gaussian_width(omega_a); }
  [[nodiscard]] double s_b() const { return gaussian_width(omega_b); }
};

/// Thomas-Fermi chemical potential of a single repulsive component,
/// mu0 = (1/2) hbar omega (15 a N / l_ho)^(2/5).
[[nodiscard]] double tfa_chemical_potential(const BecConfig& config, double N,
                                            double omega, double a_self);

/// Thomas-Fermi radius sqrt(2 mu0 / (m omega^2)).
[[nodiscard]] double tfa_radius(const BecConfig& config, double N,
                                double omega, double a_self);

/// Numerical settings of the ground-state solver.
struct SolverSettings {
  int n_points = 4096;
  std::optional<double> r_max;  // m; derived from the config when empty
  double tol = 1e-12;           // relative energy change per step
  long max_steps = 500000;
};

namespace presets {

/// 23Na, |F=1,m=0> + |F=2,m=-2>, N = 1e5, omega_b = 2 pi 500 Hz.
[[nodiscard]] BecConfig na_fig2();

/// 87Rb with non-zero two-body loss, N = 1e5, omega_b = 2 pi 500 Hz.
[[nodiscard]] BecConfig rb_figS5();

/// Looks up a preset by name ("na-fig2", "rb-figS5"); throws on unknown.
[[nodiscard]] BecConfig by_name(const std::string& name);

}  // namespace presets

}  // namespace spincat
