#include "spincat/config.hpp"

#include <cmath>

#include "spincat/constants.hpp"
#include "spincat/errors.hpp"

namespace spincat {

namespace c = constants;

void BecConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("BecConfig: ") + what);
  };
  require(std::isfinite(a_aa) && std::isfinite(a_bb) && std::isfinite(a_ab),
          "scattering lengths must be finite");
  require(atom_mass > 0.0 && std::isfinite(atom_mass), "atom_mass must be > 0");
  require(omega_a > 0.0 && std::isfinite(omega_a), "omega_a must be > 0");
  require(omega_b > 0.0 && std::isfinite(omega_b), "omega_b must be > 0");
  require(L1 >= 0.0 && L2_aa >= 0.0 && L2_bb >= 0.0 && L2_ab >= 0.0 &&
              L3 >= 0.0,
          "loss coefficients must be non-negative");
  require(N_total >= 1.0, "N_total must be >= 1");
}

double BecConfig::coupling(double scattering_length) const {
  return 4.0 * c::pi * c::hbar * c::hbar * scattering_length / atom_mass;
}

double BecConfig::oscillator_length(double omega) const {
  return std::sqrt(c::hbar / (atom_mass * omega));
}

double BecConfig::gaussian_width(double omega) const {
  return std::sqrt(c::pi * c::hbar / (atom_mass * omega));
}

double tfa_chemical_potential(const BecConfig& config, double N, double omega,
                              double a_self) {
  const double l = config.oscillator_length(omega);
  return 0.5 * c::hbar * omega * std::pow(15.0 * a_self * N / l, 0.4);
}

double tfa_radius(const BecConfig& config, double N, double omega,
                  double a_self) {
  const double mu = tfa_chemical_potential(config, N, omega, a_self);
  return std::sqrt(2.0 * mu / (config.atom_mass * omega * omega));
}

namespace presets {

BecConfig na_fig2() {
  BecConfig cfg;
  cfg.species = "Na23";
  cfg.atom_mass = c::mass_na23;
  cfg.a_aa = 2.8e-9;
  cfg.a_bb = 3.4e-9;
  cfg.a_ab = 3.4e-9;
  cfg.omega_a = c::two_pi * 20.0;
  cfg.omega_b = c::two_pi * 500.0;
  cfg.L1 = 0.01;
  cfg.L3 = 2e-42;
  cfg.N_total = 1e5;
  return cfg;
}

BecConfig rb_figS5() {
  BecConfig cfg;
  cfg.species = "Rb87";
  cfg.atom_mass = c::mass_rb87;
  cfg.a_aa = 100.44 * c::bohr_radius;
  cfg.a_bb = 95.47 * c::bohr_radius;
  cfg.a_ab = 88.28 * c::bohr_radius;
  cfg.omega_a = c::two_pi * 20.0;
  cfg.omega_b = c::two_pi * 500.0;
  cfg.L1 = 0.01;
  cfg.L2_aa = 0.0;
  cfg.L2_bb = 119e-21;
  cfg.L2_ab = 78e-21;
  cfg.L3 = 6e-42;
  cfg.N_total = 1e5;
  return cfg;
}

BecConfig by_name(const std::string& name) {
  if (name == "na-fig2") return na_fig2();
  if (name == "rb-figS5") return rb_figS5();
  throw InvalidArgument("unknown preset '" + name +
                        "' (valid: na-fig2, rb-figS5)");
}

}  // namespace presets

}  // namespace spincat
