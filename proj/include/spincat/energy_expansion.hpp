#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spincat/config.hpp"
#include "spincat/radial_gpe.hpp"

namespace spincat {

/// Ground-state energies E(N - n, n) sampled over the small-component
/// occupation n.
struct EnergyCurve {
  double N = 0.0;
  std::vector<double> n_values;
  std::vector<double> energies;  // J
  BecConfig config;
  SolverSettings solver;  // r_max always filled, so reruns reuse the grid
};

/// E(N, n) / hbar = sum_k eta_k n^k.
struct EtaExpansion {
  std::vector<double> eta;  // rad/s
  std::optional<std::vector<double>> eta_prime;  // rad/s per atom
  double N = 0.0;
  std::pair<double, double> n_range{0.0, 0.0};
  double rms_residual = 0.0;  // J
  BecConfig config;

  [[nodiscard]] double coefficient(std::size_t k) const {
    return k < eta.size() ? eta[k] : 0.0;
  }
  /// sum_k eta_k n^k, optionally dropping the k = 0, 1 frame terms.
  [[nodiscard]] double phase_rate(double n, bool rotating_frame = false) const;
  /// Copy with eta_k -> eta_k + eta_k' dN (first order in the atom number).
  [[nodiscard]] EtaExpansion shifted_in_N(double dN) const;
  /// Pure Kerr expansion with only eta_2 set.
  static EtaExpansion kerr(double eta2);
};

struct DephasingReport {
  double phi_prime = 0.0;  // rad per atom
  double delta_phi = 0.0;  // rad
  double delta_N = 0.0;
  double nbar = 0.0;
  double tau_c = 0.0;  // s
  bool within_tolerance = false;  // |delta_phi| <= 1
};

/// Relaxes (N - n, n) for n = 0, stride, ..., n_max. Samples run on the
/// OpenMP pool.
[[nodiscard]] EnergyCurve sample_energy_curve(const BecConfig& config, double N,
                                              int n_max, int stride,
                                              const SolverSettings& solver = {});

/// Least-squares polynomial fit of degree `degree` in n (centred and scaled
/// basis). No derivatives.
[[nodiscard]] EtaExpansion fit_polynomial(const EnergyCurve& curve,
                                          int degree = 4);

struct FitOptions {
  int degree = 4;
  bool with_derivatives = false;
  double dN = 0.0;  // 0 selects 0.01 N
};

/// Fits the curve; with derivatives the sampling is repeated at N +- dN on
/// the same grid and eta_k' obtained by central differences.
[[nodiscard]] EtaExpansion fit_eta(const EnergyCurve& curve,
                                   const FitOptions& options = {});

/// tau_c = pi / (2 |eta_2|).
[[nodiscard]] double cat_time(double eta2);

/// First-order perturbative eta_1 (five terms), rad/s.
[[nodiscard]] double eta1_perturbative(const BecConfig& config, double N);

/// High-trap limit eta_2 = U_bb (m omega_b / 2 pi hbar)^(3/2) / (2 hbar).
[[nodiscard]] double eta2_gaussian_limit(const BecConfig& config);

[[nodiscard]] DephasingReport dephasing_angle(const EtaExpansion& eta,
                                              double nbar, double delta_N);

[[nodiscard]] nlohmann::json to_json(const BecConfig& config);
[[nodiscard]] BecConfig bec_config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const EtaExpansion& eta);
[[nodiscard]] EtaExpansion eta_from_json(const nlohmann::json& j);

}  // namespace spincat
