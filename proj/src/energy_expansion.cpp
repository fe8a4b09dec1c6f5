#include "spincat/energy_expansion.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "spincat/constants.hpp"
#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"

namespace spincat {

namespace c = constants;

double EtaExpansion::phase_rate(double n, bool rotating_frame) const {
  double acc = 0.0;
  double p = 1.0;
  for (std::size_t k = 0; k < eta.size(); ++k) {
    if (!(rotating_frame && k < 2)) acc += eta[k] * p;
    p *= n;
  }
  return acc;
}

EtaExpansion EtaExpansion::shifted_in_N(double dN) const {
  if (!eta_prime) {
    throw InvalidArgument("shifted_in_N: expansion carries no N-derivatives");
  }
  EtaExpansion out = *this;
  for (std::size_t k = 0; k < out.eta.size() && k < eta_prime->size(); ++k) {
    out.eta[k] += (*eta_prime)[k] * dN;
  }
  out.N = N + dN;
  return out;
}

EtaExpansion EtaExpansion::kerr(double eta2) {
  EtaExpansion e;
  e.eta = {0.0, 0.0, eta2, 0.0, 0.0};
  return e;
}

EnergyCurve sample_energy_curve(const BecConfig& config, double N, int n_max,
                                int stride, const SolverSettings& solver) {
  config.validate();
  if (stride < 1) throw InvalidArgument("sample_energy_curve: stride must be >= 1");
  if (n_max < 0) throw InvalidArgument("sample_energy_curve: n_max must be >= 0");
  if (static_cast<double>(n_max) > N / 10.0) {
    throw InvalidArgument("sample_energy_curve: n_max must not exceed N/10");
  }
  BecConfig cfg = config;
  cfg.N_total = N;
  EnergyCurve curve;
  curve.N = N;
  curve.config = cfg;
  curve.solver = solver;
  const RadialGrid grid = build_grid(cfg, solver);
  curve.solver.r_max = grid.r_max;
  for (int n = 0; n <= n_max; n += stride) curve.n_values.push_back(n);
  curve.energies.resize(curve.n_values.size());

  const RelaxOptions opts{solver.tol, solver.max_steps, false};
  kernels::parallel::for_each_index(curve.n_values.size(), [&](std::size_t i) {
    const double n = curve.n_values[i];
    const auto state = relax_ground_state(cfg, N - n, n, grid, opts);
    if (!state.converged) {
      throw ConvergenceError("sample_energy_curve: relaxation at n = " +
                             std::to_string(static_cast<long>(n)) +
                             " did not converge");
    }
    curve.energies[i] = state.energy;
  });
  return curve;
}

EtaExpansion fit_polynomial(const EnergyCurve& curve, int degree) {
  const std::size_t m = curve.n_values.size();
  if (degree < 0) throw InvalidArgument("fit: degree must be >= 0");
  if (m < static_cast<std::size_t>(degree) + 2) {
    throw InvalidArgument("fit: need at least degree + 2 samples");
  }
  const double lo = curve.n_values.front();
  const double hi = curve.n_values.back();
  const double centre = 0.5 * (lo + hi);
  const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
  // Offsetting by the first sample keeps the right-hand side O(dE).
  const double offset = curve.energies.front() / c::hbar;

  const int cols = degree + 1;
  Eigen::MatrixXd A(m, cols);
  Eigen::VectorXd y(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = (curve.n_values[i] - centre) / half;
    double p = 1.0;
    for (int k = 0; k < cols; ++k) {
      A(i, k) = p;
      p *= t;
    }
    y(i) = curve.energies[i] / c::hbar - offset;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < cols) throw FitError("fit: rank-deficient design matrix");
  const Eigen::VectorXd b = qr.solve(y);

  // Map sum_j b_j ((n - c)/h)^j back to the monomial basis in n.
  std::vector<double> eta(cols, 0.0);
  for (int j = 0; j < cols; ++j) {
    const double bj = b(j) / std::pow(half, j);
    double binom = 1.0;
    for (int k = 0; k <= j; ++k) {
      // C(j, k) (-c)^(j-k)
      eta[k] += bj * binom * std::pow(-centre, j - k);
      binom = binom * (j - k) / (k + 1);
    }
  }
  eta[0] += offset;

  const Eigen::VectorXd resid = A * b - y;
  EtaExpansion out;
  out.eta = std::move(eta);
  out.N = curve.N;
  out.n_range = {lo, hi};
  out.rms_residual = std::sqrt(resid.squaredNorm() / static_cast<double>(m)) * c::hbar;
  out.config = curve.config;
  for (double v : out.eta) {
    if (!std::isfinite(v)) throw FitError("fit: non-finite coefficient");
  }
  return out;
}

EtaExpansion fit_eta(const EnergyCurve& curve, const FitOptions& options) {
  EtaExpansion central = fit_polynomial(curve, options.degree);
  if (!options.with_derivatives) return central;

  const double dN = options.dN > 0.0 ? options.dN : 0.01 * curve.N;
  const int n_max = static_cast<int>(curve.n_values.back());
  const int stride = curve.n_values.size() > 1
                         ? static_cast<int>(curve.n_values[1] - curve.n_values[0])
                         : 1;
  const auto plus = fit_polynomial(
      sample_energy_curve(curve.config, curve.N + dN, n_max, stride, curve.solver),
      options.degree);
  const auto minus = fit_polynomial(
      sample_energy_curve(curve.config, curve.N - dN, n_max, stride, curve.solver),
      options.degree);
  std::vector<double> prime(central.eta.size());
  for (std::size_t k = 0; k < prime.size(); ++k) {
    prime[k] = (plus.eta[k] - minus.eta[k]) / (2.0 * dN);
  }
  central.eta_prime = std::move(prime);
  return central;
}

double cat_time(double eta2) {
  if (eta2 == 0.0 || !std::isfinite(eta2)) {
    throw DivergentCatTime("cat_time: eta_2 = 0, the Kerr phase never builds up");
  }
  return c::pi / (2.0 * std::abs(eta2));
}

double eta1_perturbative(const BecConfig& config, double N) {
  const double mu_a0 = tfa_chemical_potential(config, N, config.omega_a, config.a_aa);
  const double ratio = config.U_ab() / config.U_aa();
  const double s_b = config.s_b();
  const double hbar_eta1 =
      -mu_a0 + 1.5 * c::hbar * config.omega_b + ratio * mu_a0 -
      0.75 * ratio * (config.omega_a / config.omega_b) * c::hbar * config.omega_a -
      config.U_bb() / std::pow(std::sqrt(2.0) * s_b, 3);
  return hbar_eta1 / c::hbar;
}

double eta2_gaussian_limit(const BecConfig& config) {
  const double k = config.atom_mass * config.omega_b / (2.0 * c::pi * c::hbar);
  return config.U_bb() * std::pow(k, 1.5) / (2.0 * c::hbar);
}

DephasingReport dephasing_angle(const EtaExpansion& eta, double nbar,
                                double delta_N) {
  if (!eta.eta_prime) {
    throw InvalidArgument("dephasing_angle: expansion has no N-derivatives");
  }
  const double eta2 = eta.coefficient(2);
  if (eta2 == 0.0) throw DivergentCatTime("dephasing_angle: eta_2 = 0");
  double sum = 0.0;
  const auto& prime = *eta.eta_prime;
  for (std::size_t k = 1; k < prime.size() && k <= 4; ++k) {
    sum += static_cast<double>(k) * std::pow(nbar, static_cast<double>(k) - 1.0) *
           prime[k];
  }
  DephasingReport r;
  r.phi_prime = c::pi / (2.0 * eta2) * sum;
  r.delta_phi = r.phi_prime * delta_N;
  r.delta_N = delta_N;
  r.nbar = nbar;
  r.tau_c = cat_time(eta2);
  r.within_tolerance = std::abs(r.delta_phi) <= 1.0;
  return r;
}

nlohmann::json to_json(const BecConfig& cfg) {
  return {{"species", cfg.species},   {"atom_mass_kg", cfg.atom_mass},
          {"a_aa_m", cfg.a_aa},       {"a_bb_m", cfg.a_bb},
          {"a_ab_m", cfg.a_ab},       {"omega_a_rad_s", cfg.omega_a},
          {"omega_b_rad_s", cfg.omega_b}, {"L1_per_s", cfg.L1},
          {"L2_aa_m3_s", cfg.L2_aa},  {"L2_bb_m3_s", cfg.L2_bb},
          {"L2_ab_m3_s", cfg.L2_ab},  {"L3_m6_s", cfg.L3},
          {"N_total", cfg.N_total}};
}

BecConfig bec_config_from_json(const nlohmann::json& j) {
  BecConfig cfg;
  cfg.species = j.value("species", std::string("custom"));
  cfg.atom_mass = j.at("atom_mass_kg").get<double>();
  cfg.a_aa = j.at("a_aa_m").get<double>();
  cfg.a_bb = j.at("a_bb_m").get<double>();
  cfg.a_ab = j.at("a_ab_m").get<double>();
  cfg.omega_a = j.at("omega_a_rad_s").get<double>();
  cfg.omega_b = j.at("omega_b_rad_s").get<double>();
  cfg.L1 = j.value("L1_per_s", 0.0);
  cfg.L2_aa = j.value("L2_aa_m3_s", 0.0);
  cfg.L2_bb = j.value("L2_bb_m3_s", 0.0);
  cfg.L2_ab = j.value("L2_ab_m3_s", 0.0);
  cfg.L3 = j.value("L3_m6_s", 0.0);
  cfg.N_total = j.value("N_total", 1.0);
  return cfg;
}

nlohmann::json to_json(const EtaExpansion& eta) {
  nlohmann::json j;
  j["N"] = eta.N;
  j["omega_b_Hz"] = eta.config.omega_b / c::two_pi;
  for (std::size_t k = 0; k < 5; ++k) {
    j["eta" + std::to_string(k)] = eta.coefficient(k);
  }
  if (eta.eta_prime) {
    j["eta_prime"] = *eta.eta_prime;
  } else {
    j["eta_prime"] = nullptr;
  }
  j["rms_residual"] = eta.rms_residual;
  j["n_range"] = {eta.n_range.first, eta.n_range.second};
  j["config"] = to_json(eta.config);
  return j;
}

EtaExpansion eta_from_json(const nlohmann::json& j) {
  EtaExpansion e;
  e.N = j.value("N", 0.0);
  for (int k = 0; k < 5; ++k) {
    e.eta.push_back(j.value("eta" + std::to_string(k), 0.0));
  }
  if (j.contains("eta_prime") && !j["eta_prime"].is_null()) {
    e.eta_prime = j["eta_prime"].get<std::vector<double>>();
  }
  e.rms_residual = j.value("rms_residual", 0.0);
  if (j.contains("n_range")) {
    e.n_range = {j["n_range"][0].get<double>(), j["n_range"][1].get<double>()};
  }
  if (j.contains("config")) e.config = bec_config_from_json(j["config"]);
  return e;
}

}  // namespace spincat
