#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "spincat/constants.hpp"
#include "spincat/energy_expansion.hpp"
#include "spincat/errors.hpp"
#include "support.hpp"

using namespace spincat;
using namespace spincat::testing;
namespace c = spincat::constants;

namespace {

EnergyCurve polynomial_curve(const std::vector<double>& eta, int n_max, int stride,
                             double unit = 1.0) {
  EnergyCurve curve;
  curve.N = 1e5;
  curve.config = presets::na_fig2();
  for (int i = 0; i <= n_max; i += stride) {
    const double n = i * unit;
    double e = 0.0, p = 1.0;
    for (double k : eta) {
      e += k * p;
      p *= n;
    }
    curve.n_values.push_back(n);
    curve.energies.push_back(c::hbar * e);
  }
  return curve;
}

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("sample_energy_curve layout and preconditions") {
  const auto cfg = na_at(500);
  const auto curve = sample_energy_curve(cfg, cfg.N_total, 200, 10);
  REQUIRE(curve.n_values.size() == 21u);
  CHECK(curve.n_values.front() == 0.0);
  CHECK(curve.n_values.back() == 200.0);
  CHECK(std::is_sorted(curve.n_values.begin(), curve.n_values.end()));
  CHECK(curve.solver.r_max.has_value());

  const auto single = sample_energy_curve(cfg, cfg.N_total, 0, 10);
  CHECK(single.n_values.size() == 1u);
  CHECK(single.energies[0] == doctest::Approx(curve.energies[0]).epsilon(1e-14));

  CHECK_THROWS_AS((void)sample_energy_curve(cfg, 1000, 101, 10), InvalidArgument);
  CHECK_THROWS_AS((void)sample_energy_curve(cfg, cfg.N_total, 200, 0), InvalidArgument);
}

TEST_CASE("exact recovery of a quartic") {
  const std::vector<double> eta{1, 2, 3, 4, 5};
  const auto fit = fit_polynomial(polynomial_curve(eta, 10, 1), 4);
  for (int k = 0; k <= 4; ++k) CHECK(relative(fit.coefficient(k), eta[k]) < 1e-10);
  CHECK(fit.rms_residual < 1e-10 * c::hbar);
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS((void)fit_polynomial(polynomial_curve({1, 2}, 40, 10), 4),
                  InvalidArgument);
  auto flat = polynomial_curve({1, 2}, 50, 10);
  std::fill(flat.n_values.begin(), flat.n_values.end(), 7.0);
  CHECK_THROWS_AS((void)fit_polynomial(flat, 4), FitError);
}

TEST_CASE("fit idempotence") {
  // Nodes on [0, 1] keep every term of the same size.
  const auto first = fit_polynomial(polynomial_curve({1, -2, 3, -4, 5}, 20, 1, 0.05), 4);
  const auto again = fit_polynomial(polynomial_curve(first.eta, 20, 1, 0.05), 4);
  for (int k = 0; k <= 4; ++k) CHECK(relative(again.coefficient(k), first.coefficient(k)) < 1e-12);
}

// On the physical curve eta_0 n^0 dwarfs eta_4 n^4, so one ulp of input rounding
// already moves eta_4 by ~1e-9; the refit is checked for backward stability.
TEST_CASE("refit of the star curve is backward stable") {
  const auto curve = na_curve(500);
  const auto first = fit_eta(curve);
  EnergyCurve rebuilt = curve;
  for (std::size_t i = 0; i < curve.n_values.size(); ++i) {
    rebuilt.energies[i] = c::hbar * first.phase_rate(curve.n_values[i]);
  }
  const auto second = fit_eta(rebuilt);
  const double ulp = std::abs(rebuilt.energies.back()) * 2.220446049250313e-16;
  CHECK(second.rms_residual < 4.0 * ulp);
  for (std::size_t i = 0; i < curve.n_values.size(); ++i) {
    CHECK(std::abs(c::hbar * second.phase_rate(curve.n_values[i]) - rebuilt.energies[i]) <
          8.0 * ulp);
  }
  CHECK(relative(second.coefficient(0), first.coefficient(0)) < 1e-12);
  CHECK(relative(second.coefficient(1), first.coefficient(1)) < 1e-12);
}

TEST_CASE("star-point expansion") {
  const auto curve = na_curve(500);
  const auto eta = fit_eta(curve);
  CHECK(eta.coefficient(2) > 0.0);
  CHECK(eta.coefficient(3) < 0.0);
  CHECK(cat_time(eta.coefficient(2)) == doctest::Approx(0.646).epsilon(0.10));
  const double span = std::abs(curve.energies.back() - curve.energies.front());
  CHECK(eta.rms_residual < 1e-4 * span);
  CHECK(eta.n_range.first == 0.0);
  CHECK(eta.n_range.second == 200.0);

  const auto j = to_json(eta);
  CHECK(j.contains("omega_b_Hz"));
  const auto back = eta_from_json(j);
  for (int k = 0; k <= 4; ++k) CHECK(back.coefficient(k) == eta.coefficient(k));
  CHECK(back.rms_residual == eta.rms_residual);
}

TEST_CASE("quartic model adequacy across the sweep") {
  for (double hz : {30.0, 50.0, 55.0, 60.0, 100.0, 250.0, 500.0, 750.0, 1000.0}) {
    CAPTURE(hz);
    const auto eta = fit_na(hz);
    CHECK(eta.rms_residual / c::hbar < 1e-3 * std::abs(eta.coefficient(2)) * 200.0 * 200.0);
  }
}

TEST_CASE("cat_time") {
  CHECK(cat_time(2.0) == doctest::Approx(c::pi / 4.0).epsilon(1e-15));
  CHECK(cat_time(-2.0) == cat_time(2.0));
  CHECK(cat_time(4.0) == doctest::Approx(0.5 * cat_time(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS((void)cat_time(0.0), DivergentCatTime);
}

TEST_CASE("perturbative eta_1") {
  // Frozen from an independent 30-digit evaluation of the five-term formula.
  CHECK(eta1_perturbative(na_at(500), 1e5) ==
        doctest::Approx(4902.92287701755773).epsilon(1e-12));

  // a_ab = a_aa: the mu_a0 terms cancel, leaving only omega_b-dependent terms.
  for (double hz : {200.0, 2000.0, 20000.0}) {
    auto cfg = na_at(hz);
    cfg.a_ab = cfg.a_aa;
    const double sb = cfg.s_b();
    const double expected =
        1.5 * cfg.omega_b - cfg.U_bb() * std::pow(std::sqrt(2.0) * sb, -3.0) / c::hbar -
        0.75 * cfg.omega_a * cfg.omega_a / cfg.omega_b;
    CHECK(eta1_perturbative(cfg, 1e5) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("Gaussian-limit eta_2") {
  CHECK(eta2_gaussian_limit(na_at(1000)) ==
        doctest::Approx(12.8532383202857843).epsilon(1e-12));
  const double ratio = eta2_gaussian_limit(na_at(1000)) / eta2_gaussian_limit(na_at(500));
  CHECK(std::log(ratio) / std::log(2.0) == doctest::Approx(1.5).epsilon(1e-12));
  auto heavy = na_at(500);
  heavy.atom_mass *= 2.0;
  CHECK(eta2_gaussian_limit(heavy) / eta2_gaussian_limit(na_at(500)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("N-derivatives are stable under step halving") {
  const auto coarse = fit_na(500, true, 1000.0);
  const auto fine = fit_na(500, true, 500.0);
  REQUIRE(coarse.eta_prime.has_value());
  REQUIRE(fine.eta_prime.has_value());
  for (int k : {1, 2}) {
    CAPTURE(k);
    CHECK(relative((*fine.eta_prime)[k], (*coarse.eta_prime)[k]) < 0.05);
  }
}

TEST_CASE("dephasing angle") {
  const auto eta = fit_na(500, true);
  const auto r = dephasing_angle(eta, 100, 0.05 * 1e5);
  CHECK(r.delta_phi == r.phi_prime * r.delta_N);
  CHECK(std::abs(r.delta_phi) == doctest::Approx(0.5).epsilon(0.3));
  CHECK(dephasing_angle(eta, 100, 0.0).delta_phi == 0.0);
  CHECK_THROWS_AS((void)dephasing_angle(fit_na(500), 100, 10.0), InvalidArgument);

  // phi' = tau_c sum_k k nbar^(k-1) eta_k'.
  double sum = 0.0;
  for (int k = 1; k <= 4; ++k) sum += k * std::pow(100.0, k - 1) * (*eta.eta_prime)[k];
  CHECK(r.phi_prime == doctest::Approx(cat_time(eta.coefficient(2)) * sum).epsilon(1e-12));
}

TEST_CASE("phi' magnitude is smallest near 600 Hz") {
  std::vector<double> hz{300, 400, 500, 550, 600, 650, 700, 800, 900, 1000};
  std::vector<double> phi;
  for (double f : hz) phi.push_back(dephasing_angle(fit_na(f, true), 100, 1.0).phi_prime);
  const auto zero = zero_crossing(hz, phi);
  double at = 0.0;
  if (zero) {
    at = *zero;
  } else {
    std::size_t best = 0;
    for (std::size_t i = 1; i < hz.size(); ++i) {
      if (std::abs(phi[i]) < std::abs(phi[best])) best = i;
    }
    at = hz[best];
  }
  CHECK(at == doctest::Approx(600.0).epsilon(0.20));
}

TEST_CASE("eta_2 and eta_3 sign changes") {
  std::vector<double> low, e2;
  for (double hz = 30; hz <= 80; hz += 5) {
    low.push_back(hz);
    e2.push_back(fit_na(hz).coefficient(2));
  }
  const auto z2 = zero_crossing(low, e2);
  REQUIRE(z2.has_value());
  CHECK(*z2 == doctest::Approx(55.0).epsilon(0.10));

  std::vector<double> mid, e3;
  for (double hz = 250; hz <= 500; hz += 25) {
    mid.push_back(hz);
    e3.push_back(fit_na(hz).coefficient(3));
  }
  const auto z3 = zero_crossing(mid, e3);
  REQUIRE(z3.has_value());
  CHECK(*z3 == doctest::Approx(375.0).epsilon(0.15));
}

TEST_CASE("eta_2 scaling between 500 and 1500 Hz") {
  std::vector<double> hz, e2;
  for (double f = 500; f <= 1500; f += 100) {
    hz.push_back(f);
    e2.push_back(fit_na(f).coefficient(2));
  }
  CHECK(loglog_slope(hz, e2) == doctest::Approx(1.5).epsilon(0.1 / 1.5));
}
