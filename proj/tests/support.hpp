#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "spincat/config.hpp"
#include "spincat/constants.hpp"
#include "spincat/energy_expansion.hpp"

namespace spincat::testing {

inline BecConfig na_at(double hz) {
  auto cfg = presets::na_fig2();
  cfg.omega_b = constants::two_pi * hz;
  return cfg;
}

inline EnergyCurve na_curve(double hz, const SolverSettings& solver = {}) {
  const auto cfg = na_at(hz);
  return sample_energy_curve(cfg, cfg.N_total, 200, 10, solver);
}

inline EtaExpansion fit_na(double hz, bool derivatives = false, double dN = 0.0) {
  FitOptions o;
  o.with_derivatives = derivatives;
  o.dN = dN;
  return fit_eta(na_curve(hz), o);
}

/// First sign change of y(x), located by linear interpolation.
inline std::optional<double> zero_crossing(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((y[i - 1] < 0.0) != (y[i] < 0.0)) {
      return x[i - 1] - y[i - 1] * (x[i] - x[i - 1]) / (y[i] - y[i - 1]);
    }
  }
  return std::nullopt;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace spincat::testing
