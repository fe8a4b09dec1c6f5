#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spincat/energy_expansion.hpp"
#include "spincat/fock.hpp"

namespace spincat {

/// Husimi Q sampled on a polar grid beta = s e^{i theta}. values are
/// row-major with s as the slow index.
struct PolarGrid {
  std::vector<double> s_axis;
  std::vector<double> theta_axis;
  std::vector<double> values;

  [[nodiscard]] std::size_t n_s() const { return s_axis.size(); }
  [[nodiscard]] std::size_t n_theta() const { return theta_axis.size(); }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const {
    return values[i * theta_axis.size() + j];
  }
  [[nodiscard]] double max_value() const;
  /// \int Q s ds dtheta by the trapezoid rule (periodic in theta).
  [[nodiscard]] double integral() const;
};

/// Uniform s in [0, s_max] and theta_j = 2 pi j / n_theta.
struct GridSpec {
  int n_s = 256;
  int n_theta = 512;
  double s_max = 15.0;

  /// Default grid for a coherent amplitude alpha: s in [0, alpha + 5].
  static GridSpec for_alpha(double alpha, int n_s = 256, int n_theta = 512);
};

/// Truncation n_max = ceil(nbar + max(30, 12 sqrt(nbar))).
[[nodiscard]] int default_truncation(double nbar);

[[nodiscard]] FockState coherent_state(cplx alpha, int n_max);

/// Phase-only update c_n <- c_n exp(-i t sum_k eta_k n^k).
[[nodiscard]] FockState evolve(const FockState& state, const EtaExpansion& eta,
                               double t, bool rotating_frame = false);

enum class KernelMode { parallel, serial };

[[nodiscard]] PolarGrid q_function(const FockState& state, const GridSpec& spec,
                                   KernelMode mode = KernelMode::parallel);
[[nodiscard]] PolarGrid q_function(const DensityMatrix& rho,
                                   const GridSpec& spec,
                                   KernelMode mode = KernelMode::parallel);
/// Single-point evaluation, O(n_max).
[[nodiscard]] double q_value(const FockState& state, double s, double theta);
[[nodiscard]] double q_value(const DensityMatrix& rho, double s, double theta);

struct LossyQOptions {
  bool rotating_frame = false;
  std::optional<int> n_max;  // default_truncation(alpha^2) when empty
};

/// Q after a beam splitter that removes the fraction r_sq of the light,
/// for an initial coherent state evolved for time t.
[[nodiscard]] PolarGrid q_function_lossy(double alpha, const EtaExpansion& eta,
                                         double t, double r_sq,
                                         const GridSpec& spec,
                                         const LossyQOptions& options = {});

/// Average over a Gaussian spread (standard deviation delta_N) of the total
/// atom number, with eta_k(N + dN) = eta_k + eta_k' dN. Exact: each element
/// picks up exp(-(t delta_N sum_k eta_k' (n^k - m^k))^2 / 2).
[[nodiscard]] DensityMatrix dephased_state(double alpha, const EtaExpansion& eta,
                                           double t, double delta_N,
                                           bool rotating_frame = false);

struct Peak {
  double s = 0.0;
  double theta = 0.0;
  double q = 0.0;
  std::size_t i = 0;  // s index
  std::size_t j = 0;  // theta index
};

struct PeakSet {
  std::vector<Peak> peaks;  // sorted by q, descending
  std::uint64_t grid_id = 0;
};

/// Identity hash of a grid (axes and values).
[[nodiscard]] std::uint64_t grid_identity(const PolarGrid& grid);

/// Strict maxima over the 8 neighbours (theta periodic) above min_height.
[[nodiscard]] PeakSet find_peaks(const PolarGrid& grid, double min_height);

/// Peak heights re-evaluated off-grid at the vertex of a local quadratic
/// through the 3x3 neighbourhood.
[[nodiscard]] PeakSet refine_peaks(const PeakSet& peaks, const PolarGrid& grid,
                                   const FockState& state);

struct BestCatOptions {
  double window_lo = 0.8;  // in units of tau_c
  double window_hi = 1.6;
  int n_times = 81;
  GridSpec scan_grid{128, 256, 0.0};  // s_max 0 -> alpha + 5
  bool rotating_frame = true;
};

struct BestCatTime {
  double tau_c = 0.0;
  double tau_c_star = 0.0;
  double ratio = 0.0;
  PeakSet peaks;
  bool well_defined = true;
};

/// Time in the window where the second-highest Q peak is largest.
[[nodiscard]] BestCatTime best_cat_time(const EtaExpansion& eta, double alpha,
                                        const BestCatOptions& options = {});

/// s, theta, Q rows with a '#' preamble.
void write_q_csv(std::ostream& out, const PolarGrid& grid,
                 const std::vector<std::string>& preamble = {});
/// "QFLD", u32 n_s, u32 n_theta (little endian), then n_s * n_theta f64.
void write_q_binary(std::ostream& out, const PolarGrid& grid);
[[nodiscard]] PolarGrid read_q_binary(std::istream& in);

}  // namespace spincat
