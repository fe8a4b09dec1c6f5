#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "spincat/energy_expansion.hpp"
#include "spincat/fock.hpp"
#include "spincat/phase_space.hpp"

namespace spincat {

/// One-body loss of the small component, Lindblad operator sqrt(L1) a.
struct TrajectoryConfig {
  EtaExpansion eta;
  double alpha = 0.0;
  double L1 = 0.0;       // 1/s
  double t_final = 0.0;  // s
  int n_traj = 5000;
  std::uint64_t seed = 0;
  int n_max = 0;  // 0 selects default_truncation(alpha^2)
  bool rotating_frame = false;

  void validate() const;
  [[nodiscard]] int truncation() const;
};

struct Trajectory {
  FockState state;
  std::vector<double> jump_times;  // s, strictly increasing
};

struct TrajectoryEnsemble {
  std::vector<FockState> final_states;
  std::vector<int> jump_counts;
  std::vector<std::vector<double>> jump_times;
  std::uint64_t seed = 0;
  double t_final = 0.0;

  [[nodiscard]] std::size_t size() const { return final_states.size(); }
};

/// Per-trajectory stream: mt19937_64 seeded from splitmix64(seed, index).
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t index);
  /// Uniform on (0, 1), 53-bit resolution.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

/// Exact event-driven unraveling. Between jumps the amplitudes evolve as
/// c_n exp(-i t sum eta_k n^k - L1 n t / 2); the jump time solves
/// ||psi(t)||^2 = u by bisection.
[[nodiscard]] Trajectory run_trajectory(const TrajectoryConfig& config,
                                        std::uint64_t traj_index);

[[nodiscard]] TrajectoryEnsemble run_ensemble(
    const TrajectoryConfig& config, KernelMode mode = KernelMode::parallel);

/// rho = (1/M) sum_j |psi_j><psi_j|.
[[nodiscard]] DensityMatrix ensemble_density(const TrajectoryEnsemble& ensemble);

/// Ensemble Husimi, evaluated as the Q of the averaged density matrix.
[[nodiscard]] PolarGrid ensemble_q(const TrajectoryEnsemble& ensemble,
                                   const GridSpec& spec,
                                   KernelMode mode = KernelMode::parallel);

/// Same quantity as the mean of per-trajectory pure-state Q grids.
[[nodiscard]] PolarGrid ensemble_q_by_trajectory(const TrajectoryEnsemble& ensemble,
                                                 const GridSpec& spec);

struct SampleMean {
  double mean = 0.0;
  double standard_error = 0.0;
};

[[nodiscard]] SampleMean mean_jumps(const TrajectoryEnsemble& ensemble);
[[nodiscard]] SampleMean mean_photon_number(const TrajectoryEnsemble& ensemble);
[[nodiscard]] std::vector<int> jump_histogram(const TrajectoryEnsemble& ensemble);

/// Subset of trajectories with exactly `jumps` jumps.
[[nodiscard]] TrajectoryEnsemble select_by_jumps(const TrajectoryEnsemble& ensemble,
                                                 int jumps);

/// {n_traj, seed, mean_jumps, jump_histogram, t_final}
[[nodiscard]] nlohmann::json summary_json(const TrajectoryEnsemble& ensemble);

}  // namespace spincat
