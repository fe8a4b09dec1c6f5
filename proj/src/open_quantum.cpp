#include "spincat/open_quantum.hpp"

#include <algorithm>
#include <cmath>

#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"

namespace spincat {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// sum_n |c_n|^2 exp(-L1 n tau)
double no_jump_norm(const std::vector<double>& pop, double L1, double tau) {
  double acc = 0.0;
  for (std::size_t n = 0; n < pop.size(); ++n) {
    if (pop[n] != 0.0) acc += pop[n] * std::exp(-L1 * static_cast<double>(n) * tau);
  }
  return acc;
}

void damp(FockState& state, double L1, double tau) {
  if (L1 == 0.0) return;
  for (std::size_t n = 0; n < state.amplitudes.size(); ++n) {
    state.amplitudes[n] *= std::exp(-0.5 * L1 * static_cast<double>(n) * tau);
  }
}

void annihilate(FockState& state) {
  auto& c = state.amplitudes;
  for (std::size_t n = 1; n < c.size(); ++n) c[n - 1] = std::sqrt(static_cast<double>(n)) * c[n];
  c.back() = 0.0;
}

}  // namespace

void TrajectoryConfig::validate() const {
  if (!(L1 >= 0.0)) throw InvalidArgument("trajectory: L1 must be >= 0");
  if (n_traj < 1) throw InvalidArgument("trajectory: n_traj must be >= 1");
  if (!(t_final >= 0.0)) throw InvalidArgument("trajectory: t_final must be >= 0");
  if (n_max < 0) throw InvalidArgument("trajectory: n_max must be >= 0");
}

int TrajectoryConfig::truncation() const {
  return n_max > 0 ? n_max : default_truncation(alpha * alpha);
}

TrajectoryRng::TrajectoryRng(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed;
  const std::uint64_t a = splitmix64(x);
  x = a ^ index;
  const std::uint64_t b = splitmix64(x);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

double TrajectoryRng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

Trajectory run_trajectory(const TrajectoryConfig& config, std::uint64_t traj_index) {
  config.validate();
  Trajectory out;
  out.state = coherent_state(config.alpha, config.truncation());
  TrajectoryRng rng(config.seed, traj_index);
  const double L1 = config.L1;

  double t = 0.0;
  std::vector<double> pop(out.state.amplitudes.size());
  while (t < config.t_final) {
    const double remaining = config.t_final - t;
    for (std::size_t n = 0; n < pop.size(); ++n) pop[n] = std::norm(out.state.amplitudes[n]);
    const double u = rng.uniform();
    if (L1 == 0.0 || no_jump_norm(pop, L1, remaining) > u) {
      out.state = evolve(out.state, config.eta, remaining, config.rotating_frame);
      damp(out.state, L1, remaining);
      out.state.normalize();
      break;
    }
    double lo = 0.0, hi = remaining;
    while (hi - lo > 1e-12 * hi) {
      const double mid = 0.5 * (lo + hi);
      if (no_jump_norm(pop, L1, mid) > u) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double tau = hi;
    out.state = evolve(out.state, config.eta, tau, config.rotating_frame);
    damp(out.state, L1, tau);
    annihilate(out.state);
    out.state.normalize();
    t += tau;
    if (!out.jump_times.empty() && !(t > out.jump_times.back())) {
      t = std::nextafter(out.jump_times.back(), config.t_final);
    }
    out.jump_times.push_back(t);
  }
  return out;
}

TrajectoryEnsemble run_ensemble(const TrajectoryConfig& config, KernelMode mode) {
  config.validate();
  const auto m = static_cast<std::size_t>(config.n_traj);
  std::vector<Trajectory> runs(m);
  auto one = [&](std::size_t j) { runs[j] = run_trajectory(config, j); };
  if (mode == KernelMode::serial) {
    for (std::size_t j = 0; j < m; ++j) one(j);
  } else {
    kernels::parallel::for_each_index(m, one);
  }
  TrajectoryEnsemble ens;
  ens.seed = config.seed;
  ens.t_final = config.t_final;
  ens.final_states.reserve(m);
  for (auto& r : runs) {
    ens.jump_counts.push_back(static_cast<int>(r.jump_times.size()));
    ens.jump_times.push_back(std::move(r.jump_times));
    ens.final_states.push_back(std::move(r.state));
  }
  return ens;
}

DensityMatrix ensemble_density(const TrajectoryEnsemble& ensemble) {
  if (ensemble.size() == 0) throw InvalidArgument("ensemble_density: empty ensemble");
  int dim = 0;
  for (const auto& s : ensemble.final_states) {
    dim = std::max(dim, static_cast<int>(s.amplitudes.size()));
  }
  DensityMatrix rho(dim);
  const double w = 1.0 / static_cast<double>(ensemble.size());
  // Rows are independent; each thread owns a band of rows.
  kernels::parallel::for_each_index(static_cast<std::size_t>(dim), [&](std::size_t row) {
    const int r = static_cast<int>(row);
    for (const auto& s : ensemble.final_states) {
      const auto& c = s.amplitudes;
      if (r >= static_cast<int>(c.size()) || c[r] == 0.0) continue;
      const cplx cr = w * c[r];
      for (int col = 0; col < static_cast<int>(c.size()); ++col) {
        rho(r, col) += cr * std::conj(c[col]);
      }
    }
  });
  return rho;
}

PolarGrid ensemble_q(const TrajectoryEnsemble& ensemble, const GridSpec& spec,
                     KernelMode mode) {
  return q_function(ensemble_density(ensemble), spec, mode);
}

PolarGrid ensemble_q_by_trajectory(const TrajectoryEnsemble& ensemble,
                                   const GridSpec& spec) {
  if (ensemble.size() == 0) throw InvalidArgument("ensemble_q: empty ensemble");
  PolarGrid acc;
  const double w = 1.0 / static_cast<double>(ensemble.size());
  for (const auto& s : ensemble.final_states) {
    auto g = q_function(s, spec, KernelMode::serial);
    if (acc.values.empty()) {
      acc = g;
      std::fill(acc.values.begin(), acc.values.end(), 0.0);
    }
    for (std::size_t k = 0; k < g.values.size(); ++k) acc.values[k] += w * g.values[k];
  }
  return acc;
}

namespace {

SampleMean sample_mean(const std::vector<double>& xs) {
  SampleMean out;
  if (xs.empty()) return out;
  const double m = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / m;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.standard_error = std::sqrt(ss / (m - 1.0) / m);
  }
  return out;
}

}  // namespace

SampleMean mean_jumps(const TrajectoryEnsemble& ensemble) {
  return sample_mean({ensemble.jump_counts.begin(), ensemble.jump_counts.end()});
}

SampleMean mean_photon_number(const TrajectoryEnsemble& ensemble) {
  std::vector<double> xs;
  xs.reserve(ensemble.size());
  for (const auto& s : ensemble.final_states) xs.push_back(s.mean_number());
  return sample_mean(xs);
}

std::vector<int> jump_histogram(const TrajectoryEnsemble& ensemble) {
  std::vector<int> hist;
  for (int k : ensemble.jump_counts) {
    if (k >= static_cast<int>(hist.size())) hist.resize(k + 1, 0);
    ++hist[k];
  }
  return hist;
}

TrajectoryEnsemble select_by_jumps(const TrajectoryEnsemble& ensemble, int jumps) {
  TrajectoryEnsemble out;
  out.seed = ensemble.seed;
  out.t_final = ensemble.t_final;
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    if (ensemble.jump_counts[j] != jumps) continue;
    out.final_states.push_back(ensemble.final_states[j]);
    out.jump_counts.push_back(jumps);
    out.jump_times.push_back(ensemble.jump_times[j]);
  }
  return out;
}

nlohmann::json summary_json(const TrajectoryEnsemble& ensemble) {
  return {{"n_traj", ensemble.size()},
          {"seed", ensemble.seed},
          {"mean_jumps", mean_jumps(ensemble).mean},
          {"jump_histogram", jump_histogram(ensemble)},
          {"t_final", ensemble.t_final}};
}

}  // namespace spincat
