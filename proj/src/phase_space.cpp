#include "spincat/phase_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "spincat/errors.hpp"
#include "spincat/kernels.hpp"

namespace spincat {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> uniform_s(const GridSpec& spec) {
  std::vector<double> s(spec.n_s);
  for (int i = 0; i < spec.n_s; ++i) {
    s[i] = spec.n_s > 1 ? spec.s_max * i / (spec.n_s - 1) : 0.0;
  }
  return s;
}

std::vector<double> uniform_theta(const GridSpec& spec) {
  std::vector<double> t(spec.n_theta);
  for (int j = 0; j < spec.n_theta; ++j) t[j] = 2.0 * kPi * j / spec.n_theta;
  return t;
}

void check_spec(const GridSpec& spec) {
  if (spec.n_s < 2 || spec.n_theta < 3 || !(spec.s_max > 0.0)) {
    throw InvalidArgument("grid spec: need n_s >= 2, n_theta >= 3, s_max > 0");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

double PolarGrid::max_value() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

double PolarGrid::integral() const {
  const std::size_t ns = n_s(), nt = n_theta();
  if (ns < 2 || nt < 1) return 0.0;
  const double dtheta = 2.0 * kPi / static_cast<double>(nt);
  double acc = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < nt; ++j) row += at(i, j);
    const double ds = (i + 1 < ns ? s_axis[i + 1] - s_axis[i] : 0.0);
    const double ds_prev = (i > 0 ? s_axis[i] - s_axis[i - 1] : 0.0);
    acc += row * dtheta * s_axis[i] * 0.5 * (ds + ds_prev);
  }
  return acc;
}

GridSpec GridSpec::for_alpha(double alpha, int n_s, int n_theta) {
  return {n_s, n_theta, std::abs(alpha) + 5.0};
}

int default_truncation(double nbar) {
  return static_cast<int>(std::ceil(nbar + std::max(30.0, 12.0 * std::sqrt(nbar))));
}

FockState coherent_state(cplx alpha, int n_max) {
  const double nbar = std::norm(alpha);
  if (n_max < 0 || n_max < nbar + 10.0 * std::sqrt(nbar)) {
    throw InvalidArgument("coherent_state: n_max must be >= |alpha|^2 + 10 |alpha|");
  }
  FockState st;
  st.amplitudes.resize(static_cast<std::size_t>(n_max) + 1);
  const double mag = std::abs(alpha);
  const double phase = std::arg(alpha);
  if (mag == 0.0) {
    st.amplitudes[0] = 1.0;
    return st;
  }
  const double log_mag = std::log(mag);
  double kept = 0.0;
  const int tail_start = std::max(n_max - 4, 1);
  for (int n = 0; n <= n_max; ++n) {
    const double log_amp = -0.5 * nbar + n * log_mag - 0.5 * std::lgamma(n + 1.0);
    const double a = std::exp(log_amp);
    st.amplitudes[n] = std::polar(a, n * phase);
    if (n < tail_start) kept += a * a;
  }
  if (1.0 - kept >= 1e-10) {
    throw TruncationError("coherent_state: Fock truncation tail exceeds 1e-10");
  }
  st.normalize();
  return st;
}

FockState evolve(const FockState& state, const EtaExpansion& eta, double t,
                 bool rotating_frame) {
  if (t < 0.0) throw InvalidArgument("evolve: t must be >= 0");
  FockState out = state;
  for (std::size_t n = 0; n < out.amplitudes.size(); ++n) {
    const double phase = -t * eta.phase_rate(static_cast<double>(n), rotating_frame);
    out.amplitudes[n] *= std::polar(1.0, std::remainder(phase, 2.0 * kPi));
  }
  return out;
}

PolarGrid q_function(const FockState& state, const GridSpec& spec, KernelMode mode) {
  check_spec(spec);
  PolarGrid g{uniform_s(spec), uniform_theta(spec), {}};
  g.values.resize(g.n_s() * g.n_theta());
  if (mode == KernelMode::serial) {
    kernels::serial::husimi_pure(state.amplitudes, g.s_axis, g.theta_axis, g.values);
  } else {
    kernels::parallel::husimi_pure(state.amplitudes, g.s_axis, g.theta_axis, g.values);
  }
  return g;
}

PolarGrid q_function(const DensityMatrix& rho, const GridSpec& spec, KernelMode mode) {
  check_spec(spec);
  PolarGrid g{uniform_s(spec), uniform_theta(spec), {}};
  g.values.resize(g.n_s() * g.n_theta());
  if (mode == KernelMode::serial) {
    kernels::serial::husimi_density(rho, g.s_axis, g.theta_axis, g.values);
  } else {
    kernels::parallel::husimi_density(rho, g.s_axis, g.theta_axis, g.values);
  }
  return g;
}

double q_value(const FockState& state, double s, double theta) {
  std::vector<double> theta_axis{theta};
  std::vector<double> s_axis{s};
  double out = 0.0;
  kernels::serial::husimi_pure(state.amplitudes, s_axis, theta_axis, {&out, 1});
  return out;
}

double q_value(const DensityMatrix& rho, double s, double theta) {
  std::vector<double> theta_axis{theta};
  std::vector<double> s_axis{s};
  double out = 0.0;
  kernels::serial::husimi_density(rho, s_axis, theta_axis, {&out, 1});
  return out;
}

PolarGrid q_function_lossy(double alpha, const EtaExpansion& eta, double t,
                           double r_sq, const GridSpec& spec,
                           const LossyQOptions& options) {
  if (!(r_sq >= 0.0 && r_sq <= 1.0)) {
    throw InvalidArgument("q_function_lossy: r_sq must lie in [0, 1]");
  }
  const int n_max = options.n_max.value_or(default_truncation(alpha * alpha));
  const auto state = evolve(coherent_state(alpha, n_max), eta, t, options.rotating_frame);
  const auto rho = apply_photon_loss(DensityMatrix::from_pure(state), r_sq);
  return q_function(rho, spec);
}

DensityMatrix dephased_state(double alpha, const EtaExpansion& eta, double t,
                             double delta_N, bool rotating_frame) {
  const int n_max = default_truncation(alpha * alpha);
  auto rho = DensityMatrix::from_pure(evolve(coherent_state(alpha, n_max), eta, t, rotating_frame));
  if (delta_N == 0.0) return rho;
  if (!eta.eta_prime) throw InvalidArgument("dephased_state: expansion carries no N-derivatives");
  // Phase of |n> per atom of N; linear in dN, so the Gaussian average is exact.
  // The frame removes the nominal linear rate only, never its N-shift.
  const auto& d = *eta.eta_prime;
  std::vector<double> slope(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    double acc = 0.0, p = 1.0;
    for (double dk : d) {
      acc += dk * p;
      p *= n;
    }
    slope[n] = t * delta_N * acc;
  }
  for (int n = 0; n <= n_max; ++n) {
    for (int m = 0; m <= n_max; ++m) {
      const double x = slope[n] - slope[m];
      rho(n, m) *= std::exp(-0.5 * x * x);
    }
  }
  return rho;
}

std::uint64_t grid_identity(const PolarGrid& grid) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (double v : grid.s_axis) mix(v);
  for (double v : grid.theta_axis) mix(v);
  for (double v : grid.values) mix(v);
  return h;
}

PeakSet find_peaks(const PolarGrid& grid, double min_height) {
  PeakSet out;
  out.grid_id = grid_identity(grid);
  const std::size_t ns = grid.n_s(), nt = grid.n_theta();
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      const double v = grid.at(i, j);
      if (!(v > min_height)) continue;
      bool strict = true;
      for (int di = -1; di <= 1 && strict; ++di) {
        const auto ii = static_cast<std::ptrdiff_t>(i) + di;
        if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(ns)) continue;
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const std::size_t jj = (j + nt + dj) % nt;
          if (!(grid.at(static_cast<std::size_t>(ii), jj) < v)) {
            strict = false;
            break;
          }
        }
      }
      if (strict) out.peaks.push_back({grid.s_axis[i], grid.theta_axis[j], v, i, j});
    }
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return a.q > b.q; });
  return out;
}

PeakSet refine_peaks(const PeakSet& peaks, const PolarGrid& grid,
                     const FockState& state) {
  PeakSet out = peaks;
  const std::size_t ns = grid.n_s(), nt = grid.n_theta();
  for (auto& p : out.peaks) {
    if (p.i == 0 || p.i + 1 >= ns) continue;
    const double ds = grid.s_axis[1] - grid.s_axis[0];
    const double dt = 2.0 * kPi / static_cast<double>(nt);
    const double c = grid.at(p.i, p.j);
    const double sm = grid.at(p.i - 1, p.j), sp = grid.at(p.i + 1, p.j);
    const double tm = grid.at(p.i, (p.j + nt - 1) % nt);
    const double tp = grid.at(p.i, (p.j + 1) % nt);
    const double curv_s = sm - 2.0 * c + sp;
    const double curv_t = tm - 2.0 * c + tp;
    const double off_s = curv_s < 0.0 ? 0.5 * (sm - sp) / curv_s : 0.0;
    const double off_t = curv_t < 0.0 ? 0.5 * (tm - tp) / curv_t : 0.0;
    const double s = p.s + std::clamp(off_s, -0.5, 0.5) * ds;
    const double th = p.theta + std::clamp(off_t, -0.5, 0.5) * dt;
    const double q = q_value(state, s, th);
    if (q > p.q) {
      p.s = s;
      p.theta = th;
      p.q = q;
    }
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const Peak& a, const Peak& b) { return a.q > b.q; });
  return out;
}

BestCatTime best_cat_time(const EtaExpansion& eta, double alpha,
                          const BestCatOptions& options) {
  if (options.n_times < 2) throw InvalidArgument("best_cat_time: n_times must be >= 2");
  const double tau_c = cat_time(eta.coefficient(2));
  const int n_max = default_truncation(alpha * alpha);
  const auto initial = coherent_state(alpha, n_max);
  GridSpec spec = options.scan_grid;
  if (!(spec.s_max > 0.0)) spec.s_max = std::abs(alpha) + 5.0;
  const double min_height = 0.02 / kPi;

  struct Sample {
    double score = 0.0;
    PeakSet peaks;
  };
  auto evaluate = [&](double t) {
    const auto st = evolve(initial, eta, t, options.rotating_frame);
    const auto grid = q_function(st, spec);
    Sample s;
    s.peaks = refine_peaks(find_peaks(grid, min_height), grid, st);
    s.score = s.peaks.peaks.size() >= 2 ? s.peaks.peaks[1].q : 0.0;
    return s;
  };

  const double lo = options.window_lo * tau_c;
  const double hi = options.window_hi * tau_c;
  const double step = (hi - lo) / (options.n_times - 1);
  std::vector<double> scores(options.n_times);
  kernels::parallel::for_each_index(scores.size(), [&](std::size_t k) {
    scores[k] = evaluate(lo + step * static_cast<double>(k)).score;
  });
  const auto best = std::max_element(scores.begin(), scores.end());
  if (*best <= 0.0) {
    throw CatNotFound("best_cat_time: no time in the window shows two peaks");
  }
  const auto k = static_cast<std::size_t>(best - scores.begin());

  // Golden-section refinement inside the neighbouring scan intervals.
  double a = lo + step * (k > 0 ? k - 1.0 : 0.0);
  double b = lo + step * std::min<double>(k + 1.0, options.n_times - 1.0);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = evaluate(x1).score, f2 = evaluate(x2).score;
  while (b - a > 1e-5 * tau_c) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = evaluate(x2).score;
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = evaluate(x1).score;
    }
  }
  double t_star = 0.5 * (a + b);
  Sample final = evaluate(t_star);
  if (final.score < *best) {
    t_star = lo + step * static_cast<double>(k);
    final = evaluate(t_star);
  }

  BestCatTime out;
  out.tau_c = tau_c;
  out.tau_c_star = t_star;
  out.ratio = t_star / tau_c;
  out.peaks = final.peaks;
  const auto& pk = out.peaks.peaks;
  out.well_defined = pk.size() >= 2 &&
                     (pk.size() == 2 || (pk[0].q > 2.0 * pk[2].q && pk[1].q > 2.0 * pk[2].q));
  return out;
}

void write_q_csv(std::ostream& out, const PolarGrid& grid,
                 const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  out << "s,theta,Q\n";
  for (std::size_t i = 0; i < grid.n_s(); ++i) {
    for (std::size_t j = 0; j < grid.n_theta(); ++j) {
      out << fmt(grid.s_axis[i]) << ',' << fmt(grid.theta_axis[j]) << ','
          << fmt(grid.at(i, j)) << '\n';
    }
  }
}

void write_q_binary(std::ostream& out, const PolarGrid& grid) {
  out.write("QFLD", 4);
  put_u32(out, static_cast<std::uint32_t>(grid.n_s()));
  put_u32(out, static_cast<std::uint32_t>(grid.n_theta()));
  put_u32(out, 0);  // reserved
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

PolarGrid read_q_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "QFLD", 4) != 0) {
    throw IoError("read_q_binary: bad magic");
  }
  const auto ns = get_u32(in);
  const auto nt = get_u32(in);
  (void)get_u32(in);
  PolarGrid g;
  g.s_axis.resize(ns);
  g.theta_axis.resize(nt);
  for (std::uint32_t j = 0; j < nt; ++j) g.theta_axis[j] = 2.0 * kPi * j / nt;
  for (std::uint32_t i = 0; i < ns; ++i) g.s_axis[i] = i;  // index units
  g.values.resize(static_cast<std::size_t>(ns) * nt);
  in.read(reinterpret_cast<char*>(g.values.data()),
          static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (!in) throw IoError("read_q_binary: truncated payload");
  return g;
}

}  // namespace spincat
