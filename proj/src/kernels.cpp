#include "spincat/kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spincat::kernels {

namespace {

constexpr double kInvPi = 1.0 / std::numbers::pi;

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer make_buffer(std::size_t n) {
  return FftwBuffer(fftw_alloc_complex(n));
}

// Forward plan (sign -1) of length n. The FFTW planner is not thread-safe;
// planning and destruction are serialized, execution is not.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class ForwardPlan {
 public:
  explicit ForwardPlan(int n) : n_(n) {
    auto in = make_buffer(n);
    auto out = make_buffer(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(n, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~ForwardPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  ForwardPlan(const ForwardPlan&) = delete;
  ForwardPlan& operator=(const ForwardPlan&) = delete;

  void execute(fftw_complex* in, fftw_complex* out) const {
    fftw_execute_dft(plan_, in, out);
  }
  [[nodiscard]] int size() const { return n_; }

 private:
  int n_;
  fftw_plan plan_;
};

std::vector<double> lf_table(int n_max) { return log_factorials(n_max); }

void pure_row_direct(std::span<const cplx> amps, std::span<const double> w,
                     std::span<const double> theta_axis, double* row) {
  for (std::size_t j = 0; j < theta_axis.size(); ++j) {
    cplx acc = 0.0;
    for (std::size_t n = 0; n < amps.size(); ++n) {
      if (w[n] == 0.0) continue;
      acc += amps[n] * w[n] *
             std::polar(1.0, -static_cast<double>(n) * theta_axis[j]);
    }
    row[j] = std::norm(acc) * kInvPi;
  }
}

// C_d = sum_m rho(m+d, m) w_{m+d} w_m for d = -(dim-1)..(dim-1), stored at
// d + dim - 1.
void density_diagonals(const DensityMatrix& rho, std::span<const double> w,
                       std::vector<cplx>& diag_sums) {
  const int dim = rho.dim;
  diag_sums.assign(2 * dim - 1, cplx{});
  for (int n = 0; n < dim; ++n) {
    if (w[n] == 0.0) continue;
    for (int m = 0; m < dim; ++m) {
      if (w[m] == 0.0) continue;
      diag_sums[n - m + dim - 1] += rho(n, m) * (w[n] * w[m]);
    }
  }
}

void density_row_direct(std::span<const cplx> diag_sums, int dim,
                        std::span<const double> theta_axis, double* row) {
  for (std::size_t j = 0; j < theta_axis.size(); ++j) {
    cplx acc = 0.0;
    for (int d = -(dim - 1); d <= dim - 1; ++d) {
      acc += diag_sums[d + dim - 1] *
             std::polar(1.0, -static_cast<double>(d) * theta_axis[j]);
    }
    row[j] = acc.real() * kInvPi;
  }
}

// Folds coefficients a_d (phase e^{-i d theta}) onto n_theta bins and
// transforms; exact for theta_j = 2 pi j / n_theta.
template <class Coeff>
void fold_and_transform(const ForwardPlan& plan, int d_min, int d_max,
                        Coeff&& coeff, fftw_complex* in, fftw_complex* out) {
  const int nt = plan.size();
  for (int j = 0; j < nt; ++j) in[j][0] = in[j][1] = 0.0;
  for (int d = d_min; d <= d_max; ++d) {
    const cplx a = coeff(d);
    int bin = d % nt;
    if (bin < 0) bin += nt;
    in[bin][0] += a.real();
    in[bin][1] += a.imag();
  }
  plan.execute(in, out);
}

}  // namespace

void coherent_weights(double s, std::span<const double> log_fact,
                      std::span<double> out) {
  if (s == 0.0) {
    for (double& v : out) v = 0.0;
    out[0] = 1.0;
    return;
  }
  const double log_s = std::log(s);
  const double half_s2 = 0.5 * s * s;
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = std::exp(-half_s2 + static_cast<double>(n) * log_s -
                      0.5 * log_fact[n]);
  }
}

bool is_uniform_circle(std::span<const double> theta_axis) {
  const std::size_t n = theta_axis.size();
  if (n < 2) return false;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (std::abs(theta_axis[j] - step * static_cast<double>(j)) > 1e-12) {
      return false;
    }
  }
  return true;
}

namespace serial {

void husimi_pure(std::span<const cplx> amplitudes,
                 std::span<const double> s_axis,
                 std::span<const double> theta_axis, std::span<double> out) {
  const auto lf = lf_table(static_cast<int>(amplitudes.size()));
  std::vector<double> w(amplitudes.size());
  for (std::size_t i = 0; i < s_axis.size(); ++i) {
    coherent_weights(s_axis[i], lf, w);
    pure_row_direct(amplitudes, w, theta_axis, &out[i * theta_axis.size()]);
  }
}

void husimi_density(const DensityMatrix& rho, std::span<const double> s_axis,
                    std::span<const double> theta_axis, std::span<double> out) {
  const auto lf = lf_table(rho.dim);
  std::vector<double> w(rho.dim);
  std::vector<cplx> sums;
  for (std::size_t i = 0; i < s_axis.size(); ++i) {
    coherent_weights(s_axis[i], lf, w);
    density_diagonals(rho, w, sums);
    density_row_direct(sums, rho.dim, theta_axis, &out[i * theta_axis.size()]);
  }
}

}  // namespace serial

namespace parallel {

void husimi_pure(std::span<const cplx> amplitudes,
                 std::span<const double> s_axis,
                 std::span<const double> theta_axis, std::span<double> out) {
  const auto lf = lf_table(static_cast<int>(amplitudes.size()));
  const std::size_t nt = theta_axis.size();
  const bool use_fft = is_uniform_circle(theta_axis);
  std::unique_ptr<ForwardPlan> plan;
  if (use_fft) plan = std::make_unique<ForwardPlan>(static_cast<int>(nt));
  const int dim = static_cast<int>(amplitudes.size());

#pragma omp parallel
  {
    std::vector<double> w(amplitudes.size());
    FftwBuffer in, fout;
    if (use_fft) {
      in = make_buffer(nt);
      fout = make_buffer(nt);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s_axis.size()); ++i) {
      coherent_weights(s_axis[i], lf, w);
      double* row = &out[static_cast<std::size_t>(i) * nt];
      if (!use_fft) {
        pure_row_direct(amplitudes, w, theta_axis, row);
        continue;
      }
      fold_and_transform(
          *plan, 0, dim - 1, [&](int n) { return amplitudes[n] * w[n]; },
          in.get(), fout.get());
      for (std::size_t j = 0; j < nt; ++j) {
        row[j] = (fout[j][0] * fout[j][0] + fout[j][1] * fout[j][1]) * kInvPi;
      }
    }
  }
}

void husimi_density(const DensityMatrix& rho, std::span<const double> s_axis,
                    std::span<const double> theta_axis, std::span<double> out) {
  const auto lf = lf_table(rho.dim);
  const std::size_t nt = theta_axis.size();
  const bool use_fft = is_uniform_circle(theta_axis);
  std::unique_ptr<ForwardPlan> plan;
  if (use_fft) plan = std::make_unique<ForwardPlan>(static_cast<int>(nt));
  const int dim = rho.dim;

#pragma omp parallel
  {
    std::vector<double> w(dim);
    std::vector<cplx> sums;
    FftwBuffer in, fout;
    if (use_fft) {
      in = make_buffer(nt);
      fout = make_buffer(nt);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(s_axis.size()); ++i) {
      coherent_weights(s_axis[i], lf, w);
      density_diagonals(rho, w, sums);
      double* row = &out[static_cast<std::size_t>(i) * nt];
      if (!use_fft) {
        density_row_direct(sums, dim, theta_axis, row);
        continue;
      }
      fold_and_transform(
          *plan, -(dim - 1), dim - 1,
          [&](int d) { return sums[d + dim - 1]; }, in.get(), fout.get());
      for (std::size_t j = 0; j < nt; ++j) row[j] = fout[j][0] * kInvPi;
    }
  }
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace spincat::kernels
