#pragma once

// Hot loops of the toolkit. Every kernel has a plain serial reference in
// `serial` and an OpenMP version in `parallel`; the two must agree to
// round-off and the tests hold them to it.

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include "spincat/fock.hpp"

namespace spincat::kernels {

/// |<beta|n>| for beta = s e^{i theta}: e^{-s^2/2} s^n / sqrt(n!).
void coherent_weights(double s, std::span<const double> log_fact,
                      std::span<double> out);

/// True when theta_axis is theta_j = 2 pi j / size, j = 0..size-1.
[[nodiscard]] bool is_uniform_circle(std::span<const double> theta_axis);

namespace serial {

/// Q(s_i, theta_j) = |<beta|psi>|^2 / pi, written row-major (s-major).
void husimi_pure(std::span<const cplx> amplitudes,
                 std::span<const double> s_axis,
                 std::span<const double> theta_axis, std::span<double> out);

/// Q = <beta|rho|beta> / pi.
void husimi_density(const DensityMatrix& rho, std::span<const double> s_axis,
                    std::span<const double> theta_axis, std::span<double> out);

}  // namespace serial

namespace parallel {

/// Rows in parallel; uses an FFT along theta on uniform circular axes.
void husimi_pure(std::span<const cplx> amplitudes,
                 std::span<const double> s_axis,
                 std::span<const double> theta_axis, std::span<double> out);

void husimi_density(const DensityMatrix& rho, std::span<const double> s_axis,
                    std::span<const double> theta_axis, std::span<double> out);

/// Runs fn(i) for i in [0, count) on the OpenMP pool. The first exception
/// thrown by any index is rethrown after the loop completes.
template <class Fn>
void for_each_index(std::size_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace parallel

/// Number of worker threads the parallel kernels will use.
[[nodiscard]] int max_threads();
void set_threads(int n);

}  // namespace spincat::kernels
