#include "spincat/fock.hpp"

#include <cmath>
#include <limits>

#include "spincat/errors.hpp"

namespace spincat {

double FockState::norm_squared() const {
  double acc = 0.0;
  for (const auto& c : amplitudes) acc += std::norm(c);
  return acc;
}

double FockState::mean_number() const {
  double acc = 0.0;
  for (std::size_t n = 0; n < amplitudes.size(); ++n) {
    acc += static_cast<double>(n) * std::norm(amplitudes[n]);
  }
  return acc / norm_squared();
}

void FockState::normalize() {
  const double s = 1.0 / std::sqrt(norm_squared());
  for (auto& c : amplitudes) c *= s;
}

cplx inner_product(const FockState& bra, const FockState& ket) {
  cplx acc = 0.0;
  const std::size_t n = std::min(bra.amplitudes.size(), ket.amplitudes.size());
  for (std::size_t k = 0; k < n; ++k) {
    acc += std::conj(bra.amplitudes[k]) * ket.amplitudes[k];
  }
  return acc;
}

double DensityMatrix::trace() const {
  double acc = 0.0;
  for (int n = 0; n < dim; ++n) acc += (*this)(n, n).real();
  return acc;
}

DensityMatrix DensityMatrix::from_pure(const FockState& state) {
  DensityMatrix rho(static_cast<int>(state.amplitudes.size()));
  rho.add_pure(state, 1.0);
  return rho;
}

void DensityMatrix::add_pure(const FockState& state, double weight) {
  const int n = std::min(dim, static_cast<int>(state.amplitudes.size()));
  for (int i = 0; i < n; ++i) {
    const cplx ci = weight * state.amplitudes[i];
    if (ci == cplx{}) continue;
    cplx* row = &data[static_cast<std::size_t>(i) * dim];
    for (int j = 0; j < n; ++j) row[j] += ci * std::conj(state.amplitudes[j]);
  }
}

std::vector<double> log_factorials(int n_max) {
  std::vector<double> lf(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) lf[n] = std::lgamma(n + 1.0);
  return lf;
}

DensityMatrix apply_photon_loss(const DensityMatrix& rho, double r_sq) {
  if (!(r_sq >= 0.0 && r_sq <= 1.0)) {
    throw InvalidArgument("photon loss: r_sq must lie in [0, 1]");
  }
  const int dim = rho.dim;
  if (r_sq == 0.0) return rho;
  DensityMatrix out(dim);
  if (r_sq == 1.0) {
    out(0, 0) = rho.trace();
    return out;
  }
  const double log_t = 0.5 * std::log1p(-r_sq);
  const double log_r = 0.5 * std::log(r_sq);
  const auto lf = log_factorials(dim);
  // Kraus element <n-k| A_k |n> = sqrt(C(n,k)) t^(n-k) r^k.
  auto kraus = [&](int n, int k) {
    return std::exp(0.5 * (lf[n] - lf[k] - lf[n - k]) + (n - k) * log_t +
                    k * log_r);
  };
  std::vector<double> kr(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int n = 0; n < dim; ++n) {
    for (int k = 0; k <= n; ++k) kr[static_cast<std::size_t>(n) * dim + k] = kraus(n, k);
  }
  constexpr double kSkip = 1e-300;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      cplx acc = 0.0;
      for (int k = 0; i + k < dim && j + k < dim; ++k) {
        const double w = kr[static_cast<std::size_t>(i + k) * dim + k] *
                         kr[static_cast<std::size_t>(j + k) * dim + k];
        if (w < kSkip) continue;
        acc += w * rho(i + k, j + k);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace spincat
