#pragma once

#include <complex>
#include <span>
#include <vector>

namespace spincat {

using cplx = std::complex<double>;

/// Pure state in the truncated Fock basis |0>..|n_max>.
struct FockState {
  std::vector<cplx> amplitudes;

  [[nodiscard]] int n_max() const {
    return static_cast<int>(amplitudes.size()) - 1;
  }
  [[nodiscard]] double norm_squared() const;
  [[nodiscard]] double mean_number() const;
  void normalize();
};

[[nodiscard]] cplx inner_product(const FockState& bra, const FockState& ket);

/// Dense Hermitian density matrix, row-major, dimension n_max + 1.
struct DensityMatrix {
  int dim = 0;
  std::vector<cplx> data;

  DensityMatrix() = default;
  explicit DensityMatrix(int dimension)
      : dim(dimension), data(static_cast<std::size_t>(dimension) * dimension) {}

  [[nodiscard]] cplx& operator()(int row, int col) {
    return data[static_cast<std::size_t>(row) * dim + col];
  }
  [[nodiscard]] const cplx& operator()(int row, int col) const {
    return data[static_cast<std::size_t>(row) * dim + col];
  }
  [[nodiscard]] double trace() const;

  static DensityMatrix from_pure(const FockState& state);
  /// this += weight |state><state|
  void add_pure(const FockState& state, double weight);
};

/// Beam-splitter loss channel with reflectivity r_sq (fraction lost).
[[nodiscard]] DensityMatrix apply_photon_loss(const DensityMatrix& rho,
                                              double r_sq);

/// log(n!) table for n = 0..n_max.
[[nodiscard]] std::vector<double> log_factorials(int n_max);

}  // namespace spincat
