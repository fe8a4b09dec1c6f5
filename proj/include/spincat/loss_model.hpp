#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spincat/config.hpp"
#include "spincat/radial_gpe.hpp"

namespace spincat {

/// One-atom loss times of the small component, per channel. A channel with
/// zero rate has an infinite time.
struct LossBreakdown {
  double tau_1 = 0.0;
  std::map<std::string, double> tau_2;  // "bb", "ab"; present when L2 != 0
  std::map<std::string, double> tau_3;  // "bbb", "bba", "baa"
  double tau_ell = 0.0;
  bool lossless = false;
  double n = 0.0;
  double omega_b = 0.0;

  /// Sum of inverse channel times.
  [[nodiscard]] double total_rate() const;
};

[[nodiscard]] LossBreakdown loss_times(const DensityMoments& moments,
                                       const BecConfig& config);

/// Closed-form density moments from the Gaussian / Thomas-Fermi bounds.
struct AnalyticMoments {
  double I_b = 0.0;
  double I_bb = 0.0;
  double I_ab = 0.0;
  double I_bbb = 0.0;
  double I_abb = 0.0;
  double I_aab = 0.0;
};
[[nodiscard]] AnalyticMoments analytic_moments(const BecConfig& config,
                                               double N, double n);

[[nodiscard]] LossBreakdown loss_times_analytic(const BecConfig& config,
                                                double N, double n);

struct PhaseDiagramOptions {
  double margin_factor = 1.0;  // 1 or 10
  int fit_n_max = 200;
  int fit_stride = 10;
  SolverSettings solver;
};

struct PhaseDiagram {
  std::vector<double> omega_b_axis;  // rad/s
  std::vector<double> nbar_axis;
  double margin = 1.0;
  // [i][j] = (omega_b_axis[i], nbar_axis[j])
  std::vector<std::vector<double>> tau_c_grid;
  std::vector<std::vector<double>> tau_ell_grid;
  std::vector<std::vector<bool>> feasible;
  std::vector<std::vector<std::string>> notes;  // empty or failure reason

  [[nodiscard]] bool feasible_at(std::size_t i, std::size_t j,
                                 double margin_factor) const;
  /// Largest feasible nbar at omega index i (0 when none).
  [[nodiscard]] double max_feasible_nbar(std::size_t i,
                                         double margin_factor) const;
};

/// Full pipeline at every (omega_b, nbar). Points fail independently; a
/// failed point is infeasible and carries a note.
[[nodiscard]] PhaseDiagram phase_diagram(const BecConfig& config,
                                         const std::vector<double>& omega_b_list,
                                         const std::vector<double>& nbar_list,
                                         const PhaseDiagramOptions& options = {});

struct ContourPoint {
  double tau_c = 0.0;      // s
  double omega_b = 0.0;    // rad/s
  double nbar_max = 0.0;   // on the margin-1 boundary
};

/// Points on the margin-1 boundary where tau_c takes the given values.
[[nodiscard]] std::vector<ContourPoint> tau_c_contour(
    const PhaseDiagram& diagram, const std::vector<double>& tau_c_values);

/// d = N lambda^2 / (pi R^2).
[[nodiscard]] double optical_depth(double N, double lambda, double R);

[[nodiscard]] nlohmann::json to_json(const LossBreakdown& loss);
void write_phase_diagram_csv(std::ostream& out, const PhaseDiagram& diagram,
                             const std::vector<std::string>& preamble = {});

}  // namespace spincat
