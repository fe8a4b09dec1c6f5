#pragma once

#include <string>
#include <vector>

#include "experiment_config.hpp"
#include "manifest.hpp"

namespace spincat::cli {

// Each command writes through the manifest and returns the exit code for
// partially failed sweeps (0 or 3). Hard failures throw.
int cmd_ground(const ExperimentConfig& config, RunManifest& out);
int cmd_coeffs(const ExperimentConfig& config, RunManifest& out);
int cmd_qfunc(const ExperimentConfig& config, RunManifest& out);
int cmd_lossmap(const ExperimentConfig& config, RunManifest& out);
int cmd_jumps(const ExperimentConfig& config, RunManifest& out);
int cmd_figure(const std::string& figure_id, const ExperimentConfig& config,
               RunManifest& out);

[[nodiscard]] const std::vector<std::string>& figure_ids();

/// Throws InvalidArgument listing the valid ids when `id` is unknown.
void check_figure_id(const std::string& id);

}  // namespace spincat::cli
