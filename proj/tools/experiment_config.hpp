#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spincat/config.hpp"
#include "spincat/energy_expansion.hpp"
#include "spincat/phase_space.hpp"

namespace spincat::cli {

/// Flat key=value configuration with dotted section names. Every key must
/// be registered; unknown keys are argument errors.
class ExperimentConfig {
 public:
  ExperimentConfig();

  /// Reads "key = value" lines; '#' starts a comment.
  void load_file(const std::string& path);
  /// Applies "key=value".
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] std::string str(const std::string& key) const;
  [[nodiscard]] double num(const std::string& key) const;
  [[nodiscard]] long integer(const std::string& key) const;
  [[nodiscard]] bool flag(const std::string& key) const;
  [[nodiscard]] std::vector<double> list(const std::string& key) const;

  /// Preset first, then the explicit bec.* keys on top.
  [[nodiscard]] BecConfig bec() const;
  [[nodiscard]] SolverSettings solver() const;
  [[nodiscard]] GridSpec q_grid(double alpha) const;
  [[nodiscard]] std::uint64_t seed() const;

  /// Sorted key=value lines of every non-empty key.
  [[nodiscard]] std::vector<std::string> canonical_lines() const;
  [[nodiscard]] std::string hash() const;  // sha256 of canonical_lines

  [[nodiscard]] static const std::vector<std::string>& sweep_parameters();

 private:
  std::map<std::string, std::string> values_;
};

/// Applies one named sweep parameter to a config.
void apply_parameter(BecConfig& config, const std::string& name, double value);

/// Values of the sweep axis: sweep.values, or sweep.start/stop/count with
/// sweep.scale = lin | log. Empty when no sweep is configured.
[[nodiscard]] std::vector<double> sweep_values(const ExperimentConfig& config);

/// Hex sha256 digest.
[[nodiscard]] std::string sha256_hex(const std::string& bytes);

}  // namespace spincat::cli
