#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "experiment_config.hpp"

namespace spincat::cli {

/// Owns an output directory. All files go through write(), which records
/// their digests; finish() writes manifest.json next to them.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, std::string command,
              const ExperimentConfig& config);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& value);

  void point(const std::string& label, const std::string& status,
             const std::string& message = {});
  void note(const std::string& text);
  [[nodiscard]] bool any_failed() const { return failures_ > 0; }

  void finish(int exit_code);

 private:
  std::filesystem::path dir_;
  nlohmann::json doc_;
  int failures_ = 0;
};

/// "%.17g"
[[nodiscard]] std::string fmt(double v);
/// Comma-joined row with fixed formatting.
[[nodiscard]] std::string csv_row(const std::vector<double>& values);

}  // namespace spincat::cli
