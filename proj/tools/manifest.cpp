#include "manifest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "spincat/constants.hpp"
#include "spincat/errors.hpp"

#ifndef SPINCAT_VERSION
#define SPINCAT_VERSION "0.0.0"
#endif

namespace spincat::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += fmt(values[i]);
  }
  return row + "\n";
}

RunManifest::RunManifest(std::filesystem::path dir, std::string command,
                         const ExperimentConfig& config)
    : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw IoError("cannot create output directory '" + dir_.string() + "'");
  }
  namespace c = constants;
  doc_ = {{"tool", "spincat"},
          {"version", SPINCAT_VERSION},
          {"command", std::move(command)},
          {"config_hash", config.hash()},
          {"config", config.canonical_lines()},
          {"constants",
           {{"hbar", c::hbar},
            {"atomic_mass_unit", c::atomic_mass_unit},
            {"bohr_radius", c::bohr_radius},
            {"mass_na23_u", c::mass_na23 / c::atomic_mass_unit},
            {"mass_rb87_u", c::mass_rb87 / c::atomic_mass_unit}}},
          {"started", utc_now()},
          {"points", nlohmann::json::array()},
          {"files", nlohmann::json::array()},
          {"notes", nlohmann::json::array()}};
}

void RunManifest::write(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
  doc_["files"].push_back({{"path", name}, {"sha256", sha256_hex(content)},
                           {"bytes", content.size()}});
}

void RunManifest::write_json(const std::string& name, const nlohmann::json& value) {
  write(name, value.dump(2) + "\n");
}

void RunManifest::point(const std::string& label, const std::string& status,
                        const std::string& message) {
  if (status != "ok") ++failures_;
  nlohmann::json p = {{"label", label}, {"status", status}};
  if (!message.empty()) p["message"] = message;
  doc_["points"].push_back(std::move(p));
}

void RunManifest::note(const std::string& text) { doc_["notes"].push_back(text); }

void RunManifest::finish(int exit_code) {
  doc_["finished"] = utc_now();
  doc_["exit_code"] = exit_code;
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc_.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace spincat::cli
