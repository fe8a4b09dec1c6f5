#include "experiment_config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spincat/constants.hpp"
#include "spincat/errors.hpp"

namespace spincat::cli {

namespace {

namespace c = constants;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key -> default ("" means unset)
const std::map<std::string, std::string>& registry() {
  static const std::map<std::string, std::string> keys = {
      {"bec.preset", "na-fig2"},
      {"bec.species", ""},
      {"bec.mass_u", ""},
      {"bec.a_aa_nm", ""},
      {"bec.a_bb_nm", ""},
      {"bec.a_ab_nm", ""},
      {"bec.omega_a_Hz", ""},
      {"bec.omega_b_Hz", ""},
      {"bec.L1", ""},
      {"bec.L2_aa", ""},
      {"bec.L2_bb", ""},
      {"bec.L2_ab", ""},
      {"bec.L3", ""},
      {"bec.N", ""},
      {"grid.n_points", "4096"},
      {"grid.r_max_um", ""},
      {"grid.tol", "1e-12"},
      {"grid.max_steps", "500000"},
      {"fit.n_max", "200"},
      {"fit.stride", "10"},
      {"fit.degree", "4"},
      {"fit.derivatives", "false"},
      {"fit.dN_frac", "0.01"},
      {"sweep.param", ""},
      {"sweep.values", ""},
      {"sweep.start", ""},
      {"sweep.stop", ""},
      {"sweep.count", ""},
      {"sweep.scale", "lin"},
      {"state.n", "100"},
      {"state.nbar", "100"},
      {"eta.source", "fit"},
      {"eta.file", ""},
      {"eta.values", ""},
      {"eta.kerr", ""},
      {"q.times", "0,1,2"},
      {"q.time_unit", "tau_c_star"},
      {"q.r_sq", "0"},
      {"q.delta_N_frac", "0"},
      {"q.rotating_frame", "true"},
      {"q.n_s", "256"},
      {"q.n_theta", "512"},
      {"q.s_max", ""},
      {"q.format", "csv"},
      {"lossmap.omega_b_Hz", "100:50:1500"},
      {"lossmap.nbar", "10:10:500"},
      {"lossmap.contour_tau_c", "10,1,0.1"},
      {"jumps.L1", ""},
      {"jumps.L1_tau_c", ""},
      {"jumps.n_traj", "5000"},
      {"jumps.time_ref", "tau_c_star"},
      {"jumps.multiples", "1,2"},
      {"output.dir", ""},
      {"seed", "0"},
  };
  return keys;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': not a number: '" + text + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(registry()) {}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!registry().count(key)) {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw InvalidArgument("override must be key=value: '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    apply_override(line);
  }
}

bool ExperimentConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string ExperimentConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
  return it->second;
}

double ExperimentConfig::num(const std::string& key) const {
  if (!has(key)) throw InvalidArgument("config key '" + key + "' is not set");
  return parse_double(key, str(key));
}

long ExperimentConfig::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v)) throw InvalidArgument("config key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

bool ExperimentConfig::flag(const std::string& key) const {
  const auto v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "' must be true or false");
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_double(key, item));
      continue;
    }
    // start:step:stop, inclusive of stop up to round-off
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw InvalidArgument("config key '" + key + "': range must be start:step:stop");
    }
    const double a = parse_double(key, item.substr(0, c1));
    const double h = parse_double(key, item.substr(c1 + 1, c2 - c1 - 1));
    const double b = parse_double(key, item.substr(c2 + 1));
    if (!(h > 0.0) || b < a) {
      throw InvalidArgument("config key '" + key + "': range needs step > 0 and stop >= start");
    }
    const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
  }
  return out;
}

BecConfig ExperimentConfig::bec() const {
  BecConfig cfg = presets::by_name(str("bec.preset"));
  if (has("bec.species")) cfg.species = str("bec.species");
  if (has("bec.mass_u")) cfg.atom_mass = num("bec.mass_u") * c::atomic_mass_unit;
  if (has("bec.a_aa_nm")) cfg.a_aa = num("bec.a_aa_nm") * 1e-9;
  if (has("bec.a_bb_nm")) cfg.a_bb = num("bec.a_bb_nm") * 1e-9;
  if (has("bec.a_ab_nm")) cfg.a_ab = num("bec.a_ab_nm") * 1e-9;
  if (has("bec.omega_a_Hz")) cfg.omega_a = c::two_pi * num("bec.omega_a_Hz");
  if (has("bec.omega_b_Hz")) cfg.omega_b = c::two_pi * num("bec.omega_b_Hz");
  if (has("bec.L1")) cfg.L1 = num("bec.L1");
  if (has("bec.L2_aa")) cfg.L2_aa = num("bec.L2_aa");
  if (has("bec.L2_bb")) cfg.L2_bb = num("bec.L2_bb");
  if (has("bec.L2_ab")) cfg.L2_ab = num("bec.L2_ab");
  if (has("bec.L3")) cfg.L3 = num("bec.L3");
  if (has("bec.N")) cfg.N_total = num("bec.N");
  cfg.validate();
  return cfg;
}

SolverSettings ExperimentConfig::solver() const {
  SolverSettings s;
  s.n_points = static_cast<int>(integer("grid.n_points"));
  if (has("grid.r_max_um")) s.r_max = num("grid.r_max_um") * 1e-6;
  s.tol = num("grid.tol");
  s.max_steps = integer("grid.max_steps");
  return s;
}

GridSpec ExperimentConfig::q_grid(double alpha) const {
  GridSpec g = GridSpec::for_alpha(alpha, static_cast<int>(integer("q.n_s")),
                                   static_cast<int>(integer("q.n_theta")));
  if (has("q.s_max")) g.s_max = num("q.s_max");
  return g;
}

std::uint64_t ExperimentConfig::seed() const {
  const auto text = str("seed");
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used == text.size() && text.find('-') == std::string::npos) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("seed must be an unsigned 64-bit integer: '" + text + "'");
}

std::vector<std::string> ExperimentConfig::canonical_lines() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!v.empty() && k != "output.dir") out.push_back(k + "=" + v);
  }
  return out;
}

std::string ExperimentConfig::hash() const {
  std::string text;
  for (const auto& line : canonical_lines()) text += line + "\n";
  return sha256_hex(text);
}

const std::vector<std::string>& ExperimentConfig::sweep_parameters() {
  static const std::vector<std::string> names = {
      "omega_b_Hz", "omega_a_Hz", "N", "a_aa_nm", "a_bb_nm", "a_ab_nm", "L1", "L3"};
  return names;
}

void apply_parameter(BecConfig& config, const std::string& name, double value) {
  if (name == "omega_b_Hz") {
    config.omega_b = c::two_pi * value;
  } else if (name == "omega_a_Hz") {
    config.omega_a = c::two_pi * value;
  } else if (name == "N") {
    config.N_total = value;
  } else if (name == "a_aa_nm") {
    config.a_aa = value * 1e-9;
  } else if (name == "a_bb_nm") {
    config.a_bb = value * 1e-9;
  } else if (name == "a_ab_nm") {
    config.a_ab = value * 1e-9;
  } else if (name == "L1") {
    config.L1 = value;
  } else if (name == "L3") {
    config.L3 = value;
  } else {
    std::string valid;
    for (const auto& n : ExperimentConfig::sweep_parameters()) valid += " " + n;
    throw InvalidArgument("unknown sweep parameter '" + name + "' (valid:" + valid + ")");
  }
}

std::vector<double> sweep_values(const ExperimentConfig& config) {
  if (!config.has("sweep.param")) return {};
  if (config.has("sweep.values")) return config.list("sweep.values");
  if (!config.has("sweep.start") || !config.has("sweep.stop") || !config.has("sweep.count")) {
    return {};
  }
  const double a = config.num("sweep.start");
  const double b = config.num("sweep.stop");
  const long n = config.integer("sweep.count");
  if (n < 1) return {};
  const auto scale = config.str("sweep.scale");
  if (scale != "lin" && scale != "log") {
    throw InvalidArgument("sweep.scale must be lin or log");
  }
  if (scale == "log" && !(a > 0.0 && b > 0.0)) {
    throw InvalidArgument("log sweep needs positive start and stop");
  }
  std::vector<double> out;
  for (long i = 0; i < n; ++i) {
    const double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    out.push_back(scale == "lin" ? a + f * (b - a) : a * std::pow(b / a, f));
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace spincat::cli
