#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "experiment_config.hpp"
#include "spincat/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using spincat::cli::ExperimentConfig;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spincat_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPINCAT_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Data rows of a CSV with '#' preamble; first entry is the header.
std::vector<std::string> csv_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<double> csv_column(const fs::path& p, std::size_t col) {
  const auto lines = csv_lines(p);
  std::vector<double> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string cell;
    for (std::size_t k = 0; k <= col; ++k) std::getline(ss, cell, ',');
    out.push_back(std::stod(cell));
  }
  return out;
}

void check_manifest(const fs::path& dir, int exit_code) {
  const auto m = read_json(dir / "manifest.json");
  CHECK(m["exit_code"] == exit_code);
  CHECK(m.contains("config_hash"));
  CHECK(m["constants"].contains("hbar"));
  for (const auto& f : m["files"]) {
    const auto body = slurp(dir / f["path"].get<std::string>());
    CHECK(f["sha256"] == spincat::cli::sha256_hex(body));
    CHECK(f["bytes"] == body.size());
  }
}

const std::string kSmallQ = "--set q.n_s=64 --set q.n_theta=128";

}  // namespace

TEST_CASE("config parsing") {
  ExperimentConfig c;
  CHECK(c.str("bec.preset") == "na-fig2");
  CHECK_THROWS_AS(c.set("bec.nonsense", "1"), spincat::InvalidArgument);
  CHECK_THROWS_AS(c.apply_override("no_equals_sign"), spincat::InvalidArgument);
  c.apply_override("lossmap.nbar=10:10:50, 75");
  CHECK(c.list("lossmap.nbar") == std::vector<double>{10, 20, 30, 40, 50, 75});
  c.set("lossmap.nbar", "5:-1:2");
  CHECK_THROWS_AS((void)c.list("lossmap.nbar"), spincat::InvalidArgument);
  c.set("fit.derivatives", "maybe");
  CHECK_THROWS_AS((void)c.flag("fit.derivatives"), spincat::InvalidArgument);
  c.set("seed", "0x10");
  CHECK(c.seed() == 16u);
  c.set("seed", "-3");
  CHECK_THROWS_AS((void)c.seed(), spincat::InvalidArgument);

  c.set("bec.omega_b_Hz", "750");
  CHECK(c.bec().omega_b == doctest::Approx(2 * kPi * 750).epsilon(1e-15));
  c.set("bec.preset", "rb-figS5");
  CHECK(c.bec().species == "Rb87");
}

TEST_CASE("config hash ignores the output location") {
  ExperimentConfig a, b;
  a.set("output.dir", "/tmp/a");
  b.set("output.dir", "/tmp/b");
  CHECK(a.hash() == b.hash());
  b.set("state.nbar", "49");
  CHECK(a.hash() != b.hash());
  CHECK(spincat::cli::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config files") {
  const auto dir = scratch("cfgfile");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "# star point\nbec.omega_b_Hz = 500   # Hz\n\nstate.nbar = 49\n";
  }
  ExperimentConfig c;
  c.load_file((dir / "run.cfg").string());
  CHECK(c.num("bec.omega_b_Hz") == 500.0);
  CHECK(c.num("state.nbar") == 49.0);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "bec.omega_b_Hz 500\n";
  }
  CHECK_THROWS_AS(c.load_file((dir / "bad.cfg").string()), spincat::InvalidArgument);
  CHECK_THROWS_AS(c.load_file((dir / "missing.cfg").string()), spincat::IoError);
}

TEST_CASE("sweep axes") {
  ExperimentConfig c;
  CHECK(spincat::cli::sweep_values(c).empty());
  c.set("sweep.param", "omega_b_Hz");
  c.set("sweep.start", "100");
  c.set("sweep.stop", "1000");
  c.set("sweep.count", "3");
  auto lin = spincat::cli::sweep_values(c);
  REQUIRE(lin.size() == 3u);
  CHECK(lin[1] == doctest::Approx(550.0));
  c.set("sweep.scale", "log");
  auto log = spincat::cli::sweep_values(c);
  REQUIRE(log.size() == 3u);
  CHECK(log[1] == doctest::Approx(std::sqrt(1e5)));
  c.set("sweep.values", "1,2");
  CHECK(spincat::cli::sweep_values(c) == std::vector<double>{1, 2});

  spincat::BecConfig b = spincat::presets::na_fig2();
  spincat::cli::apply_parameter(b, "a_ab_nm", 3.0);
  CHECK(b.a_ab == doctest::Approx(3e-9));
  CHECK_THROWS_AS(spincat::cli::apply_parameter(b, "colour", 1.0), spincat::InvalidArgument);
}

TEST_CASE("exit code mapping") {
  CHECK(spincat::exit_code(spincat::InvalidArgument("x")) == 2);
  CHECK(spincat::exit_code(spincat::ConvergenceError("x")) == 3);
  CHECK(spincat::exit_code(spincat::CatNotFound("x")) == 3);
  CHECK(spincat::exit_code(spincat::IoError("x")) == 4);
}

TEST_CASE("command line errors") {
  const auto dir = scratch("errors");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("bogus") == 2);
  CHECK(run_cli("ground --set no.such.key=1 --out " + dir.string()) == 2);
  CHECK(run_cli("ground --seed notanumber --out " + dir.string()) == 2);
  CHECK(run_cli("figure fig99 --out " + dir.string()) == 2);
  CHECK(run_cli("ground --config /nonexistent/run.cfg --out " + dir.string()) == 4);
  CHECK(run_cli("ground --out /proc/spincat_cannot_write") == 4);
}

TEST_CASE("ground command") {
  const auto dir = scratch("ground");
  REQUIRE(run_cli("ground --out " + dir.string()) == 0);
  const auto s = read_json(dir / "ground_summary.json");
  CHECK(s["moments"]["rho_b0"].get<double>() > s["moments"]["rho_a0"].get<double>());
  CHECK(s["converged"] == true);
  CHECK(csv_lines(dir / "ground.csv").front() == "r_m,psi_a,psi_b,rho_a,rho_b");
  check_manifest(dir, 0);

  const auto ideal = scratch("ground_ideal");
  REQUIRE(run_cli("ground --set bec.a_aa_nm=0 --set state.n=0 --set grid.n_points=8192 --out " +
                  ideal.string()) == 0);
  const auto e = read_json(ideal / "ground_summary.json")["energy_per_atom_hbar_omega_a"].get<double>();
  CHECK(std::abs(e - 1.5) < 1e-6);

  CHECK(run_cli("ground --set state.n=-1 --out " + scratch("ground_bad").string()) == 2);
}

TEST_CASE("coeffs command") {
  const auto dir = scratch("coeffs");
  REQUIRE(run_cli("coeffs --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "coeffs_000.json"));
  CHECK_FALSE(fs::exists(dir / "coeffs_001.json"));
  const auto j = read_json(dir / "coeffs_000.json");
  CHECK(j["tau_c"].get<double>() == doctest::Approx(0.646).epsilon(0.10));
  check_manifest(dir, 0);

  // One bad sweep point: the others are still written and the run reports 3.
  const auto sweep = scratch("coeffs_sweep");
  CHECK(run_cli("coeffs --set sweep.param=omega_b_Hz --set sweep.values=500,-5,600 --out " +
                sweep.string()) == 3);
  CHECK(fs::exists(sweep / "coeffs_000.json"));
  CHECK_FALSE(fs::exists(sweep / "coeffs_001.json"));
  CHECK(fs::exists(sweep / "coeffs_002.json"));
  CHECK(csv_lines(sweep / "coeffs.csv").size() == 3u);
  const auto m = read_json(sweep / "manifest.json");
  int failed = 0;
  for (const auto& p : m["points"]) failed += p["status"] == "failed";
  CHECK(failed == 1);
  check_manifest(sweep, 3);
}

TEST_CASE("qfunc command") {
  const auto dir = scratch("qfunc");
  REQUIRE(run_cli("qfunc " + kSmallQ + " --out " + dir.string()) == 0);
  const auto j = read_json(dir / "qfunc.json");
  REQUIRE(j["panels"].size() == 3u);
  CHECK(j["panels"][0]["significant_peaks"] == 1);
  CHECK(j["panels"][1]["significant_peaks"] == 2);
  CHECK(j["panels"][2]["significant_peaks"] == 1);
  CHECK(j["panels"][0]["q_max"].get<double>() == doctest::Approx(1.0 / kPi).epsilon(1e-6));
  CHECK(csv_lines(dir / "q_000.csv").front() == "s,theta,Q");
  check_manifest(dir, 0);

  const auto lossy = scratch("qfunc_lossy");
  REQUIRE(run_cli("qfunc " + kSmallQ +
                  " --set q.times=1 --set q.r_sq=0.9 --set q.delta_N_frac=0.05 --set q.format=both"
                  " --out " + lossy.string()) == 0);
  const auto panel = read_json(lossy / "qfunc.json")["panels"][0];
  CHECK(panel["significant_peaks"] == 2);
  for (const auto& p : panel["peaks"]) CHECK(p["s"].get<double>() < 5.0);
  CHECK(fs::exists(lossy / "q_000.qfld"));

  CHECK(run_cli("qfunc --set q.times=-1 --out " + scratch("qfunc_bad").string()) == 2);
  CHECK(run_cli("qfunc --set q.times=1,x --out " + scratch("qfunc_bad2").string()) == 2);
  CHECK(run_cli("qfunc --set q.r_sq=2 --out " + scratch("qfunc_bad3").string()) == 2);
}

TEST_CASE("lossmap command") {
  const std::string axes = " --set lossmap.omega_b_Hz=500 --set lossmap.nbar=50:50:600";
  const auto full = scratch("lossmap");
  REQUIRE(run_cli("lossmap" + axes + " --out " + full.string()) == 0);
  const auto lines = csv_lines(full / "phase_diagram.csv");
  CHECK(lines.front() == "omega_b_Hz,nbar,tau_c_s,tau_ell_s,feasible_1x,feasible_10x");
  CHECK(lines[2].substr(0, 8) == "500,100,");
  CHECK(lines[2].substr(lines[2].size() - 3, 1) == "1");
  check_manifest(full, 0);

  const auto half = scratch("lossmap_half");
  REQUIRE(run_cli("lossmap" + axes + " --set bec.N=50000 --out " + half.string()) == 0);
  const double n_full = csv_column(full / "boundary.csv", 1).at(0);
  const double n_half = csv_column(half / "boundary.csv", 1).at(0);
  CHECK(n_half > n_full);

  CHECK(run_cli("lossmap --set lossmap.nbar= --out " + scratch("lossmap_empty").string()) == 2);
}

TEST_CASE("jumps command") {
  const std::string kerr = " --set eta.source=kerr --set eta.kerr=2.44 --set state.nbar=25 " + kSmallQ;
  const auto q = scratch("jumps_q");
  REQUIRE(run_cli("qfunc" + kerr + " --set q.times=1 --set q.time_unit=tau_c --out " + q.string()) == 0);
  const auto lossless = scratch("jumps_lossless");
  REQUIRE(run_cli("jumps" + kerr +
                  " --set jumps.L1=0 --set jumps.n_traj=1 --set jumps.time_ref=tau_c"
                  " --set jumps.multiples=1 --out " + lossless.string()) == 0);
  const auto a = csv_column(q / "q_000.csv", 2);
  const auto b = csv_column(lossless / "jumps_q_000.csv", 2);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  CHECK(worst < 1e-8);

  const std::string lossy = kerr + " --set jumps.L1_tau_c=0.05 --set jumps.n_traj=200 --set jumps.time_ref=tau_c";
  const auto one = scratch("jumps_a");
  const auto two = scratch("jumps_b");
  REQUIRE(run_cli("jumps" + lossy + " --seed 77 --out " + one.string()) == 0);
  REQUIRE(run_cli("jumps" + lossy + " --seed 77 --jobs 1 --out " + two.string()) == 0);
  const auto j = read_json(one / "jumps.json");
  REQUIRE(j["runs"].size() == 2u);
  CHECK(j["runs"][0]["seed"] == 77);
  const double mean = j["runs"][1]["mean_jumps"].get<double>();
  const double se = j["runs"][1]["mean_jumps_stderr"].get<double>();
  CHECK(std::abs(mean - j["runs"][1]["expected_mean_jumps"].get<double>()) < 3.0 * se);
  for (const auto& entry : fs::directory_iterator(one)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    CAPTURE(name);
    CHECK(slurp(entry.path()) == slurp(two / name));
  }
  check_manifest(one, 0);
}

TEST_CASE("figure command") {
  const std::string one_point = " --set sweep.param=omega_b_Hz --set sweep.values=500";
  const auto f2a = scratch("fig2a");
  REQUIRE(run_cli("figure fig2a" + one_point + " --out " + f2a.string()) == 0);
  const auto header = csv_lines(f2a / "fig2a.csv").front();
  CHECK(header.rfind("omega_b_Hz,tau_c,tau_1,tau_3_baa,tau_3_bba,tau_3_bbb,tau_ell,", 0) == 0);
  CHECK(csv_lines(f2a / "fig2a.csv").size() == 2u);
  check_manifest(f2a, 0);

  const auto s1 = scratch("figS1");
  REQUIRE(run_cli("figure figS1" + one_point + " --out " + s1.string()) == 0);
  int datasets = 0;
  for (const auto& e : fs::directory_iterator(s1)) {
    datasets += e.path().filename().string().rfind("figS1", 0) == 0 && e.path().extension() == ".csv";
  }
  CHECK(datasets == 6);

  const auto rb = scratch("figS5rb");
  REQUIRE(run_cli("figure figS5rb --set sweep.param=omega_b_Hz --set sweep.values=1500 --out " +
                  rb.string()) == 0);
  const auto m = read_json(rb / "manifest.json");
  bool rb_noted = false;
  for (const auto& n : m["notes"]) rb_noted |= n.get<std::string>().find("rb-figS5") != std::string::npos;
  CHECK(rb_noted);
  const double best = read_json(rb / "figS5rb.json")["max_feasible_nbar"].get<double>();
  CHECK(best > 0.0);
  CHECK(best <= 20.0);
  check_manifest(rb, 0);
}
