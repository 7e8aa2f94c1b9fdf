// End-to-end tests of the command-line tool: subcommand behavior, exit
// codes, file outputs, config handling, and byte-level reproducibility.
// The path of the built binary is injected by the build system.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult res;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) res.out += buf;
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string cli() { return std::string(RELUC_CLI_PATH); }

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& tag) {
  const fs::path dir =
      fs::temp_directory_path() / ("reluc_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("plan prints the closed-form table and writes JSON") {
  const fs::path dir = scratch("plan");
  const CmdResult r = run_cmd(cli() +
                              " plan --beta 1 --d 2 --n 1024 --profile "
                              "rectangle_min_size --out " +
                              (dir / "plans.json").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("228") != std::string::npos);
  CHECK(r.out.find("672") != std::string::npos);
  const auto plans = nlohmann::json::parse(read_bytes(dir / "plans.json"));
  REQUIRE(plans.is_array());
  REQUIRE(plans.size() == 1);
  CHECK(plans[0]["W"] == 228);
  CHECK(plans[0]["D"] == 672);
  CHECK(plans[0]["S_estimate"] == 35035165);

  // Multiple sample sizes give one row each.
  const CmdResult r2 =
      run_cmd(cli() + " plan --beta 2 --d 1 --n 100 --n 1000 --n 10000");
  CHECK(r2.code == 0);
  CHECK(std::count(r2.out.begin(), r2.out.end(), '\n') >= 4);

  // The 3^d width factor overflows 64-bit sizes: compute error, exit 2.
  const CmdResult r3 =
      run_cmd(cli() + " plan --profile minkowski --d 60 --n 1000");
  CHECK(r3.code == 2);
  CHECK(r3.out.find("compute error") != std::string::npos);
}

TEST_CASE("size-efficiency ratio output") {
  CmdResult r = run_cmd(cli() + " nre 100 10000");
  CHECK(r.code == 0);
  CHECK(r.out == "2.0\n");

  r = run_cmd(cli() +
              " nre --profile-a deep_fixed_width --profile-b "
              "wide_fixed_depth");
  CHECK(r.code == 0);
  CHECK(r.out == "2.0\n");

  r = run_cmd(cli() +
              " nre --profile-a wide_fixed_depth --profile-b deep_and_wide");
  CHECK(r.code == 0);
  CHECK(r.out == "0.75\n");

  // Sizes must exceed 1: validation error.
  r = run_cmd(cli() + " nre 1 10");
  CHECK(r.code == 1);

  // No arguments at all: parse error.
  r = run_cmd(cli() + " nre");
  CHECK(r.code == 1);
}

TEST_CASE("missing subcommand and help") {
  CHECK(run_cmd(cli()).code == 1);
  CHECK(run_cmd(cli() + " --help").code == 0);
  CHECK(run_cmd(cli() + " no_such_subcommand").code == 1);
}

TEST_CASE("approx-build writes certified networks and verify accepts them") {
  const fs::path dir = scratch("build");
  const std::string base = cli() +
                           " approx-build --construction holder --target "
                           "affine --beta 1 --d 1 --B0 1 --N 1 --M 1 "
                           "--cert-seed 5 --jobs 1 --out ";
  const CmdResult r = run_cmd(base + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);

  const fs::path net = dir / "holder_affine_b1_d1_N1_M1.net.json";
  const fs::path cert = dir / "holder_affine_b1_d1_N1_M1.cert.json";
  REQUIRE(fs::exists(net));
  REQUIRE(fs::exists(cert));
  REQUIRE(fs::exists(dir / "certificates.txt"));

  const auto cj = nlohmann::json::parse(read_bytes(cert));
  CHECK(cj["construction"] == "holder");
  CHECK(cj["pass"] == true);
  CHECK(cj["d"] == 1);
  CHECK(cj["N"] == 1);
  CHECK(cj["grid"]["seed"] == 5);

  // Verification round-trip.
  const CmdResult v = run_cmd(cli() + " approx-verify --network " +
                              net.string() + " --cert " + cert.string());
  CHECK(v.code == 0);
  CHECK(v.out.find("verified") != std::string::npos);

  // Reruns with the same seed are byte-identical.
  const fs::path dir2 = scratch("build2");
  CHECK(run_cmd(base + dir2.string()).code == 0);
  CHECK(read_bytes(net) ==
        read_bytes(dir2 / "holder_affine_b1_d1_N1_M1.net.json"));
  CHECK(read_bytes(cert) ==
        read_bytes(dir2 / "holder_affine_b1_d1_N1_M1.cert.json"));

  // Tampered bound: certification failure, exit 3.
  auto tampered = cj;
  tampered["bound"] = 9.0;
  const fs::path bad_cert = dir / "tampered.cert.json";
  write_text(bad_cert, tampered.dump(2));
  const CmdResult t = run_cmd(cli() + " approx-verify --network " +
                              net.string() + " --cert " + bad_cert.string());
  CHECK(t.code == 3);
  CHECK(t.out.find("bound") != std::string::npos);

  // Tampered network weight: the re-measured error no longer matches.
  auto nj = nlohmann::json::parse(read_bytes(net));
  nj["layers"][0]["weights"][0] =
      nj["layers"][0]["weights"][0].get<double>() + 0.125;
  const fs::path bad_net = dir / "tampered.net.json";
  write_text(bad_net, nj.dump(2));
  const CmdResult t2 = run_cmd(cli() + " approx-verify --network " +
                               bad_net.string() + " --cert " + cert.string());
  CHECK(t2.code == 3);
}

TEST_CASE("approx-build validates inputs through exit codes") {
  const fs::path dir = scratch("badbuild");
  // beta <= 0: validation error.
  CHECK(run_cmd(cli() +
                " approx-build --construction holder --target affine "
                "--beta 0 --d 1 --out " +
                dir.string())
            .code == 1);
  // Unknown construction.
  CHECK(run_cmd(cli() +
                " approx-build --construction septagon --target affine "
                "--out " +
                dir.string())
            .code == 1);
  // abs_power needs beta <= 1.
  CHECK(run_cmd(cli() +
                " approx-build --construction holder --target abs_power "
                "--beta 2 --d 1 --out " +
                dir.string())
            .code == 1);
}

TEST_CASE("config files override flags and reject junk") {
  const fs::path dir = scratch("config");

  // Values come from the config when the flag is absent.
  write_text(dir / "ok.json",
             R"({"beta": 1.0, "target": "affine", "construction": "holder",
                 "N": 1, "M": 1, "cert_seed": 5})");
  const CmdResult ok = run_cmd(cli() + " approx-build --config " +
                               (dir / "ok.json").string() + " --out " +
                               (dir / "out").string());
  CHECK(ok.code == 0);
  CHECK(fs::exists(dir / "out" / "holder_affine_b1_d1_N1_M1.cert.json"));

  // The same key from both sources is a conflict, not a silent override.
  const CmdResult conflict =
      run_cmd(cli() + " approx-build --config " + (dir / "ok.json").string() +
              " --beta 1 --out " + (dir / "out2").string());
  CHECK(conflict.code == 1);
  CHECK(conflict.out.find("beta") != std::string::npos);

  // Unknown keys are rejected.
  write_text(dir / "junk.json", R"({"betta": 1.0})");
  const CmdResult junk = run_cmd(cli() + " approx-build --config " +
                                 (dir / "junk.json").string() + " --out " +
                                 (dir / "out3").string());
  CHECK(junk.code == 1);
  CHECK(junk.out.find("betta") != std::string::npos);

  // Malformed JSON is a validation error, not a crash.
  write_text(dir / "broken.json", "{");
  CHECK(run_cmd(cli() + " approx-build --config " +
                (dir / "broken.json").string())
            .code == 1);
}

TEST_CASE("dataset-gen writes reproducible CSV with sidecar") {
  const fs::path a = scratch("data_a"), b = scratch("data_b");
  const std::string base = cli() +
                           " dataset-gen --target cosine_product --beta 1.5 "
                           "--d 2 --n 50 --noise gaussian --noise-scale 0.1 "
                           "--seed 9 --out ";
  CHECK(run_cmd(base + a.string()).code == 0);
  CHECK(run_cmd(base + b.string()).code == 0);
  REQUIRE(fs::exists(a / "dataset.csv"));
  REQUIRE(fs::exists(a / "dataset.json"));
  CHECK(read_bytes(a / "dataset.csv") == read_bytes(b / "dataset.csv"));
  CHECK(read_bytes(a / "dataset.json") == read_bytes(b / "dataset.json"));

  const auto side = nlohmann::json::parse(read_bytes(a / "dataset.json"));
  CHECK(side["target"]["name"] == "cosine_product");
  CHECK(side["noise"]["kind"] == "gaussian");
  CHECK(side["n"] == 50);

  // 51 lines: header plus 50 rows.
  const std::string csv = read_bytes(a / "dataset.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);

  CHECK(run_cmd(cli() + " dataset-gen --n 0 --out " + a.string()).code == 1);
}

TEST_CASE("global seed environment variable feeds unseeded runs") {
  const fs::path a = scratch("env_a"), b = scratch("env_b"), c = scratch("env_c");
  const std::string base = " dataset-gen --target affine --d 1 --n 20 --out ";
  CHECK(run_cmd("RELU_CONSTRUCTOR_SEED=77 " + cli() + base + a.string()).code == 0);
  CHECK(run_cmd("RELU_CONSTRUCTOR_SEED=77 " + cli() + base + b.string()).code == 0);
  CHECK(run_cmd("RELU_CONSTRUCTOR_SEED=78 " + cli() + base + c.string()).code == 0);
  CHECK(read_bytes(a / "dataset.csv") == read_bytes(b / "dataset.csv"));
  CHECK(read_bytes(a / "dataset.csv") != read_bytes(c / "dataset.csv"));

  // A non-numeric seed is rejected.
  CHECK(run_cmd("RELU_CONSTRUCTOR_SEED=many " + cli() + base + a.string())
            .code == 1);
}

TEST_CASE("minkowski estimates a segment dimension near one") {
  const fs::path dir = scratch("mink");
  const CmdResult r = run_cmd(
      cli() +
      " minkowski --support segment --d 3 --set-seed 4 --points 2000 "
      "--seed 9 --r-max 0.05 --r-min 0.004 --r-count 7 --out " +
      dir.string());
  CHECK(r.code == 0);
  REQUIRE(r.out.find("slope") != std::string::npos);
  REQUIRE(fs::exists(dir / "covering.csv"));
  REQUIRE(fs::exists(dir / "minkowski.json"));
  const auto j = nlohmann::json::parse(read_bytes(dir / "minkowski.json"));
  const double slope = j["slope"].get<double>();
  CHECK(slope > 0.75);
  CHECK(slope < 1.25);
  CHECK(j["counts"].size() == 7);

  // Degenerate radius ladder: validation error.
  CHECK(run_cmd(cli() + " minkowski --support segment --d 3 --points 100 "
                        "--r-max 0.01 --r-min 0.01 --r-count 3 --out " +
                dir.string())
            .code == 1);
}

TEST_CASE("project audits distortion and suggests dimensions") {
  const fs::path dir = scratch("proj");
  const CmdResult r = run_cmd(
      cli() +
      " project --kind ortho --d 10 --d0 4 --seed 3 --audit-pairs 200 "
      "--support cube --out " +
      (dir / "projector.json").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("10 -> 4") != std::string::npos);
  CHECK(r.out.find("distortion") != std::string::npos);
  const auto j = nlohmann::json::parse(read_bytes(dir / "projector.json"));
  CHECK(j["kind"] == "ortho_scaled");
  CHECK(j["matrix"].size() == 4);
  CHECK(j["matrix"][0].size() == 10);

  const CmdResult s = run_cmd(
      cli() + " project --suggest-dm 1 --d 10 --suggest-delta 0.5 "
              "--suggest-c 1");
  CHECK(s.code == 0);
  CHECK(s.out.find("suggested projection dimension: 12") != std::string::npos);

  CHECK(run_cmd(cli() + " project --kind ortho --d 3 --d0 5").code == 1);
}

TEST_CASE("sweep-rate produces plot-ready artifacts deterministically") {
  const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::string base =
      cli() +
      " sweep-rate --target affine --beta 1 --d 1 --B0 1 --noise gaussian "
      "--noise-scale 0.2 --n 64 --n 128 --n 256 --n 512 --replicates 3 "
      "--epochs 10 --batch 32 --mc-points 500 --seed 4 --out ";
  const CmdResult r = run_cmd(base + a.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("fitted slope") != std::string::npos);
  REQUIRE(fs::exists(a / "rate.csv"));
  REQUIRE(fs::exists(a / "rate.json"));
  REQUIRE(fs::exists(a / "rate_plot.dat"));
  REQUIRE(fs::exists(a / "rate_plot.gp"));

  const auto j = nlohmann::json::parse(read_bytes(a / "rate.json"));
  CHECK(j["n_values"].size() == 4);
  CHECK(j["replicates"] == 3);
  CHECK(std::isfinite(j["fitted_slope"].get<double>()));

  // The gnuplot script is data-only plotting text referencing the dat file.
  const std::string gp = read_bytes(a / "rate_plot.gp");
  CHECK(gp.find("rate_plot.dat") != std::string::npos);
  CHECK(gp.find("logscale") != std::string::npos);

  CHECK(run_cmd(base + b.string()).code == 0);
  CHECK(read_bytes(a / "rate.json") == read_bytes(b / "rate.json"));
  CHECK(read_bytes(a / "rate.csv") == read_bytes(b / "rate.csv"));

  // Fewer than four sample sizes: validation error.
  CHECK(run_cmd(cli() +
                " sweep-rate --target affine --d 1 --n 64 --n 128 --out " +
                a.string())
            .code == 1);
}
