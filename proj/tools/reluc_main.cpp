// reluc: build certified ReLU approximants, verify saved certificates, plan
// architectures from rate formulas, audit random projections, and run
// desk-scale regression rate sweeps.  One subcommand per task; every
// subcommand is a pure function of (flags, config, seeds) to output bytes.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reluc/builders.hpp"
#include "reluc/erm.hpp"
#include "reluc/network.hpp"
#include "reluc/projection.hpp"
#include "reluc/rates.hpp"
#include "reluc/targets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reluc;

namespace {

// ---------------------------------------------------------------------------
// Small IO helpers.

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << bytes;
}

std::string format_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Parse "key=value" tokens out of a certificate's notes string.
std::optional<std::string> note_value(const std::string& notes,
                                      const std::string& key) {
  const std::string probe = key + "=";
  std::size_t at = notes.find(probe);
  if (at == std::string::npos) return std::nullopt;
  at += probe.size();
  std::size_t end = notes.find(' ', at);
  return notes.substr(at, end == std::string::npos ? end : end - at);
}

// ---------------------------------------------------------------------------
// Config files: a JSON object whose keys mirror the long flags of the
// subcommand.  Unknown keys are rejected; a key that was also passed as an
// explicit flag is a conflict (nothing is overridden silently).

struct ConfigKey {
  std::string key;                       // JSON key
  std::string flag;                      // long flag it mirrors ("" = none)
  std::function<void(const json&)> apply;
};

void apply_config(const std::string& path, CLI::App* sub,
                  const std::vector<ConfigKey>& keys) {
  if (path.empty()) return;
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ValidationError("config: top level must be an object");
  for (const auto& item : cfg.items()) {
    const ConfigKey* match = nullptr;
    for (const auto& k : keys)
      if (k.key == item.key()) {
        match = &k;
        break;
      }
    if (!match)
      throw ValidationError("config: unknown key '" + item.key() + "'");
    if (!match->flag.empty() && sub->count(match->flag) > 0)
      throw ValidationError("config: key '" + item.key() +
                            "' conflicts with explicit flag " + match->flag);
    try {
      match->apply(item.value());
    } catch (const json::exception& e) {
      throw ValidationError("config: bad value for '" + item.key() + "': " +
                            e.what());
    }
  }
}

// RELU_CONSTRUCTOR_SEED is the global fallback used when neither a flag nor a
// config key pinned the seed.
std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* s = std::getenv("RELU_CONSTRUCTOR_SEED");
  if (!s || !*s) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0')
    throw ValidationError("RELU_CONSTRUCTOR_SEED must be an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

// ---------------------------------------------------------------------------
// Shared option bundles.

struct TargetOpts {
  std::string name = "constant";
  double beta = 1.0;
  int d = 1;
  double B0 = 1.0;

  void attach(CLI::App* sub) {
    sub->add_option("--target", name,
                    "builtin target: constant|affine|cosine_product|poly|abs_power");
    sub->add_option("--beta", beta, "smoothness exponent (> 0)");
    sub->add_option("--d", d, "ambient dimension");
    sub->add_option("--B0", B0, "Holder ball radius");
  }
  std::vector<ConfigKey> config_keys() {
    return {
        {"target", "--target", [this](const json& v) { name = v.get<std::string>(); }},
        {"beta", "--beta", [this](const json& v) { beta = v.get<double>(); }},
        {"d", "--d", [this](const json& v) { d = v.get<int>(); }},
        {"B0", "--B0", [this](const json& v) { B0 = v.get<double>(); }},
    };
  }
  HolderTarget make() const { return builtin_target(name, d, beta, B0); }
};

struct SupportOpts {
  std::string kind = "cube";  // cube|manifold|segment|cantor
  int dm = 1;
  double rho = 0.0;
  std::uint64_t embed_seed = 7;
  int cantor_factors = 1;
  std::uint64_t set_seed = 7;

  void attach(CLI::App* sub) {
    sub->add_option("--support", kind, "support: cube|manifold|segment|cantor");
    sub->add_option("--dm", dm, "intrinsic manifold dimension (1 or 2)");
    sub->add_option("--rho", rho, "neighborhood radius around the manifold");
    sub->add_option("--embed-seed", embed_seed, "seed for the embedding curve");
    sub->add_option("--cantor-factors", cantor_factors,
                    "number of Cantor-set coordinate factors");
    sub->add_option("--set-seed", set_seed, "seed for Minkowski-set anchors");
  }
  std::vector<ConfigKey> config_keys() {
    return {
        {"support", "--support", [this](const json& v) { kind = v.get<std::string>(); }},
        {"dm", "--dm", [this](const json& v) { dm = v.get<int>(); }},
        {"rho", "--rho", [this](const json& v) { rho = v.get<double>(); }},
        {"embed_seed", "--embed-seed", [this](const json& v) { embed_seed = v.get<std::uint64_t>(); }},
        {"cantor_factors", "--cantor-factors", [this](const json& v) { cantor_factors = v.get<int>(); }},
        {"set_seed", "--set-seed", [this](const json& v) { set_seed = v.get<std::uint64_t>(); }},
    };
  }
  SupportSpec make(int d) const {
    SupportSpec s;
    s.d = d;
    if (kind == "cube") {
      s.kind = SupportSpec::Kind::cube;
    } else if (kind == "manifold") {
      s.kind = SupportSpec::Kind::manifold_neighborhood;
      s.d_M = dm;
      s.rho = rho;
      s.embed_seed = embed_seed;
    } else if (kind == "segment") {
      s.kind = SupportSpec::Kind::minkowski_set;
      s.mink_kind = SupportSpec::MinkowskiKind::segment;
      s.set_seed = set_seed;
    } else if (kind == "cantor") {
      s.kind = SupportSpec::Kind::minkowski_set;
      s.mink_kind = SupportSpec::MinkowskiKind::cantor_product;
      s.cantor_factors = cantor_factors;
      s.set_seed = set_seed;
    } else {
      throw ValidationError("unknown support kind '" + kind + "'");
    }
    return s;
  }
};

struct NoiseOpts {
  std::string kind = "none";
  double scale = 0.0;

  void attach(CLI::App* sub) {
    sub->add_option("--noise", kind, "noise: none|gaussian|laplace");
    sub->add_option("--noise-scale", scale, "noise scale parameter");
  }
  std::vector<ConfigKey> config_keys() {
    return {
        {"noise", "--noise", [this](const json& v) { kind = v.get<std::string>(); }},
        {"noise_scale", "--noise-scale", [this](const json& v) { scale = v.get<double>(); }},
    };
  }
  NoiseSpec make() const {
    NoiseSpec n;
    if (kind == "none")
      n.kind = NoiseSpec::Kind::none;
    else if (kind == "gaussian")
      n.kind = NoiseSpec::Kind::gaussian;
    else if (kind == "laplace")
      n.kind = NoiseSpec::Kind::laplace;
    else
      throw ValidationError("unknown noise kind '" + kind + "'");
    n.scale = scale;
    return n;
  }
};

void append_keys(std::vector<ConfigKey>& into, std::vector<ConfigKey> more) {
  for (auto& k : more) into.push_back(std::move(k));
}

// ---------------------------------------------------------------------------
// approx-build

struct ApproxBuildArgs {
  std::string construction = "holder";
  TargetOpts target;
  int N = 1, M = 1;
  std::string profile = "paper_budget";
  bool allow_fd = false;
  double shift = std::nan("");  // uniform only; NaN = default convention
  double delta = std::nan("");  // step only; NaN = 1/(3K)
  double a = -1.0, b = 1.0;     // product range
  std::string alpha_str = "1";  // monomial exponents, comma separated
  int points_per_axis = 0;
  int random_points = 10000;
  std::uint64_t cert_seed = 2026;
  bool cert_seed_set = false;
  int jobs = 0;
  std::string out_dir = "reluc_out";
  std::string config_path;
  json cases;  // optional batch from config
};

MultiIndex parse_alpha(const std::string& s) {
  MultiIndex alpha;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      alpha.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ValidationError("bad multi-index component '" + tok + "'");
    }
  }
  if (alpha.empty()) throw ValidationError("empty multi-index");
  return alpha;
}

int run_approx_build(ApproxBuildArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"construction", "--construction", [&](const json& v) { args.construction = v.get<std::string>(); }},
      {"N", "--N", [&](const json& v) { args.N = v.get<int>(); }},
      {"M", "--M", [&](const json& v) { args.M = v.get<int>(); }},
      {"profile", "--profile", [&](const json& v) { args.profile = v.get<std::string>(); }},
      {"allow_fd", "--allow-fd", [&](const json& v) { args.allow_fd = v.get<bool>(); }},
      {"shift", "--shift", [&](const json& v) { args.shift = v.get<double>(); }},
      {"delta", "--delta", [&](const json& v) { args.delta = v.get<double>(); }},
      {"a", "--a", [&](const json& v) { args.a = v.get<double>(); }},
      {"b", "--b", [&](const json& v) { args.b = v.get<double>(); }},
      {"alpha", "--alpha", [&](const json& v) { args.alpha_str = v.get<std::string>(); }},
      {"points_per_axis", "--points-per-axis", [&](const json& v) { args.points_per_axis = v.get<int>(); }},
      {"random_points", "--random-points", [&](const json& v) { args.random_points = v.get<int>(); }},
      {"cert_seed", "--cert-seed", [&](const json& v) { args.cert_seed = v.get<std::uint64_t>(); args.cert_seed_set = true; }},
      {"jobs", "--jobs", [&](const json& v) { args.jobs = v.get<int>(); }},
      {"out_dir", "--out", [&](const json& v) { args.out_dir = v.get<std::string>(); }},
      {"cases", "", [&](const json& v) { args.cases = v; }},
  };
  append_keys(keys, args.target.config_keys());
  apply_config(args.config_path, sub, keys);
  if (sub->count("--cert-seed") > 0) args.cert_seed_set = true;
  if (!args.cert_seed_set) args.cert_seed = env_seed_or(args.cert_seed);
  if (args.jobs <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    args.jobs = hc > 0 ? static_cast<int>(hc) : 1;
  }

  const BuildProfile profile = profile_from_string(args.profile);
  CertifyOptions opt;
  opt.points_per_axis = args.points_per_axis;
  opt.random_points = args.random_points;
  opt.seed = args.cert_seed;
  opt.jobs = args.jobs;

  fs::create_directories(args.out_dir);

  struct Case {
    std::string target;
    double beta, B0;
    int d, N, M;
  };
  std::vector<Case> cases;
  if (args.cases.is_array() && !args.cases.empty()) {
    for (const auto& c : args.cases) {
      if (!c.is_object()) throw ValidationError("config: each case must be an object");
      Case k{args.target.name, args.target.beta, args.target.B0,
             args.target.d, args.N, args.M};
      for (const auto& item : c.items()) {
        if (item.key() == "target") k.target = item.value().get<std::string>();
        else if (item.key() == "beta") k.beta = item.value().get<double>();
        else if (item.key() == "B0") k.B0 = item.value().get<double>();
        else if (item.key() == "d") k.d = item.value().get<int>();
        else if (item.key() == "N") k.N = item.value().get<int>();
        else if (item.key() == "M") k.M = item.value().get<int>();
        else throw ValidationError("config: unknown case key '" + item.key() + "'");
      }
      cases.push_back(k);
    }
  } else {
    cases.push_back({args.target.name, args.target.beta, args.target.B0,
                     args.target.d, args.N, args.M});
  }

  std::vector<ApproxCertificate> certs;
  for (const Case& c : cases) {
    Network net;
    ApproxCertificate cert;
    std::string stem;
    char stembuf[160];
    if (args.construction == "holder" || args.construction == "uniform") {
      HolderTarget t = builtin_target(c.target, c.d, c.beta, c.B0);
      if (args.construction == "holder") {
        std::tie(net, cert) =
            build_holder_approximant(t, c.N, c.M, profile, args.allow_fd, opt);
      } else {
        std::optional<double> shift;
        if (!std::isnan(args.shift)) shift = args.shift;
        std::tie(net, cert) = build_uniform_approximant(
            t, c.N, c.M, profile, args.allow_fd, opt, shift);
      }
      std::snprintf(stembuf, sizeof(stembuf), "%s_%s_b%s_d%d_N%d_M%d",
                    args.construction.c_str(), c.target.c_str(),
                    format_g(c.beta).c_str(), c.d, c.N, c.M);
    } else if (args.construction == "step") {
      const std::int64_t K = grid_resolution(c.N, c.M, c.d);
      const double delta = std::isnan(args.delta) ? default_gap(K) : args.delta;
      net = build_step_net(c.N, c.M, c.d, delta, profile);
      cert = certify_step_net(net, c.N, c.M, c.d, delta, profile);
      std::snprintf(stembuf, sizeof(stembuf), "step_d%d_N%d_M%d", c.d, c.N, c.M);
    } else if (args.construction == "product") {
      net = build_product_net(c.N, c.M, args.a, args.b, profile);
      cert = certify_product_net(net, c.N, c.M, args.a, args.b, profile);
      std::snprintf(stembuf, sizeof(stembuf), "product_N%d_M%d", c.N, c.M);
    } else if (args.construction == "monomial") {
      MultiIndex alpha = parse_alpha(args.alpha_str);
      net = build_monomial_net(alpha, c.N, c.M, profile);
      cert = certify_monomial_net(net, alpha, c.N, c.M, profile, opt);
      std::snprintf(stembuf, sizeof(stembuf), "monomial_N%d_M%d", c.N, c.M);
    } else {
      throw ValidationError("unknown construction '" + args.construction +
                            "' (holder|uniform|step|product|monomial)");
    }
    stem = stembuf;
    write_file((fs::path(args.out_dir) / (stem + ".net.json")).string(),
               serialize(net));
    write_file((fs::path(args.out_dir) / (stem + ".cert.json")).string(),
               certificate_to_json(cert));
    certs.push_back(cert);
  }

  const std::string table = certificate_table(certs);
  std::fputs(table.c_str(), stdout);
  write_file((fs::path(args.out_dir) / "certificates.txt").string(), table);

  for (const auto& c : certs)
    if (!c.pass)
      throw CertificationError("certificate failed for construction " +
                               c.construction);
  return 0;
}

// ---------------------------------------------------------------------------
// approx-verify: independently recompute what a saved certificate claims.

struct VerifyArgs {
  std::string network_path, cert_path;
  int jobs = 1;
};

int run_approx_verify(VerifyArgs& args) {
  const ApproxCertificate cert = certificate_from_json(read_file(args.cert_path));
  const Network net = deserialize(read_file(args.network_path));
  std::vector<std::string> problems;

  const NetworkStats st = stats(net);
  if (st.width != cert.actual.width || st.depth != cert.actual.depth ||
      st.size != cert.actual.size)
    problems.push_back("network stats do not match the certificate");

  // Recompute the bound from first principles where the construction allows.
  std::optional<double> expected_bound;
  if (cert.construction == "holder")
    expected_bound = holder_error_bound(cert.beta, cert.d, cert.B0, cert.N, cert.M);
  else if (cert.construction == "uniform")
    expected_bound = uniform_error_bound(cert.beta, cert.d, cert.B0, cert.N, cert.M);
  else if (cert.construction == "product_net") {
    auto range = cert.notes.find('[');
    double a = 0, b = 0;
    if (range == std::string::npos ||
        std::sscanf(cert.notes.c_str() + range, "[%lf, %lf]", &a, &b) != 2)
      problems.push_back("product certificate lacks a parseable range");
    else
      expected_bound = product_error_bound(cert.N, cert.M, a, b);
  } else if (cert.construction == "monomial_net") {
    auto at = cert.notes.find("alpha=(");
    if (at == std::string::npos)
      problems.push_back("monomial certificate lacks a parseable exponent");
    else {
      std::string body = cert.notes.substr(at + 7);
      body = body.substr(0, body.find(')'));
      expected_bound =
          monomial_error_bound(multi_index_order(parse_alpha(body)), cert.N, cert.M);
    }
  } else if (cert.construction == "step_net") {
    expected_bound = 0.0;
  }
  if (expected_bound &&
      std::abs(*expected_bound - cert.bound_value) >
          1e-9 * std::max(1.0, std::abs(*expected_bound)))
    problems.push_back("bound does not match its formula (expected " +
                       format_g(*expected_bound) + ", certificate says " +
                       format_g(cert.bound_value) + ")");

  // Re-measure the saved network against the reconstructed reference on the
  // same grid, for the constructions whose reference is recoverable.
  CertifyOptions opt;
  opt.points_per_axis = cert.grid.points_per_axis;
  opt.random_points = cert.grid.random_points;
  opt.seed = cert.grid.seed;
  opt.jobs = args.jobs;
  std::optional<double> remeasured;
  if (cert.construction == "holder" || cert.construction == "uniform") {
    const auto tname = note_value(cert.notes, "target");
    if (!tname) {
      problems.push_back("certificate does not name its target");
    } else {
      HolderTarget t = builtin_target(*tname, cert.d, cert.beta, cert.B0);
      std::optional<OmegaRegion> exclude;
      if (cert.grid.omega_excluded) {
        OmegaRegion reg;
        reg.d = cert.d;
        reg.K = grid_resolution(cert.N, cert.M, cert.d);
        const auto dtext = note_value(cert.notes, "delta");
        reg.delta = dtext ? std::stod(*dtext) : default_gap(reg.K);
        exclude = reg;
      }
      remeasured = measure_sup_error(
                       net, [&](const Eigen::VectorXd& x) { return t.eval(x); },
                       cert.d, exclude, opt)
                       .sup_error;
    }
  } else if (cert.construction == "monomial_net") {
    auto at = cert.notes.find("alpha=(");
    if (at != std::string::npos) {
      std::string body = cert.notes.substr(at + 7);
      body = body.substr(0, body.find(')'));
      MultiIndex alpha = parse_alpha(body);
      remeasured = measure_sup_error(
                       net,
                       [&](const Eigen::VectorXd& x) {
                         double v = 1.0;
                         for (std::size_t j = 0; j < alpha.size(); ++j)
                           for (int c = 0; c < alpha[j]; ++c)
                             v *= x(static_cast<int>(j));
                         return v;
                       },
                       cert.d, std::nullopt, opt)
                       .sup_error;
    }
  }
  if (remeasured &&
      std::abs(*remeasured - cert.measured_sup_error) > 1e-9)
    problems.push_back("re-measured sup error " + format_g(*remeasured) +
                       " does not match the certificate's " +
                       format_g(cert.measured_sup_error));

  // Internal consistency of the pass flag.
  bool expect_pass = cert.measured_sup_error <= cert.bound_value + 1e-9;
  if (cert.budget)
    expect_pass = expect_pass && cert.actual.width <= cert.budget->width &&
                  cert.actual.depth <= cert.budget->depth;
  if (expect_pass != cert.pass)
    problems.push_back("pass flag is inconsistent with bound and budget");

  if (!problems.empty()) {
    for (const auto& p : problems) std::fprintf(stderr, "verify: %s\n", p.c_str());
    throw CertificationError("certificate failed re-verification");
  }
  std::printf("verified: %s (bound %.6g, measured %.6g, pass)\n",
              cert.construction.c_str(), cert.bound_value,
              cert.measured_sup_error);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep-rate

struct SweepArgs {
  TargetOpts target;
  SupportOpts support;
  NoiseOpts noise;
  std::vector<std::int64_t> n_values;
  std::string plan_profile = "rectangle_min_size";
  int plan_N = 1, plan_M = 1;
  int replicates = 3, epochs = 160, batch = 64;
  double lr = 0.05;
  double width_mult = 0.125, depth_mult = 1.0 / 48.0;
  int min_width = 8, max_width = 64, min_depth = 2, max_depth = 12;
  double trunc_c = std::nan("");
  int mc_points = 20000;
  std::uint64_t seed = 1;
  bool seed_set = false;
  double B = 1.0;
  std::string project_kind;  // ""|rademacher|ortho
  int project_dim = 0;
  std::uint64_t project_seed = 11;
  std::string out_dir = "reluc_out";
  std::string config_path;
};

ProjectionMap::Kind projection_kind_from_string(const std::string& s) {
  if (s == "rademacher" || s == "rademacher_scaled")
    return ProjectionMap::Kind::rademacher_scaled;
  if (s == "ortho" || s == "ortho_scaled")
    return ProjectionMap::Kind::ortho_scaled;
  throw ValidationError("unknown projection kind '" + s + "'");
}

std::string gnuplot_script(const RateReport& rep) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "set logscale xy\n"
                "set xlabel 'n'\n"
                "set ylabel 'excess risk'\n"
                "set key left bottom\n"
                "plot 'rate_plot.dat' using 1:2 with linespoints "
                "title 'mean excess risk (fitted slope %.3f, target %.3f)'\n",
                rep.fitted_slope, rep.target_exponent);
  return buf;
}

int run_sweep_rate(SweepArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"n_values", "--n", [&](const json& v) { args.n_values = v.get<std::vector<std::int64_t>>(); }},
      {"plan_profile", "--plan-profile", [&](const json& v) { args.plan_profile = v.get<std::string>(); }},
      {"plan_N", "--plan-N", [&](const json& v) { args.plan_N = v.get<int>(); }},
      {"plan_M", "--plan-M", [&](const json& v) { args.plan_M = v.get<int>(); }},
      {"replicates", "--replicates", [&](const json& v) { args.replicates = v.get<int>(); }},
      {"epochs", "--epochs", [&](const json& v) { args.epochs = v.get<int>(); }},
      {"batch", "--batch", [&](const json& v) { args.batch = v.get<int>(); }},
      {"lr", "--lr", [&](const json& v) { args.lr = v.get<double>(); }},
      {"width_mult", "--width-mult", [&](const json& v) { args.width_mult = v.get<double>(); }},
      {"depth_mult", "--depth-mult", [&](const json& v) { args.depth_mult = v.get<double>(); }},
      {"min_width", "--min-width", [&](const json& v) { args.min_width = v.get<int>(); }},
      {"max_width", "--max-width", [&](const json& v) { args.max_width = v.get<int>(); }},
      {"min_depth", "--min-depth", [&](const json& v) { args.min_depth = v.get<int>(); }},
      {"max_depth", "--max-depth", [&](const json& v) { args.max_depth = v.get<int>(); }},
      {"trunc_c", "--trunc-c", [&](const json& v) { args.trunc_c = v.get<double>(); }},
      {"mc_points", "--mc-points", [&](const json& v) { args.mc_points = v.get<int>(); }},
      {"seed", "--seed", [&](const json& v) { args.seed = v.get<std::uint64_t>(); args.seed_set = true; }},
      {"B", "--B", [&](const json& v) { args.B = v.get<double>(); }},
      {"project_kind", "--project-kind", [&](const json& v) { args.project_kind = v.get<std::string>(); }},
      {"project_dim", "--project-dim", [&](const json& v) { args.project_dim = v.get<int>(); }},
      {"project_seed", "--project-seed", [&](const json& v) { args.project_seed = v.get<std::uint64_t>(); }},
      {"out_dir", "--out", [&](const json& v) { args.out_dir = v.get<std::string>(); }},
  };
  append_keys(keys, args.target.config_keys());
  append_keys(keys, args.support.config_keys());
  append_keys(keys, args.noise.config_keys());
  apply_config(args.config_path, sub, keys);
  if (sub->count("--seed") > 0) args.seed_set = true;
  if (!args.seed_set) args.seed = env_seed_or(args.seed);

  const HolderTarget target = args.target.make();
  const SupportSpec support = args.support.make(args.target.d);
  const NoiseSpec noise = args.noise.make();

  SweepConfig cfg;
  cfg.profile = plan_profile_from_string(args.plan_profile);
  cfg.plan_N = args.plan_N;
  cfg.plan_M = args.plan_M;
  cfg.replicates = args.replicates;
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch;
  cfg.learning_rate = args.lr;
  cfg.width_multiplier = args.width_mult;
  cfg.depth_multiplier = args.depth_mult;
  cfg.min_width = args.min_width;
  cfg.max_width = args.max_width;
  cfg.min_depth = args.min_depth;
  cfg.max_depth = args.max_depth;
  if (!std::isnan(args.trunc_c)) cfg.truncation_c = args.trunc_c;
  cfg.mc_points = args.mc_points;
  cfg.seed = args.seed;
  cfg.B = args.B;
  if (!args.project_kind.empty()) {
    if (args.project_dim <= 0)
      throw ValidationError("--project-dim must be positive when projecting");
    cfg.projection = make_projector(projection_kind_from_string(args.project_kind),
                                    args.target.d, args.project_dim,
                                    args.project_seed);
  }

  const RateReport rep = rate_sweep(target, support, noise, args.n_values, cfg);

  fs::create_directories(args.out_dir);
  write_file((fs::path(args.out_dir) / "rate.csv").string(), rate_report_csv(rep));
  write_file((fs::path(args.out_dir) / "rate.json").string(), rate_report_json(rep));
  write_file((fs::path(args.out_dir) / "rate_plot.dat").string(),
             rate_report_plot_data(rep));
  write_file((fs::path(args.out_dir) / "rate_plot.gp").string(),
             gnuplot_script(rep));

  std::printf("fitted slope %.4f (target exponent %.4f), CI [%.4f, %.4f]%s\n",
              rep.fitted_slope, rep.target_exponent, rep.slope_ci.first,
              rep.slope_ci.second, rep.degenerate ? ", degenerate" : "");
  return 0;
}

// ---------------------------------------------------------------------------
// plan

struct PlanArgs {
  double beta = 1.0;
  int d = 1;
  std::vector<std::int64_t> n_values;
  std::string profile = "rectangle_min_size";
  int N = 1, M = 1;
  double B = 1.0;
  std::string out_path;
  std::string config_path;
};

int run_plan(PlanArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"beta", "--beta", [&](const json& v) { args.beta = v.get<double>(); }},
      {"d", "--d", [&](const json& v) { args.d = v.get<int>(); }},
      {"n_values", "--n", [&](const json& v) { args.n_values = v.get<std::vector<std::int64_t>>(); }},
      {"profile", "--profile", [&](const json& v) { args.profile = v.get<std::string>(); }},
      {"N", "--N", [&](const json& v) { args.N = v.get<int>(); }},
      {"M", "--M", [&](const json& v) { args.M = v.get<int>(); }},
      {"B", "--B", [&](const json& v) { args.B = v.get<double>(); }},
      {"out", "--out", [&](const json& v) { args.out_path = v.get<std::string>(); }},
  };
  apply_config(args.config_path, sub, keys);
  if (args.n_values.empty())
    throw ValidationError("plan: provide at least one --n");

  PlanAux aux;
  aux.N = args.N;
  aux.M = args.M;
  aux.B = args.B;
  std::vector<ArchitecturePlan> plans;
  for (std::int64_t n : args.n_values)
    plans.push_back(plan_architecture(args.beta, args.d, n,
                                      plan_profile_from_string(args.profile), aux));
  std::fputs(plan_table(plans).c_str(), stdout);
  if (!args.out_path.empty()) {
    json arr = json::array();
    for (const auto& p : plans) arr.push_back(json::parse(plan_to_json(p)));
    write_file(args.out_path, arr.dump(2));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// nre

struct NreArgs {
  std::vector<double> sizes;
  std::string profile_a, profile_b;
};

std::string format_ratio(double v) {
  char buf[48];
  if (v == std::round(v))
    std::snprintf(buf, sizeof(buf), "%.1f", v);
  else
    std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int run_nre(NreArgs& args) {
  bool did = false;
  if (!args.sizes.empty()) {
    if (args.sizes.size() != 2)
      throw ValidationError("nre: provide exactly two sizes S1 S2");
    std::printf("%s\n", format_ratio(nre(args.sizes[0], args.sizes[1])).c_str());
    did = true;
  }
  if (!args.profile_a.empty() || !args.profile_b.empty()) {
    if (args.profile_a.empty() || args.profile_b.empty())
      throw ValidationError("nre: both --profile-a and --profile-b are needed");
    std::printf("%s\n",
                format_ratio(nre_exponent_ratio(
                                 plan_profile_from_string(args.profile_a),
                                 plan_profile_from_string(args.profile_b)))
                    .c_str());
    did = true;
  }
  if (!did)
    throw ValidationError("nre: provide sizes S1 S2 or two plan profiles");
  return 0;
}

// ---------------------------------------------------------------------------
// project

struct ProjectArgs {
  std::string kind = "ortho";
  int d = 8, d0 = 2;
  std::uint64_t seed = 11;
  bool seed_set = false;
  SupportOpts support;
  int audit_pairs = 0;
  std::uint64_t audit_seed = 21;
  int suggest_dm = 0;
  double suggest_delta = 0.1;
  double suggest_c = 6.0;
  std::string out_path;
  std::string config_path;
};

int run_project(ProjectArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"kind", "--kind", [&](const json& v) { args.kind = v.get<std::string>(); }},
      {"d", "--d", [&](const json& v) { args.d = v.get<int>(); }},
      {"d0", "--d0", [&](const json& v) { args.d0 = v.get<int>(); }},
      {"seed", "--seed", [&](const json& v) { args.seed = v.get<std::uint64_t>(); args.seed_set = true; }},
      {"audit_pairs", "--audit-pairs", [&](const json& v) { args.audit_pairs = v.get<int>(); }},
      {"audit_seed", "--audit-seed", [&](const json& v) { args.audit_seed = v.get<std::uint64_t>(); }},
      {"suggest_dm", "--suggest-dm", [&](const json& v) { args.suggest_dm = v.get<int>(); }},
      {"suggest_delta", "--suggest-delta", [&](const json& v) { args.suggest_delta = v.get<double>(); }},
      {"suggest_c", "--suggest-c", [&](const json& v) { args.suggest_c = v.get<double>(); }},
      {"out", "--out", [&](const json& v) { args.out_path = v.get<std::string>(); }},
  };
  append_keys(keys, args.support.config_keys());
  apply_config(args.config_path, sub, keys);
  if (sub->count("--seed") > 0) args.seed_set = true;
  if (!args.seed_set) args.seed = env_seed_or(args.seed);

  if (args.suggest_dm > 0) {
    const int dim = default_projection_dim(args.suggest_dm, args.d,
                                           args.suggest_delta, args.suggest_c);
    std::printf("suggested projection dimension: %d\n", dim);
    return 0;
  }

  const ProjectionMap map = make_projector(projection_kind_from_string(args.kind),
                                           args.d, args.d0, args.seed);
  json j;
  j["kind"] = map.kind == ProjectionMap::Kind::ortho_scaled
                  ? "ortho_scaled"
                  : "rademacher_scaled";
  j["d"] = args.d;
  j["d0"] = args.d0;
  j["seed"] = args.seed;
  std::printf("projector %s: %d -> %d (seed %llu)\n", args.kind.c_str(), args.d,
              args.d0, static_cast<unsigned long long>(args.seed));
  if (args.audit_pairs > 0) {
    const SupportSpec sup = args.support.make(args.d);
    const Eigen::MatrixXd X = sample_X(sup, args.audit_pairs, args.audit_seed);
    const Eigen::MatrixXd Y =
        sample_X(sup, args.audit_pairs, args.audit_seed ^ 0xD1CEull);
    const DistortionReport rep = distortion_audit(map, X, Y);
    std::printf("distortion over %d pairs: squared ratio in [%.6g, %.6g] "
                "(%d skipped)\n",
                rep.pairs_used, rep.min_ratio, rep.max_ratio, rep.pairs_skipped);
    j["audit"] = {{"pairs_used", rep.pairs_used},
                  {"pairs_skipped", rep.pairs_skipped},
                  {"min_ratio", rep.min_ratio},
                  {"max_ratio", rep.max_ratio}};
  }
  if (!args.out_path.empty()) {
    json rows = json::array();
    for (int i = 0; i < map.matrix.rows(); ++i) {
      json row = json::array();
      for (int c = 0; c < map.matrix.cols(); ++c) row.push_back(map.matrix(i, c));
      rows.push_back(row);
    }
    j["matrix"] = rows;
    write_file(args.out_path, j.dump(2));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// minkowski

struct MinkowskiArgs {
  SupportOpts support;
  int d = 3;
  int points = 4000;
  std::uint64_t seed = 5;
  bool seed_set = false;
  double r_max = 0.2, r_min = 0.005;
  int r_count = 12;
  std::string out_dir;
  std::string config_path;
};

int run_minkowski(MinkowskiArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"d", "--d", [&](const json& v) { args.d = v.get<int>(); }},
      {"points", "--points", [&](const json& v) { args.points = v.get<int>(); }},
      {"seed", "--seed", [&](const json& v) { args.seed = v.get<std::uint64_t>(); args.seed_set = true; }},
      {"r_max", "--r-max", [&](const json& v) { args.r_max = v.get<double>(); }},
      {"r_min", "--r-min", [&](const json& v) { args.r_min = v.get<double>(); }},
      {"r_count", "--r-count", [&](const json& v) { args.r_count = v.get<int>(); }},
      {"out_dir", "--out", [&](const json& v) { args.out_dir = v.get<std::string>(); }},
  };
  append_keys(keys, args.support.config_keys());
  apply_config(args.config_path, sub, keys);
  if (sub->count("--seed") > 0) args.seed_set = true;
  if (!args.seed_set) args.seed = env_seed_or(args.seed);
  if (args.r_count < 2 || !(args.r_min > 0) || !(args.r_max > args.r_min))
    throw ValidationError("minkowski: need r_max > r_min > 0 and r_count >= 2");

  const SupportSpec sup = args.support.make(args.d);
  const Eigen::MatrixXd X = sample_X(sup, args.points, args.seed);
  std::vector<double> radii;
  for (int i = 0; i < args.r_count; ++i) {
    const double t = static_cast<double>(i) / (args.r_count - 1);
    radii.push_back(args.r_max * std::pow(args.r_min / args.r_max, t));
  }
  const MinkowskiEstimate est = estimate_minkowski_dim(X, radii);
  std::printf("estimated Minkowski dimension (log-log slope): %.4f\n", est.slope);
  for (std::size_t i = 0; i < est.radii.size(); ++i)
    std::printf("  radius %.6g -> %d boxes\n", est.radii[i], est.counts[i]);
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_file((fs::path(args.out_dir) / "covering.csv").string(),
               covering_csv(est));
    json j;
    j["slope"] = est.slope;
    j["radii"] = est.radii;
    j["counts"] = est.counts;
    write_file((fs::path(args.out_dir) / "minkowski.json").string(), j.dump(2));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// dataset-gen

struct DatasetArgs {
  TargetOpts target;
  SupportOpts support;
  NoiseOpts noise;
  int n = 256;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out_dir = "reluc_out";
  std::string config_path;
};

int run_dataset_gen(DatasetArgs& args, CLI::App* sub) {
  std::vector<ConfigKey> keys = {
      {"n", "--n", [&](const json& v) { args.n = v.get<int>(); }},
      {"seed", "--seed", [&](const json& v) { args.seed = v.get<std::uint64_t>(); args.seed_set = true; }},
      {"out_dir", "--out", [&](const json& v) { args.out_dir = v.get<std::string>(); }},
  };
  append_keys(keys, args.target.config_keys());
  append_keys(keys, args.support.config_keys());
  append_keys(keys, args.noise.config_keys());
  apply_config(args.config_path, sub, keys);
  if (sub->count("--seed") > 0) args.seed_set = true;
  if (!args.seed_set) args.seed = env_seed_or(args.seed);

  const HolderTarget target = args.target.make();
  const SupportSpec support = args.support.make(args.target.d);
  const NoiseSpec noise = args.noise.make();
  const Dataset data = generate_dataset(target, support, noise, args.n, args.seed);

  fs::create_directories(args.out_dir);
  const std::string csv = (fs::path(args.out_dir) / "dataset.csv").string();
  write_dataset_csv(csv, data);
  write_file((fs::path(args.out_dir) / "dataset.json").string(),
             dataset_sidecar_json(target, support, noise, args.n, args.seed));
  std::printf("wrote %d samples in dimension %d to %s\n", args.n, args.target.d,
              csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified ReLU approximants, architecture plans, and "
               "regression-rate experiments"};
  app.require_subcommand(1);

  ApproxBuildArgs build_args;
  CLI::App* build = app.add_subcommand(
      "approx-build", "construct an approximant and certify its error bound");
  build->add_option("--construction", build_args.construction,
                    "holder|uniform|step|product|monomial");
  build_args.target.attach(build);
  build->add_option("--N", build_args.N, "width-scale parameter N");
  build->add_option("--M", build_args.M, "depth-scale parameter M");
  build->add_option("--profile", build_args.profile, "simple|paper_budget");
  build->add_flag("--allow-fd", build_args.allow_fd,
                  "allow finite-difference derivative fallback");
  build->add_option("--shift", build_args.shift,
                    "median-filter shift (uniform construction)");
  build->add_option("--delta", build_args.delta, "gap width (step construction)");
  build->add_option("--a", build_args.a, "product range lower end");
  build->add_option("--b", build_args.b, "product range upper end");
  build->add_option("--alpha", build_args.alpha_str,
                    "monomial exponents, comma separated");
  build->add_option("--points-per-axis", build_args.points_per_axis,
                    "certification lattice resolution (0 = auto)");
  build->add_option("--random-points", build_args.random_points,
                    "extra random certification points");
  build->add_option("--cert-seed", build_args.cert_seed,
                    "seed for random certification points");
  build->add_option("--jobs", build_args.jobs,
                    "worker threads for certification (0 = all cores)");
  build->add_option("--out", build_args.out_dir, "output directory");
  build->add_option("--config", build_args.config_path, "JSON config file");
  build->callback([&]() { run_approx_build(build_args, build); });

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "approx-verify", "recompute a saved certificate and fail on mismatch");
  verify->add_option("--network", verify_args.network_path, "network JSON file")
      ->required();
  verify->add_option("--cert", verify_args.cert_path, "certificate JSON file")
      ->required();
  verify->add_option("--jobs", verify_args.jobs, "worker threads");
  verify->callback([&]() { run_approx_verify(verify_args); });

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep-rate", "train ERM networks across sample sizes and fit the rate");
  sweep_args.target.attach(sweep);
  sweep_args.support.attach(sweep);
  sweep_args.noise.attach(sweep);
  sweep->add_option("--n", sweep_args.n_values, "sample sizes (repeatable)");
  sweep->add_option("--plan-profile", sweep_args.plan_profile,
                    "architecture plan profile");
  sweep->add_option("--plan-N", sweep_args.plan_N, "plan aux parameter N");
  sweep->add_option("--plan-M", sweep_args.plan_M, "plan aux parameter M");
  sweep->add_option("--replicates", sweep_args.replicates, "replicates per n");
  sweep->add_option("--epochs", sweep_args.epochs, "SGD epochs");
  sweep->add_option("--batch", sweep_args.batch, "minibatch size");
  sweep->add_option("--lr", sweep_args.lr, "initial learning rate");
  sweep->add_option("--width-mult", sweep_args.width_mult,
                    "width shrink multiplier applied to the literal plan");
  sweep->add_option("--depth-mult", sweep_args.depth_mult,
                    "depth shrink multiplier applied to the literal plan");
  sweep->add_option("--min-width", sweep_args.min_width, "width guard rail");
  sweep->add_option("--max-width", sweep_args.max_width, "width guard rail");
  sweep->add_option("--min-depth", sweep_args.min_depth, "depth guard rail");
  sweep->add_option("--max-depth", sweep_args.max_depth, "depth guard rail");
  sweep->add_option("--trunc-c", sweep_args.trunc_c,
                    "label truncation at c*log(n)");
  sweep->add_option("--mc-points", sweep_args.mc_points,
                    "Monte Carlo points for excess risk");
  sweep->add_option("--seed", sweep_args.seed, "sweep master seed");
  sweep->add_option("--B", sweep_args.B, "output clamp for training");
  sweep->add_option("--project-kind", sweep_args.project_kind,
                    "rademacher|ortho (empty = no projection)");
  sweep->add_option("--project-dim", sweep_args.project_dim,
                    "projected dimension d0");
  sweep->add_option("--project-seed", sweep_args.project_seed,
                    "projection matrix seed");
  sweep->add_option("--out", sweep_args.out_dir, "output directory");
  sweep->add_option("--config", sweep_args.config_path, "JSON config file");
  sweep->callback([&]() { run_sweep_rate(sweep_args, sweep); });

  PlanArgs plan_args;
  CLI::App* plan = app.add_subcommand(
      "plan", "architecture sizes from the rate formulas");
  plan->add_option("--beta", plan_args.beta, "smoothness exponent");
  plan->add_option("--d", plan_args.d, "effective dimension");
  plan->add_option("--n", plan_args.n_values, "sample sizes (repeatable)");
  plan->add_option("--profile", plan_args.profile,
                   "deep_fixed_width|wide_fixed_depth|deep_and_wide|"
                   "rectangle_min_size|manifold|minkowski");
  plan->add_option("--N", plan_args.N, "aux parameter N (manifold/minkowski)");
  plan->add_option("--M", plan_args.M, "aux parameter M (manifold/minkowski)");
  plan->add_option("--B", plan_args.B, "output bound used in size estimates");
  plan->add_option("--out", plan_args.out_path, "write plans as JSON here");
  plan->add_option("--config", plan_args.config_path, "JSON config file");
  plan->callback([&]() { run_plan(plan_args, plan); });

  NreArgs nre_args;
  CLI::App* nre_cmd = app.add_subcommand(
      "nre", "network relative efficiency of two sizes or two plan profiles");
  nre_cmd->add_option("sizes", nre_args.sizes, "two network sizes S1 S2");
  nre_cmd->add_option("--profile-a", nre_args.profile_a, "first plan profile");
  nre_cmd->add_option("--profile-b", nre_args.profile_b, "second plan profile");
  nre_cmd->callback([&]() { run_nre(nre_args); });

  ProjectArgs project_args;
  CLI::App* project = app.add_subcommand(
      "project", "random projection matrices and distortion audits");
  project->add_option("--kind", project_args.kind, "rademacher|ortho");
  project->add_option("--d", project_args.d, "ambient dimension");
  project->add_option("--d0", project_args.d0, "projected dimension");
  project->add_option("--seed", project_args.seed, "projector seed");
  project_args.support.attach(project);
  project->add_option("--audit-pairs", project_args.audit_pairs,
                      "audit distortion over this many sampled pairs");
  project->add_option("--audit-seed", project_args.audit_seed,
                      "seed for audit samples");
  project->add_option("--suggest-dm", project_args.suggest_dm,
                      "print the suggested d0 for this intrinsic dimension");
  project->add_option("--suggest-delta", project_args.suggest_delta,
                      "distortion budget for the suggestion");
  project->add_option("--suggest-c", project_args.suggest_c,
                      "constant for the suggestion");
  project->add_option("--out", project_args.out_path, "write projector JSON here");
  project->add_option("--config", project_args.config_path, "JSON config file");
  project->callback([&]() { run_project(project_args, project); });

  MinkowskiArgs mink_args;
  CLI::App* mink = app.add_subcommand(
      "minkowski", "box-counting dimension estimate of a sampled support");
  mink_args.support.attach(mink);
  mink->add_option("--d", mink_args.d, "ambient dimension");
  mink->add_option("--points", mink_args.points, "sample size");
  mink->add_option("--seed", mink_args.seed, "sampling seed");
  mink->add_option("--r-max", mink_args.r_max, "largest covering radius");
  mink->add_option("--r-min", mink_args.r_min, "smallest covering radius");
  mink->add_option("--r-count", mink_args.r_count, "number of radii");
  mink->add_option("--out", mink_args.out_dir, "output directory");
  mink->add_option("--config", mink_args.config_path, "JSON config file");
  mink->callback([&]() { run_minkowski(mink_args, mink); });

  DatasetArgs data_args;
  CLI::App* dataset = app.add_subcommand(
      "dataset-gen", "sample a regression dataset to CSV with a JSON sidecar");
  data_args.target.attach(dataset);
  data_args.support.attach(dataset);
  data_args.noise.attach(dataset);
  dataset->add_option("--n", data_args.n, "sample size");
  dataset->add_option("--seed", data_args.seed, "dataset seed");
  dataset->add_option("--out", data_args.out_dir, "output directory");
  dataset->add_option("--config", data_args.config_path, "JSON config file");
  dataset->callback([&]() { run_dataset_gen(data_args, dataset); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const CertificationError& e) {
    std::fprintf(stderr, "certification failure: %s\n", e.what());
    return 3;
  } catch (const ComputeError& e) {
    std::fprintf(stderr, "compute error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
