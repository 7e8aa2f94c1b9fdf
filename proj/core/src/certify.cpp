// Closed-form error bounds, width/depth budgets, grid sup-error
// measurement, and certificate serialization.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "json.hpp"
#include "reluc/builders.hpp"
#include "reluc/rng.hpp"
#include "builder_internal.hpp"

namespace reluc {

namespace {

using nlohmann::json;

int ceil_log2(std::int64_t x) {
  int t = 0;
  while ((std::int64_t{1} << t) < x) ++t;
  return t;
}

int clamp_to_int(double v) {
  if (v >= static_cast<double>(std::numeric_limits<int>::max()))
    return std::numeric_limits<int>::max();
  return static_cast<int>(std::llround(v));
}

NetworkStats rectangle_stats(int W, int D, int input_dim) {
  NetworkStats s;
  s.width = W;
  s.depth = D;
  s.size = rectangle_size_bound(W, D, input_dim);
  s.neurons = static_cast<std::int64_t>(W) * D;
  return s;
}

// Per-layer evaluation plan: dense gemm, or sparse when the stored matrix is
// mostly explicit zeros (constructions stack many parallel blocks).
struct CompiledNet {
  struct Stage {
    std::variant<Eigen::MatrixXd, Eigen::SparseMatrix<double>> weight;
    Eigen::VectorXd bias;
    bool relu = false;
  };
  int input_dim = 0;
  std::optional<double> clip_bound;
  std::vector<Stage> stages;
};

CompiledNet compile(const Network& net) {
  CompiledNet c;
  c.input_dim = net.input_dim;
  c.clip_bound = net.clip_bound;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    CompiledNet::Stage st;
    st.bias = l.bias;
    st.relu = (i + 1 < net.layers.size());
    const Eigen::Index total = l.weight.size();
    Eigen::Index nnz = 0;
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index cc = 0; cc < l.weight.cols(); ++cc)
        if (l.weight(r, cc) != 0.0) ++nnz;
    if (total > 20000 && nnz * 3 < total) {
      Eigen::SparseMatrix<double> sp = l.weight.sparseView();
      sp.makeCompressed();
      st.weight = std::move(sp);
    } else {
      st.weight = l.weight;
    }
    c.stages.push_back(std::move(st));
  }
  return c;
}

Eigen::MatrixXd run_compiled(const CompiledNet& c, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd H = X;
  for (const auto& st : c.stages) {
    Eigen::MatrixXd Z;
    if (std::holds_alternative<Eigen::SparseMatrix<double>>(st.weight))
      Z = std::get<Eigen::SparseMatrix<double>>(st.weight) * H;
    else
      Z = std::get<Eigen::MatrixXd>(st.weight) * H;
    Z.colwise() += st.bias;
    if (st.relu) Z = Z.cwiseMax(0.0);
    H = std::move(Z);
  }
  if (c.clip_bound) {
    const double B = *c.clip_bound;
    H = H.cwiseMax(-B).cwiseMin(B);
  }
  return H;
}

}  // namespace

std::string to_string(BuildProfile profile) {
  return profile == BuildProfile::simple ? "simple" : "paper-budget";
}

BuildProfile profile_from_string(const std::string& s) {
  if (s == "simple") return BuildProfile::simple;
  if (s == "paper-budget" || s == "paper_budget")
    return BuildProfile::paper_budget;
  throw ValidationError("unknown build profile: " + s);
}

double holder_error_bound(double beta, int d, double B0, int N, int M) {
  if (!(beta > 0.0) || d < 1 || !(B0 > 0.0) || N < 1 || M < 1)
    throw ValidationError("holder_error_bound: invalid arguments");
  const int s = smoothness_order(beta);
  const double sd = static_cast<double>(s);
  const double expo = sd + std::max(beta, 1.0) / 2.0;
  return 18.0 * B0 * (sd + 1.0) * (sd + 1.0) *
         std::pow(static_cast<double>(d), expo) *
         std::pow(static_cast<double>(N) * M, -2.0 * beta / d);
}

double uniform_error_bound(double beta, int d, double B0, int N, int M) {
  return holder_error_bound(beta, d, B0, N, M) * 19.0 / 18.0;
}

double product_error_bound(int N, int M, double a, double b) {
  return 6.0 * (b - a) * (b - a) * std::pow(static_cast<double>(N),
                                            -static_cast<double>(M));
}

double monomial_error_bound(int order, int N, int M) {
  return 9.0 * order *
         std::pow(static_cast<double>(N + 1),
                  -7.0 * static_cast<double>(order) * M);
}

double fitter_tolerance(int N, int M, int s) {
  return std::pow(static_cast<double>(N) * M, -2.0 * s);
}

NetworkStats step_budget(int N, int M, int d) {
  const auto n1 = detail::integer_root_floor(N, d);
  return rectangle_stats(static_cast<int>(4 * n1 + 3), 4 * M + 5, 1);
}

NetworkStats fitter_budget(int N, int M, int s) {
  const int W = clamp_to_int(16.0 * s * (N + 1) * ceil_log2(8 * N));
  const int D = 5 * (M + 2) * ceil_log2(4 * M);
  return rectangle_stats(W, D, 1);
}

NetworkStats product_budget(int N, int M) {
  return rectangle_stats(9 * N + 1, M, 2);
}

NetworkStats monomial_budget(int order, int N, int M) {
  return rectangle_stats(9 * (N + 1) + order - 1, 7 * order * order * M,
                         order);
}

NetworkStats mid_budget() { return rectangle_stats(14, 2, 3); }

NetworkStats holder_budget(double beta, int d, int N, int M) {
  const int s = smoothness_order(beta);
  const double sp1 = s + 1.0;
  const double W =
      38.0 * sp1 * sp1 * std::pow(static_cast<double>(d), s + 1.0) * N *
      ceil_log2(8 * N);
  const double D = 21.0 * sp1 * sp1 * M * ceil_log2(8 * M);
  return rectangle_stats(clamp_to_int(W), clamp_to_int(D), d);
}

NetworkStats uniform_budget(double beta, int d, int N, int M) {
  NetworkStats base = holder_budget(beta, d, N, M);
  const double W = static_cast<double>(base.width) *
                   std::pow(3.0, static_cast<double>(d));
  return rectangle_stats(clamp_to_int(W), base.depth + 2 * d, d);
}

SupMeasurement measure_sup_error(
    const Network& net,
    const std::function<double(const Eigen::VectorXd&)>& reference, int d,
    const std::optional<OmegaRegion>& exclude, const CertifyOptions& options) {
  check_well_formed(net);
  if (net.input_dim != d)
    throw ValidationError("measure_sup_error: net input_dim != d");
  if (net.output_dim() != 1)
    throw ValidationError("measure_sup_error: scalar-output net required");

  int q = options.points_per_axis;
  if (q <= 0) q = 1 + (200 + d - 1) / d;
  // Shrink the per-axis count until the full lattice fits the cap.
  auto lattice_size = [&](int qq) {
    std::int64_t t = 1;
    for (int i = 0; i < d; ++i) {
      if (t > options.max_lattice_points / qq + 1) return std::int64_t{-1};
      t *= qq;
    }
    return t;
  };
  while (q > 2 && (lattice_size(q) < 0 || lattice_size(q) > options.max_lattice_points))
    --q;
  const std::int64_t lattice = lattice_size(q);
  if (lattice < 0)
    throw ComputeError(
        "measure_sup_error: lattice exceeds the point cap even at 2 points "
        "per axis; raise max_lattice_points or lower d");

  const CompiledNet compiled = compile(net);

  const std::int64_t chunk = 4096;
  const std::int64_t total = lattice + options.random_points;
  const std::int64_t n_chunks = (total + chunk - 1) / chunk;
  std::vector<double> chunk_max(static_cast<std::size_t>(n_chunks), 0.0);

  // Random tail points are generated once, deterministically.
  Eigen::MatrixXd random_pts(d, options.random_points);
  {
    Rng rng(options.seed);
    for (int j = 0; j < options.random_points; ++j)
      for (int i = 0; i < d; ++i) random_pts(i, j) = rng.uniform01();
  }

  auto point_at = [&](std::int64_t idx, Eigen::VectorXd& x) {
    if (idx < lattice) {
      std::int64_t rem = idx;
      for (int i = 0; i < d; ++i) {
        const std::int64_t digit = rem % q;
        rem /= q;
        x(i) = (q == 1) ? 0.0
                        : static_cast<double>(digit) /
                              static_cast<double>(q - 1);
      }
    } else {
      x = random_pts.col(idx - lattice);
    }
  };

  auto work = [&](std::int64_t c0) {
    Eigen::VectorXd x(d);
    const std::int64_t lo = c0 * chunk;
    const std::int64_t hi = std::min(total, lo + chunk);
    Eigen::MatrixXd X(d, hi - lo);
    std::vector<double> ref;
    ref.reserve(static_cast<std::size_t>(hi - lo));
    Eigen::Index kept = 0;
    for (std::int64_t idx = lo; idx < hi; ++idx) {
      point_at(idx, x);
      if (exclude && omega_membership(x, *exclude)) continue;
      X.col(kept++) = x;
      ref.push_back(reference(x));
    }
    if (kept == 0) return;
    const Eigen::MatrixXd out = run_compiled(compiled, X.leftCols(kept));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < kept; ++j)
      worst = std::max(worst,
                       std::abs(out(0, j) - ref[static_cast<std::size_t>(j)]));
    chunk_max[static_cast<std::size_t>(c0)] = worst;
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || n_chunks <= 1) {
    for (std::int64_t c0 = 0; c0 < n_chunks; ++c0) work(c0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&, t]() {
        for (std::int64_t c0 = t; c0 < n_chunks; c0 += jobs) work(c0);
      });
    for (auto& th : pool) th.join();
  }

  SupMeasurement m;
  m.sup_error = 0.0;
  for (double v : chunk_max) m.sup_error = std::max(m.sup_error, v);
  m.grid.points_per_axis = q;
  m.grid.lattice_points = lattice;
  m.grid.random_points = options.random_points;
  m.grid.seed = options.seed;
  m.grid.omega_excluded = exclude.has_value();
  return m;
}

static json stats_to_json(const NetworkStats& s) {
  return json{{"width", s.width},
              {"depth", s.depth},
              {"size", s.size},
              {"neurons", s.neurons}};
}

static NetworkStats stats_from_json(const json& j) {
  NetworkStats s;
  s.width = j.at("width").get<int>();
  s.depth = j.at("depth").get<int>();
  s.size = j.at("size").get<std::int64_t>();
  s.neurons = j.at("neurons").get<std::int64_t>();
  return s;
}

std::string certificate_to_json(const ApproxCertificate& cert) {
  json j;
  j["construction"] = cert.construction;
  j["profile"] = to_string(cert.profile);
  j["N"] = cert.N;
  j["M"] = cert.M;
  j["d"] = cert.d;
  j["beta"] = cert.beta;
  j["B0"] = cert.B0;
  j["bound"] = cert.bound_value;
  j["measured"] = cert.measured_sup_error;
  j["pass"] = cert.pass;
  j["grid"] = json{{"points_per_axis", cert.grid.points_per_axis},
                   {"lattice_points", cert.grid.lattice_points},
                   {"random_points", cert.grid.random_points},
                   {"seed", cert.grid.seed},
                   {"omega_excluded", cert.grid.omega_excluded}};
  j["stats"] = stats_to_json(cert.actual);
  j["budget"] = cert.budget ? stats_to_json(*cert.budget) : json(nullptr);
  j["fd_fallback"] = cert.fd_fallback;
  j["shift"] = cert.shift ? json(*cert.shift) : json(nullptr);
  j["notes"] = cert.notes;
  return j.dump(2);
}

ApproxCertificate certificate_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("certificate: invalid JSON: ") +
                          e.what());
  }
  ApproxCertificate c;
  try {
    c.construction = j.at("construction").get<std::string>();
    c.profile = profile_from_string(j.at("profile").get<std::string>());
    c.N = j.at("N").get<int>();
    c.M = j.at("M").get<int>();
    c.d = j.at("d").get<int>();
    c.beta = j.at("beta").get<double>();
    c.B0 = j.at("B0").get<double>();
    c.bound_value = j.at("bound").get<double>();
    c.measured_sup_error = j.at("measured").get<double>();
    c.pass = j.at("pass").get<bool>();
    const json& g = j.at("grid");
    c.grid.points_per_axis = g.at("points_per_axis").get<int>();
    c.grid.lattice_points = g.at("lattice_points").get<std::int64_t>();
    c.grid.random_points = g.at("random_points").get<int>();
    c.grid.seed = g.at("seed").get<std::uint64_t>();
    c.grid.omega_excluded = g.at("omega_excluded").get<bool>();
    c.actual = stats_from_json(j.at("stats"));
    if (!j.at("budget").is_null()) c.budget = stats_from_json(j.at("budget"));
    c.fd_fallback = j.at("fd_fallback").get<bool>();
    if (!j.at("shift").is_null()) c.shift = j.at("shift").get<double>();
    c.notes = j.at("notes").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("certificate: missing or mistyped field: ") +
                          e.what());
  }
  return c;
}

std::string certificate_table(const std::vector<ApproxCertificate>& certs) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line),
                "%-22s %-12s %3s %3s %3s %6s %6s %13s %13s %6s %7s %6s\n",
                "construction", "profile", "N", "M", "d", "beta", "B0",
                "bound", "measured", "pass", "W", "D");
  out += line;
  out += std::string(108, '-') + "\n";
  for (const auto& c : certs) {
    std::snprintf(line, sizeof(line),
                  "%-22s %-12s %3d %3d %3d %6.3g %6.3g %13.6e %13.6e %6s %7d %6d\n",
                  c.construction.c_str(), to_string(c.profile).c_str(), c.N,
                  c.M, c.d, c.beta, c.B0, c.bound_value,
                  c.measured_sup_error, c.pass ? "PASS" : "FAIL",
                  c.actual.width, c.actual.depth);
    out += line;
  }
  return out;
}

}  // namespace reluc
