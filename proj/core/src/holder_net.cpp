// Smooth-function approximant on the unit cube: a cell-index stage (one
// staircase per coordinate), a bank of point fitters holding scaled
// derivative tables over the cell grid, monomial nets in the within-cell
// offsets, and product nets combining the two into a Taylor polynomial per
// cell.  Certified on a lattice that excludes the thin gap region where the
// staircases ramp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "builder_internal.hpp"
#include "reluc/builders.hpp"
#include "reluc/targets.hpp"

namespace reluc {

namespace {

Eigen::VectorXd cell_corner(std::int64_t idx, std::int64_t K, int d) {
  Eigen::VectorXd theta(d);
  for (int j = 0; j < d; ++j) {
    theta(j) = static_cast<double>(idx % K) / static_cast<double>(K);
    idx /= K;
  }
  return theta;
}

// d^alpha f at x, preferring analytic partials; falls back to central
// differences when allowed.
double partial_value(const HolderTarget& target, const MultiIndex& alpha,
                     const Eigen::VectorXd& x, bool allow_fd, bool* fd_used) {
  if (target.has_partial(alpha)) return target.partials.at(alpha)(x);
  if (multi_index_order(alpha) == 0) return target.eval(x);
  if (!allow_fd)
    throw ValidationError(
        "holder approximant: target lacks an analytic partial derivative and "
        "finite differences are disabled (allow_fd = false)");
  *fd_used = true;
  return finite_difference_partial(target.eval, x, alpha);
}

bool within_budget(const NetworkStats& actual, const NetworkStats& budget) {
  return actual.width <= budget.width && actual.depth <= budget.depth;
}

}  // namespace

namespace detail {

Network build_holder_core(const HolderTarget& target, int N, int M,
                          BuildProfile profile, bool allow_fd, double delta,
                          bool* fd_used_out) {
  if (N < 1 || M < 1)
    throw ValidationError("holder approximant: N and M must be >= 1");
  const int d = target.d;
  if (d < 1) throw ValidationError("holder approximant: d must be >= 1");
  if (!(target.beta > 0.0))
    throw ValidationError("holder approximant: beta must be positive");
  if (!(target.B0 > 0.0))
    throw ValidationError("holder approximant: B0 must be positive");
  if (!target.eval)
    throw ValidationError("holder approximant: target has no evaluator");
  const int s = smoothness_order(target.beta);
  if (s > 8)
    throw ValidationError(
        "holder approximant: smoothness order above 8 is not supported "
        "(exact factorial tables)");
  const double B0 = target.B0;

  const std::int64_t K = grid_resolution(N, M, d);
  std::int64_t table = 1;
  for (int j = 0; j < d; ++j) {
    table *= K;
    if (table > 50'000'000)
      throw ComputeError(
          "holder approximant: cell table K^d exceeds 5e7 entries");
  }

  // Stage A: one staircase-with-offset per coordinate, then an affine
  // adapter producing [cell index, offsets y_1..y_d].
  const Network step1 =
      detail::build_step_net_core(N, M, d, delta, profile, /*with_anchor=*/true);
  std::vector<Network> columns;
  columns.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(1, d);
    sel(0, j) = 1.0;
    columns.push_back(compose(step1, affine_net(sel, Eigen::VectorXd::Zero(1))));
  }
  Network stageA = parallelize(columns);  // outputs psi_1, y_1, psi_2, y_2, ...

  Eigen::MatrixXd adapt = Eigen::MatrixXd::Zero(1 + d, 2 * d);
  {
    double place = 1.0;
    for (int j = 0; j < d; ++j) {
      adapt(0, 2 * j) = place;
      place *= static_cast<double>(K);
      adapt(1 + j, 2 * j + 1) = 1.0;
    }
  }
  Network trunk =
      compose(affine_net(adapt, Eigen::VectorXd::Zero(1 + d)), stageA);

  // Derivative tables, rescaled to [0,1].
  const auto alphas = multi_indices_up_to(d, s);
  const int heads = static_cast<int>(alphas.size());
  const int s_fit = s + 1;
  bool fd_used = false;

  std::vector<Network> bank;
  bank.reserve(static_cast<std::size_t>(2 * heads - 1));
  Eigen::MatrixXd pick_index = Eigen::MatrixXd::Zero(1, 1 + d);
  pick_index(0, 0) = 1.0;
  Eigen::MatrixXd pick_offsets = Eigen::MatrixXd::Zero(d, 1 + d);
  for (int j = 0; j < d; ++j) pick_offsets(j, 1 + j) = 1.0;

  for (const auto& alpha : alphas) {
    std::vector<double> values(static_cast<std::size_t>(table));
    for (std::int64_t i = 0; i < table; ++i) {
      const Eigen::VectorXd theta = cell_corner(i, K, d);
      const double v = partial_value(target, alpha, theta, allow_fd, &fd_used);
      double u = 0.5 * (v / B0 + 1.0);
      if (u < -1e-6 || u > 1.0 + 1e-6)
        throw ValidationError(
            "holder approximant: a partial derivative exceeds the declared "
            "bound B0");
      values[static_cast<std::size_t>(i)] = std::clamp(u, 0.0, 1.0);
    }
    Network fit = detail::fit_points(values, N, M, s_fit, profile);
    bank.push_back(compose(fit, affine_net(pick_index, Eigen::VectorXd::Zero(1))));
  }
  for (const auto& alpha : alphas) {
    if (multi_index_order(alpha) == 0) continue;
    Network mono = build_monomial_net(alpha, N, M, profile);
    bank.push_back(
        compose(mono, affine_net(pick_offsets, Eigen::VectorXd::Zero(d))));
  }

  Network stageB = compose(parallelize(bank), trunk);
  // stageB outputs: fit_0, fit_alpha (heads-1), mono_alpha (heads-1).

  Network body;
  if (heads == 1) {
    Eigen::MatrixXd w(1, 1);
    w(0, 0) = 2.0 * B0;
    Eigen::VectorXd b(1);
    b(0) = -B0;
    body = compose(affine_net(w, b), stageB);
  } else {
    const int wide = 2 * heads - 1;
    std::vector<Network> terms;
    terms.reserve(static_cast<std::size_t>(heads));
    {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, wide);
      w(0, 0) = 2.0;
      Eigen::VectorXd b(1);
      b(0) = -1.0;
      terms.push_back(affine_net(w, b));
    }
    const int ppM = 2 * s_fit * M;
    int t = 0;
    for (const auto& alpha : alphas) {
      if (multi_index_order(alpha) == 0) continue;
      ++t;
      const double fact = static_cast<double>(multi_index_factorial(alpha));
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, wide);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
      w(0, t) = 2.0 / fact;  // (2 fit - 1) / alpha!
      b(0) = -1.0 / fact;
      w(1, heads + (t - 1)) = 1.0;
      Network pp = build_product_net(N, ppM, -1.0, 1.0, profile);
      terms.push_back(compose(pp, affine_net(w, b)));
    }
    Network stageC = compose(parallelize(terms), stageB);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Constant(1, heads, B0);
    body = compose(affine_net(sum, Eigen::VectorXd::Zero(1)), stageC);
  }

  if (fd_used_out) *fd_used_out = fd_used;
  return clip(body, B0);
}

}  // namespace detail

std::pair<Network, ApproxCertificate> build_holder_approximant(
    const HolderTarget& target, int N, int M, BuildProfile profile,
    bool allow_fd, const CertifyOptions& options) {
  const int d = target.d;
  bool fd_used = false;
  const std::int64_t K =
      (d >= 1 && N >= 1 && M >= 1) ? grid_resolution(N, M, d) : 1;
  const double delta = default_gap(K);
  Network net =
      detail::build_holder_core(target, N, M, profile, allow_fd, delta,
                                &fd_used);
  const int s = smoothness_order(target.beta);
  const int heads = static_cast<int>(multi_indices_up_to(d, s).size());

  ApproxCertificate cert;
  cert.construction = "holder";
  cert.profile = profile;
  cert.N = N;
  cert.M = M;
  cert.d = d;
  cert.beta = target.beta;
  cert.B0 = target.B0;
  cert.bound_value = holder_error_bound(target.beta, d, target.B0, N, M);
  cert.actual = stats(net);
  cert.budget = holder_budget(target.beta, d, N, M);
  cert.fd_fallback = fd_used;

  OmegaRegion omega{d, K, delta};
  const auto& f = target.eval;
  SupMeasurement m = measure_sup_error(net, f, d, omega, options);
  cert.measured_sup_error = m.sup_error;
  cert.grid = m.grid;
  cert.pass = cert.measured_sup_error <= cert.bound_value + 1e-9 &&
              (profile != BuildProfile::paper_budget ||
               within_budget(cert.actual, *cert.budget));
  char note[160];
  std::snprintf(note, sizeof(note),
                "target=%s K=%lld delta=%.9g taylor_heads=%d",
                target.name.c_str(), static_cast<long long>(K), delta, heads);
  cert.notes = note;
  return {std::move(net), std::move(cert)};
}

}  // namespace reluc
