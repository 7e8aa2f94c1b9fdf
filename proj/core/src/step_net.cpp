// Staircase nets psi(x) = k on [k/K, (k+1)/K - delta), built either as a
// single wide ramp-sum layer (simple profile) or as a composition of
// resolution-refining stages whose width/depth stay inside the quoted
// budgets (paper_budget profile).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "builder_internal.hpp"
#include "reluc/builders.hpp"

namespace reluc {

namespace detail {

std::int64_t integer_root_floor(std::int64_t value, int p) {
  if (value < 0) throw ValidationError("integer_root_floor: negative value");
  if (p <= 0) throw ValidationError("integer_root_floor: nonpositive power");
  if (p == 1 || value <= 1) return value;
  auto pow_le = [&](std::int64_t t) {
    // true iff t^p <= value, overflow-safe
    std::int64_t acc = 1;
    for (int i = 0; i < p; ++i) {
      if (acc > value / t) return false;
      acc *= t;
    }
    return acc <= value;
  };
  std::int64_t t = static_cast<std::int64_t>(
      std::floor(std::pow(static_cast<double>(value), 1.0 / p)));
  t = std::max<std::int64_t>(t - 2, 1);
  while (pow_le(t + 1)) ++t;
  return t;
}

namespace {

struct Stage {
  std::int64_t factor;
  bool wide;
};

// One wide stage: a single hidden layer holding every ramp of the factor.
void append_wide_stage(std::vector<Layer>& layers, Expr& x_expr, Expr& a_expr,
                       bool have_a, Eigen::Index& width, std::int64_t f,
                       std::int64_t R, double delta) {
  LayerPlan plan(width);
  const Eigen::Index xi = plan.add(x_expr);
  Eigen::Index ai = -1;
  if (have_a) ai = plan.add(a_expr);
  const double w_ramp = delta * static_cast<double>(R);
  // u = x*R - a is the position inside the current cell, in [0,1).
  Expr u = x_expr.scaled(static_cast<double>(R)).minus(a_expr);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ramps;
  for (std::int64_t c = 1; c < f; ++c) {
    const double thr = static_cast<double>(c) / static_cast<double>(f);
    Expr hi = u.scaled(1.0 / w_ramp).shifted((w_ramp - thr) / w_ramp);
    Expr lo = u.scaled(1.0 / w_ramp).shifted(-thr / w_ramp);
    ramps.emplace_back(plan.add(hi), plan.add(lo));
  }
  layers.push_back(plan.build());
  width = plan.width();
  x_expr = Expr::unit(width, xi);
  Expr a_new = have_a ? Expr::unit(width, ai, static_cast<double>(f))
                      : Expr::zero(width);
  for (auto [hi, lo] : ramps)
    a_new = a_new.plus(Expr::unit(width, hi)).minus(Expr::unit(width, lo));
  a_expr = a_new;
}

// One narrow stage: f-1 layers of constant width, one jump per layer.
void append_narrow_stage(std::vector<Layer>& layers, Expr& x_expr,
                         Expr& a_expr, Eigen::Index& width, std::int64_t f,
                         std::int64_t R, double delta) {
  const double w_ramp = delta * static_cast<double>(R);
  Expr p_expr;  // partial jump count, valid over the current layer
  bool have_p = false;
  for (std::int64_t j = 1; j < f; ++j) {
    LayerPlan plan(width);
    const Eigen::Index xi = plan.add(x_expr);
    const Eigen::Index bi = plan.add(a_expr);  // stage-entry value, carried
    Eigen::Index pi = -1;
    if (have_p) pi = plan.add(p_expr);
    Expr u = x_expr.scaled(static_cast<double>(R)).minus(a_expr);
    const double thr = static_cast<double>(j) / static_cast<double>(f);
    const Eigen::Index hi =
        plan.add(u.scaled(1.0 / w_ramp).shifted((w_ramp - thr) / w_ramp));
    const Eigen::Index lo =
        plan.add(u.scaled(1.0 / w_ramp).shifted(-thr / w_ramp));
    layers.push_back(plan.build());
    width = plan.width();
    x_expr = Expr::unit(width, xi);
    a_expr = Expr::unit(width, bi);
    Expr jump = Expr::unit(width, hi).minus(Expr::unit(width, lo));
    p_expr = have_p ? Expr::unit(width, pi).plus(jump) : jump;
    have_p = true;
  }
  a_expr = a_expr.scaled(static_cast<double>(f)).plus(p_expr);
}

}  // namespace

Network build_step_net_core(int N, int M, int d, double delta,
                            BuildProfile profile, bool with_anchor) {
  if (N < 1 || M < 1 || d < 1)
    throw ValidationError("build_step_net: N, M, d must be positive");
  const std::int64_t K = grid_resolution(N, M, d);
  const double gap_max = default_gap(K);
  if (!(delta > 0.0) || delta > gap_max * (1.0 + 1e-12))
    throw ValidationError("build_step_net: delta must lie in (0, 1/(3K)]");

  Network net;
  net.input_dim = 1;
  const int out_dim = with_anchor ? 2 : 1;

  if (K == 1) {
    // Single cell: psi is identically zero, the anchor offset is x itself.
    Layer l;
    l.weight = Eigen::MatrixXd::Zero(out_dim, 1);
    if (with_anchor) l.weight(1, 0) = 1.0;
    l.bias = Eigen::VectorXd::Zero(out_dim);
    net.layers.push_back(std::move(l));
    return net;
  }

  if (profile == BuildProfile::simple) {
    // All K-1 jumps in one hidden layer.
    const Eigen::Index W = 2 * (K - 1) + (with_anchor ? 1 : 0);
    Layer hidden;
    hidden.weight.resize(W, 1);
    hidden.bias.resize(W);
    Layer out;
    out.weight = Eigen::MatrixXd::Zero(out_dim, W);
    out.bias = Eigen::VectorXd::Zero(out_dim);
    Eigen::Index row = 0;
    for (std::int64_t k = 1; k < K; ++k) {
      const double thr = static_cast<double>(k) / static_cast<double>(K);
      hidden.weight(row, 0) = 1.0 / delta;
      hidden.bias(row) = (delta - thr) / delta;
      out.weight(0, row) = 1.0;
      ++row;
      hidden.weight(row, 0) = 1.0 / delta;
      hidden.bias(row) = -thr / delta;
      out.weight(0, row) = -1.0;
      ++row;
    }
    if (with_anchor) {
      hidden.weight(row, 0) = 1.0;
      hidden.bias(row) = 0.0;
      // y = x - psi/K
      out.weight(1, row) = 1.0;
      const double invK = 1.0 / static_cast<double>(K);
      for (Eigen::Index r = 0; r < row; r += 2) {
        out.weight(1, r) = -invK;
        out.weight(1, r + 1) = invK;
      }
    }
    net.layers.push_back(std::move(hidden));
    net.layers.push_back(std::move(out));
    return net;
  }

  // paper_budget: stage the K = n1 * n1 * m refinement as two wide stages of
  // factor n1 = floor(N^(1/d)) followed by narrow stages covering
  // m = floor(M^(2/d)); for d = 1, m = M^2 splits into two factors of M.
  const std::int64_t n1 = integer_root_floor(N, d);
  const std::int64_t m = integer_root_floor(static_cast<std::int64_t>(M) * M, d);
  std::vector<Stage> stages;
  if (n1 > 1) {
    stages.push_back({n1, true});
    stages.push_back({n1, true});
  }
  if (d == 1) {
    if (M > 1) {
      stages.push_back({M, false});
      stages.push_back({M, false});
    }
  } else if (m > 1) {
    stages.push_back({m, false});
  }

  std::vector<Layer> layers;
  Eigen::Index width = 1;  // raw input
  Expr x_expr = Expr::unit(1, 0);
  Expr a_expr = Expr::zero(1);
  bool have_a = false;
  std::int64_t R = 1;
  for (const Stage& st : stages) {
    if (st.wide) {
      append_wide_stage(layers, x_expr, a_expr, have_a, width, st.factor, R,
                        delta);
    } else {
      append_narrow_stage(layers, x_expr, a_expr, width, st.factor, R, delta);
    }
    have_a = true;
    R *= st.factor;
  }

  // Final affine readout (no ReLU on the last layer).
  Layer readout;
  readout.weight.resize(out_dim, width);
  readout.bias.resize(out_dim);
  readout.weight.row(0) = a_expr.w;
  readout.bias(0) = a_expr.c;
  if (with_anchor) {
    const double invK = 1.0 / static_cast<double>(K);
    Expr y = x_expr.minus(a_expr.scaled(invK));
    readout.weight.row(1) = y.w;
    readout.bias(1) = y.c;
  }
  net.layers = std::move(layers);
  net.layers.push_back(std::move(readout));
  return net;
}

}  // namespace detail

std::int64_t grid_resolution(int N, int M, int d) {
  if (N < 1 || M < 1 || d < 1)
    throw ValidationError("grid_resolution: N, M, d must be positive");
  const std::int64_t n1 = detail::integer_root_floor(N, d);
  const std::int64_t m =
      detail::integer_root_floor(static_cast<std::int64_t>(M) * M, d);
  return n1 * n1 * m;
}

double default_gap(std::int64_t K) {
  if (K < 1) throw ValidationError("default_gap: K must be positive");
  return 1.0 / (3.0 * static_cast<double>(K));
}

bool omega_membership(const Eigen::VectorXd& x, const OmegaRegion& region) {
  if (x.size() != region.d)
    throw ValidationError("omega_membership: dimension mismatch");
  if (region.K <= 1) return false;
  const double K = static_cast<double>(region.K);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    // Nearest cell boundary k/K above x_i; x_i is in the gap iff it lies in
    // the open interval (k/K - delta, k/K) for some interior k.
    const double t = x(i) * K;
    const std::int64_t k = static_cast<std::int64_t>(std::ceil(t));
    if (k >= 1 && k <= region.K - 1) {
      const double boundary = static_cast<double>(k) / K;
      if (x(i) > boundary - region.delta && x(i) < boundary) return true;
    }
  }
  return false;
}

double omega_measure_bound(const OmegaRegion& region) {
  return static_cast<double>(region.d) * static_cast<double>(region.K) *
         region.delta;
}

Network build_step_net(int N, int M, int d, double delta,
                       BuildProfile profile) {
  return detail::build_step_net_core(N, M, d, delta, profile, false);
}

ApproxCertificate certify_step_net(const Network& net, int N, int M, int d,
                                   double delta, BuildProfile profile,
                                   int probes_per_cell) {
  const std::int64_t K = grid_resolution(N, M, d);
  double worst = 0.0;
  std::int64_t probes = 0;
  Eigen::VectorXd x(1);
  for (std::int64_t k = 0; k < K; ++k) {
    const double lo = static_cast<double>(k) / static_cast<double>(K);
    double hi = static_cast<double>(k + 1) / static_cast<double>(K);
    if (k < K - 1) hi -= delta;
    for (int p = 0; p < probes_per_cell; ++p) {
      const double t =
          (probes_per_cell == 1)
              ? lo
              : lo + (hi - lo) * static_cast<double>(p) /
                         static_cast<double>(probes_per_cell - 1);
      x(0) = t;
      const double err =
          std::abs(evaluate(net, x)(0) - static_cast<double>(k));
      worst = std::max(worst, err);
      ++probes;
    }
  }
  ApproxCertificate cert;
  cert.construction = "step_net";
  cert.profile = profile;
  cert.N = N;
  cert.M = M;
  cert.d = d;
  cert.bound_value = 0.0;  // the step contract is exactness
  cert.measured_sup_error = worst;
  cert.pass = worst <= cert.bound_value + 1e-9;
  cert.grid.points_per_axis = probes_per_cell;
  cert.grid.lattice_points = probes;
  cert.grid.random_points = 0;
  cert.grid.omega_excluded = true;
  cert.actual = stats(net);
  if (profile == BuildProfile::paper_budget) {
    cert.budget = step_budget(N, M, d);
    cert.pass = cert.pass && cert.actual.width <= cert.budget->width &&
                cert.actual.depth <= cert.budget->depth;
  }
  cert.notes = "exactness probes on K=" + std::to_string(K) + " cells";
  return cert;
}

}  // namespace reluc
