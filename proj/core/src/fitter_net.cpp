// Point fitters: scalar nets matching a table of values at integer abscissae
// within (NM)^(-2s), with outputs confined to [0,1] on the whole real line.
//
// Two realizations.  The piecewise-linear form interpolates the table with
// one hidden layer of width P (number of table entries) and is exact at the
// integers.  When P exceeds the paper_budget width, a deeper circuit
// quantizes the table, packs it into groups of dyadic bit-strings selected
// by a coarse staircase, and peels the requested entry's bits back out; all
// intermediate quantities are dyadic rationals, so the arithmetic is exact.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "builder_internal.hpp"
#include "reluc/builders.hpp"

namespace reluc {
namespace detail {

namespace {

// Single hidden layer through the table points: exact at integers, constant
// beyond both ends, hence ranged in [min xi, max xi] subset [0,1].
Network piecewise_linear_fitter(const std::vector<double>& xi) {
  const std::int64_t P = static_cast<std::int64_t>(xi.size());
  Network net;
  net.input_dim = 1;
  if (P == 1) {
    Layer l;
    l.weight = Eigen::MatrixXd::Zero(1, 1);
    l.bias = Eigen::VectorXd::Constant(1, xi[0]);
    net.layers.push_back(std::move(l));
    return net;
  }
  Layer hidden;
  hidden.weight = Eigen::MatrixXd::Ones(P, 1);
  hidden.bias.resize(P);
  for (std::int64_t i = 0; i < P; ++i) hidden.bias(i) = -static_cast<double>(i);
  Layer out;
  out.weight.resize(1, P);
  out.bias = Eigen::VectorXd::Constant(1, xi[0]);
  // phi(t) = xi_0 + sum_j (xi_{j+1}-xi_j) * clamp(t-j, 0, 1), telescoped
  // over the shared units relu(t - i).
  std::vector<double> delta(static_cast<std::size_t>(P - 1));
  for (std::int64_t j = 0; j + 1 < P; ++j)
    delta[static_cast<std::size_t>(j)] =
        xi[static_cast<std::size_t>(j + 1)] - xi[static_cast<std::size_t>(j)];
  out.weight(0, 0) = delta[0];
  for (std::int64_t i = 1; i + 1 < P; ++i)
    out.weight(0, i) = delta[static_cast<std::size_t>(i)] -
                       delta[static_cast<std::size_t>(i - 1)];
  out.weight(0, P - 1) = -delta[static_cast<std::size_t>(P - 2)];
  net.layers.push_back(std::move(hidden));
  net.layers.push_back(std::move(out));
  return net;
}

// Grouped-bits fitter; see file comment.  Exact up to the table
// quantization error 1/(2Q) <= (NM)^(-2s)/2.
Network grouped_bits_fitter(const std::vector<double>& xi, int N, int M,
                            int s) {
  const std::int64_t P = static_cast<std::int64_t>(xi.size());
  const NetworkStats budget = fitter_budget(N, M, s);

  // Quantization grid Q = (NM)^(2s) must be exactly representable.
  std::int64_t Q = 1;
  const std::int64_t NM = static_cast<std::int64_t>(N) * M;
  for (int i = 0; i < 2 * s; ++i) {
    if (Q > (std::int64_t{1} << 53) / NM)
      throw ComputeError(
          "point fitter: quantization grid (NM)^(2s) exceeds exact integer "
          "range");
    Q *= NM;
  }
  int R = 0;  // bits per entry
  while ((std::int64_t{1} << R) < Q + 1) ++R;

  // Group length: as large as the depth budget allows (three layers per
  // peeled position), at most 52 so the packed strings are exact dyadics.
  const std::int64_t L =
      std::min<std::int64_t>(52, (budget.depth - 6) / 3);
  if (L < 1)
    throw ComputeError("point fitter: depth budget too small for grouping");
  const std::int64_t A = (P + L - 1) / L;

  // Packed strings z[a][r] = sum_b bit_r(v_{aL+b}) 2^(-(b+1)).
  std::vector<std::vector<double>> z(static_cast<std::size_t>(A),
                                     std::vector<double>(R, 0.0));
  for (std::int64_t i = 0; i < P; ++i) {
    const std::int64_t v = std::llround(xi[static_cast<std::size_t>(i)] *
                                        static_cast<double>(Q));
    const std::int64_t a = i / L, b = i % L;
    for (int r = 0; r < R; ++r)
      if ((v >> r) & 1)
        z[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] +=
            std::ldexp(1.0, -static_cast<int>(b + 1));
  }

  std::vector<Layer> layers;
  Eigen::Index width = 1;

  // Layer 1: group staircase a(t) via unit-width ramps at t = cL, plus t.
  Expr t_expr = Expr::unit(1, 0);
  {
    LayerPlan plan(width);
    const Eigen::Index ti = plan.add(t_expr);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> ramps;
    for (std::int64_t cgrp = 1; cgrp < A; ++cgrp) {
      const double pos = static_cast<double>(cgrp * L);
      ramps.emplace_back(plan.add(t_expr.shifted(-pos + 1.0)),
                         plan.add(t_expr.shifted(-pos)));
    }
    layers.push_back(plan.build());
    width = plan.width();
    t_expr = Expr::unit(width, ti);
    Expr a_expr = Expr::zero(width);
    for (auto [hi, lo] : ramps)
      a_expr = a_expr.plus(Expr::unit(width, hi)).minus(Expr::unit(width, lo));
    // b = t - L*a, the offset within the group.
    Expr b_expr = t_expr.minus(a_expr.scaled(static_cast<double>(L)));

    // Layer 2: hat halves |a - a'| for every group, carry b.
    LayerPlan plan2(width);
    const Eigen::Index bi = plan2.add(b_expr);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> halves;
    for (std::int64_t g = 0; g < A; ++g) {
      const double gd = static_cast<double>(g);
      halves.emplace_back(plan2.add(a_expr.shifted(-gd)),
                          plan2.add(a_expr.scaled(-1.0).shifted(gd)));
    }
    layers.push_back(plan2.build());
    width = plan2.width();
    b_expr = Expr::unit(width, bi);

    // Layer 3: hats h_g = relu(1 - |a-g|) in {0,1} at integers, carry b.
    LayerPlan plan3(width);
    const Eigen::Index bi3 = plan3.add(b_expr);
    std::vector<Eigen::Index> hats;
    for (std::int64_t g = 0; g < A; ++g) {
      Expr e = Expr::zero(width).shifted(1.0);
      e = e.minus(Expr::unit(width, halves[static_cast<std::size_t>(g)].first))
              .minus(
                  Expr::unit(width, halves[static_cast<std::size_t>(g)].second));
      hats.push_back(plan3.add(e));
    }
    layers.push_back(plan3.build());
    width = plan3.width();
    b_expr = Expr::unit(width, bi3);

    // Layer 4: string selection relu(z[g][r] + h_g - 1) summed over g gives
    // w_r = z[a][r]; also start the gate lookahead for peel step 0.
    LayerPlan plan4(width);
    const Eigen::Index bi4 = plan4.add(b_expr);
    std::vector<std::vector<Eigen::Index>> sel(
        static_cast<std::size_t>(A), std::vector<Eigen::Index>(R));
    for (std::int64_t g = 0; g < A; ++g)
      for (int r = 0; r < R; ++r)
        sel[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)] =
            plan4.add(Expr::unit(width, hats[static_cast<std::size_t>(g)])
                          .shifted(z[static_cast<std::size_t>(g)]
                                    [static_cast<std::size_t>(r)] -
                                   1.0));
    layers.push_back(plan4.build());
    width = plan4.width();

    b_expr = Expr::unit(width, bi4);
    std::vector<Expr> w_exprs(static_cast<std::size_t>(R),
                              Expr::zero(width));
    for (int r = 0; r < R; ++r)
      for (std::int64_t g = 0; g < A; ++g)
        w_exprs[static_cast<std::size_t>(r)] =
            w_exprs[static_cast<std::size_t>(r)].plus(Expr::unit(
                width,
                sel[static_cast<std::size_t>(g)][static_cast<std::size_t>(r)]));
    Expr acc_expr = Expr::zero(width);

    // Peel loop: three layers per group position l.  The top-bit test of a
    // packed string produces values of order 2^L; those large units must be
    // collapsed back to a 0/1 bit in a row of their own before the bit is
    // mixed with order-one quantities, otherwise the addition rounds the
    // low-order bits of the string away.  Every affine row below combines
    // only like-scale, exactly representable dyadics, so the whole pipeline
    // is exact in double precision.
    const double two_L = std::ldexp(1.0, static_cast<int>(L));
    for (std::int64_t l = 0; l < L; ++l) {
      // Layer X: threshold residue relu(2^{L-1} - 2^L w) per string, carry
      // the rest, and form the gate halves relu(b-l), relu(l-b).
      LayerPlan px(width);
      const Eigen::Index xb = px.add(b_expr);
      const Eigen::Index xacc = px.add(acc_expr);
      std::vector<Eigen::Index> wcar(static_cast<std::size_t>(R));
      std::vector<Eigen::Index> inner(static_cast<std::size_t>(R));
      for (int r = 0; r < R; ++r) {
        const Expr& w_r = w_exprs[static_cast<std::size_t>(r)];
        wcar[static_cast<std::size_t>(r)] = px.add(w_r);
        inner[static_cast<std::size_t>(r)] =
            px.add(w_r.scaled(-two_L).shifted(two_L * 0.5));
      }
      const Eigen::Index xhp =
          px.add(b_expr.shifted(-static_cast<double>(l)));
      const Eigen::Index xhm =
          px.add(b_expr.scaled(-1.0).shifted(static_cast<double>(l)));
      layers.push_back(px.build());
      width = px.width();

      // Layer Y: bit = relu(1 - residue) is 1 exactly when the top bit of
      // the string is set; gate = relu(1 - relu(b-l) - relu(l-b)) = 1{b=l}.
      LayerPlan py(width);
      const Eigen::Index yb = py.add(Expr::unit(width, xb));
      const Eigen::Index yacc = py.add(Expr::unit(width, xacc));
      std::vector<Eigen::Index> ywc(static_cast<std::size_t>(R));
      std::vector<Eigen::Index> ybit(static_cast<std::size_t>(R));
      for (int r = 0; r < R; ++r) {
        ywc[static_cast<std::size_t>(r)] =
            py.add(Expr::unit(width, wcar[static_cast<std::size_t>(r)]));
        ybit[static_cast<std::size_t>(r)] = py.add(
            Expr::unit(width, inner[static_cast<std::size_t>(r)], -1.0)
                .shifted(1.0));
      }
      const Eigen::Index ygate =
          py.add(Expr::zero(width)
                     .shifted(1.0)
                     .minus(Expr::unit(width, xhp))
                     .minus(Expr::unit(width, xhm)));
      layers.push_back(py.build());
      width = py.width();

      // Layer Z: shift the string past the peeled bit, emit the gated bit.
      LayerPlan pz(width);
      const Eigen::Index zb = pz.add(Expr::unit(width, yb));
      const Eigen::Index zacc = pz.add(Expr::unit(width, yacc));
      std::vector<Eigen::Index> wnext(static_cast<std::size_t>(R));
      std::vector<Eigen::Index> gated(static_cast<std::size_t>(R));
      for (int r = 0; r < R; ++r) {
        Expr bit = Expr::unit(width, ybit[static_cast<std::size_t>(r)]);
        Expr wr = Expr::unit(width, ywc[static_cast<std::size_t>(r)]);
        wnext[static_cast<std::size_t>(r)] =
            pz.add(wr.scaled(2.0).minus(bit));
        gated[static_cast<std::size_t>(r)] =
            pz.add(bit.plus(Expr::unit(width, ygate)).shifted(-1.0));
      }
      layers.push_back(pz.build());
      width = pz.width();

      b_expr = Expr::unit(width, zb);
      acc_expr = Expr::unit(width, zacc);
      for (int r = 0; r < R; ++r) {
        acc_expr = acc_expr.plus(Expr::unit(
            width, gated[static_cast<std::size_t>(r)],
            std::ldexp(1.0, r)));
        w_exprs[static_cast<std::size_t>(r)] =
            Expr::unit(width, wnext[static_cast<std::size_t>(r)]);
      }
    }

    // Output clamp: phi = relu(y) - relu(y-1) with y = acc/Q.
    Expr y = acc_expr.scaled(1.0 / static_cast<double>(Q));
    LayerPlan pc(width);
    const Eigen::Index c1 = pc.add(y);
    const Eigen::Index c2 = pc.add(y.shifted(-1.0));
    layers.push_back(pc.build());
    width = pc.width();

    Layer out;
    out.weight = Eigen::MatrixXd::Zero(1, width);
    out.weight(0, c1) = 1.0;
    out.weight(0, c2) = -1.0;
    out.bias = Eigen::VectorXd::Zero(1);

    Network net;
    net.input_dim = 1;
    net.layers = std::move(layers);
    net.layers.push_back(std::move(out));

    const NetworkStats st = stats(net);
    if (st.width > budget.width || st.depth > budget.depth)
      throw ComputeError(
          "point fitter: table of " + std::to_string(P) +
          " values does not fit the paper budget for N=" + std::to_string(N) +
          " M=" + std::to_string(M) + " s=" + std::to_string(s));
    return net;
  }
}

}  // namespace

Network fit_points(const std::vector<double>& values, int N, int M, int s,
                   BuildProfile profile) {
  if (N < 1 || M < 1)
    throw ValidationError("point fitter: N and M must be positive");
  if (s < 1) throw ValidationError("point fitter: s must be a positive integer");
  if (values.empty()) throw ValidationError("point fitter: empty value table");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError("point fitter: values must lie in [0,1]");

  if (profile == BuildProfile::simple)
    return piecewise_linear_fitter(values);

  const NetworkStats budget = fitter_budget(N, M, s);
  if (static_cast<std::int64_t>(values.size()) <= budget.width)
    return piecewise_linear_fitter(values);
  return grouped_bits_fitter(values, N, M, s);
}

}  // namespace detail

Network build_point_fitter(const std::vector<double>& values, int N, int M,
                           int s, BuildProfile profile) {
  if (N < 1 || M < 1)
    throw ValidationError("build_point_fitter: N and M must be positive");
  const std::int64_t expected =
      static_cast<std::int64_t>(N) * N * M * M;
  if (static_cast<std::int64_t>(values.size()) != expected)
    throw ValidationError("build_point_fitter: expected N^2 M^2 = " +
                          std::to_string(expected) + " values, got " +
                          std::to_string(values.size()));
  return detail::fit_points(values, N, M, s, profile);
}

ApproxCertificate certify_point_fitter(const Network& net,
                                       const std::vector<double>& values,
                                       int N, int M, int s,
                                       BuildProfile profile) {
  double worst = 0.0;
  Eigen::VectorXd x(1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    x(0) = static_cast<double>(i);
    worst = std::max(worst, std::abs(evaluate(net, x)(0) - values[i]));
  }
  // Range spot-check beyond the table on both sides.
  double range_violation = 0.0;
  const double lo_probe = -3.0,
               hi_probe = static_cast<double>(values.size()) + 3.0;
  for (int j = 0; j <= 400; ++j) {
    x(0) = lo_probe + (hi_probe - lo_probe) * j / 400.0;
    const double v = evaluate(net, x)(0);
    range_violation = std::max({range_violation, -v, v - 1.0});
  }
  ApproxCertificate cert;
  cert.construction = "point_fitter";
  cert.profile = profile;
  cert.N = N;
  cert.M = M;
  cert.d = 1;
  cert.bound_value = fitter_tolerance(N, M, s);
  cert.measured_sup_error = worst;
  cert.pass = worst <= cert.bound_value + 1e-9 && range_violation <= 1e-9;
  cert.grid.points_per_axis = static_cast<int>(values.size());
  cert.grid.lattice_points = static_cast<std::int64_t>(values.size());
  cert.actual = stats(net);
  if (profile == BuildProfile::paper_budget) {
    cert.budget = fitter_budget(N, M, s);
    cert.pass = cert.pass && cert.actual.width <= cert.budget->width &&
                cert.actual.depth <= cert.budget->depth;
  }
  cert.notes = "enumerated all table points; s=" + std::to_string(s);
  return cert;
}

}  // namespace reluc
