// Arithmetic gadget nets built from composed zigzag squarers.
//
// The scalar building block approximates u^2 on [0,1] by the piecewise
// linear interpolant on a G^m grid, realized in m layers: each layer applies
// the G-piece zigzag map Z and subtracts a correction G^(-2j) R(u_j) from a
// running channel, where Z and R are both affine in the shared units
// relu(G u_j - i).  Products come from the polarization
// zx = 2p^2 - q^2/2 - t^2/2 with p=(z+x)/2, q=z, t=x; monomials chain the
// product stage with a [0,1] clamp between factors; the median net is exact
// via the two-term max/min identities.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "builder_internal.hpp"
#include "reluc/builders.hpp"

namespace reluc {

namespace {

using detail::Expr;
using detail::LayerPlan;

// Zigzag recombination coefficients: Z(v) = sum_i c_i relu(G v - i).
std::vector<double> zigzag_coeffs(int G) {
  std::vector<double> c(static_cast<std::size_t>(G));
  c[0] = 1.0;
  for (int i = 1; i < G; ++i) c[static_cast<std::size_t>(i)] = (i % 2) ? -2.0 : 2.0;
  return c;
}

// Correction coefficients: R(v) = sum_i e_i relu(G v - i) interpolates
// g(v) = v(1-v) at the grid i/G with R(0) = 0.
std::vector<double> correction_coeffs(int G) {
  auto g = [G](int i) {
    const double v = static_cast<double>(i) / G;
    return v * (1.0 - v);
  };
  std::vector<double> e(static_cast<std::size_t>(G));
  e[0] = g(1) - g(0);
  for (int i = 1; i < G; ++i)
    e[static_cast<std::size_t>(i)] = g(i + 1) - 2.0 * g(i) + g(i - 1);
  return e;
}

// One squarer branch carried through the layers of a larger net.  The caller
// drives the per-layer protocol: seed once from an affine input expression,
// then for each layer register units and afterwards refresh expressions.
struct SquarerBranch {
  int G = 1;
  // split=true realizes u_0 = |input| by the paired units
  // relu(G e - i) + relu(-G e - i); otherwise input must be nonnegative.
  bool split = false;
  Expr input;                      // only used at the first layer
  std::vector<Eigen::Index> zig;   // indices of this layer's zig units
  std::vector<Eigen::Index> zig2;  // negated twins when split
  Eigen::Index phi_idx = -1;       // carry of the running interpolant
  Expr phi;                        // running interpolant, over current layer
  Expr u;                          // current zigzag iterate, over current layer
  int level = 0;                   // number of layers consumed

  void add_units(LayerPlan& plan, Eigen::Index width) {
    zig.clear();
    zig2.clear();
    if (level == 0) {
      for (int i = 0; i < G; ++i)
        zig.push_back(plan.add(input.scaled(G).shifted(-i)));
      if (split)
        for (int i = 0; i < G; ++i)
          zig2.push_back(plan.add(input.scaled(-G).shifted(-i)));
      phi_idx = -1;
    } else {
      for (int i = 0; i < G; ++i)
        zig.push_back(plan.add(u.scaled(G).shifted(-i)));
      phi_idx = plan.add(phi);
      (void)width;
    }
  }

  // Sum of the (possibly paired) zig units for index i, over the new layer.
  Expr zig_unit(Eigen::Index width, int i) const {
    Expr e = Expr::unit(width, zig[static_cast<std::size_t>(i)]);
    if (level == 0 && split)
      e = e.plus(Expr::unit(width, zig2[static_cast<std::size_t>(i)]));
    return e;
  }

  void refresh(Eigen::Index width) {
    const auto c = zigzag_coeffs(G);
    const auto e = correction_coeffs(G);
    Expr z_next = Expr::zero(width);
    Expr corr = Expr::zero(width);
    for (int i = 0; i < G; ++i) {
      z_next = z_next.plus(zig_unit(width, i).scaled(c[static_cast<std::size_t>(i)]));
      corr = corr.plus(zig_unit(width, i).scaled(e[static_cast<std::size_t>(i)]));
    }
    Expr phi_prev = (level == 0)
                        ? zig_unit(width, 0).scaled(1.0 / G)  // u_0 itself
                        : Expr::unit(width, phi_idx);
    const double scale = std::pow(static_cast<double>(G), -2.0 * level);
    phi = phi_prev.minus(corr.scaled(scale));
    u = z_next;
    ++level;
  }

  // Valid after m >= 1 refreshes: the interpolant of u_0^2 at level G^m.
  const Expr& value() const { return phi; }
};

}  // namespace

Network build_product_net(int N, int M, double a, double b,
                          BuildProfile profile) {
  (void)profile;  // both profiles share the composed-squarer circuit
  if (N < 1 || M < 1)
    throw ValidationError("build_product_net: N and M must be positive");
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw ValidationError("build_product_net: requires a < b");
  const int G = N;
  const int m = M;
  const double span = b - a;
  const double C = std::max(std::abs(a), std::abs(b));

  // The |.|-based polarization vanishes identically at the origin but pays
  // a C^2 prefactor; fall back to range-shifted inputs when C is too large
  // relative to the span for the quoted bound.
  const bool use_abs =
      std::log(C * C) <=
      std::log(8.0 * span * span) +
          static_cast<double>(M) * std::log(static_cast<double>(G));

  std::vector<Layer> layers;
  Eigen::Index width = 2;  // raw input (x, y)

  SquarerBranch P, Qb, T;
  P.G = Qb.G = T.G = G;
  Expr x_in = Expr::unit(2, 0), y_in = Expr::unit(2, 1);
  Expr xc, yc;  // carries for the shifted variant's linear terms
  Eigen::Index xci = -1, yci = -1;
  if (use_abs) {
    P.split = Qb.split = T.split = true;
    P.input = x_in.plus(y_in).scaled(1.0 / (2.0 * C));
    Qb.input = x_in.scaled(1.0 / C);
    T.input = y_in.scaled(1.0 / C);
  } else {
    P.input = x_in.plus(y_in).scaled(0.5 / span).shifted(-a / span);
    Qb.input = x_in.scaled(1.0 / span).shifted(-a / span);
    T.input = y_in.scaled(1.0 / span).shifted(-a / span);
  }

  for (int j = 0; j < m; ++j) {
    LayerPlan plan(width);
    P.add_units(plan, width);
    Qb.add_units(plan, width);
    T.add_units(plan, width);
    if (!use_abs) {
      xci = plan.add(j == 0 ? Qb.input : xc);
      yci = plan.add(j == 0 ? T.input : yc);
    }
    layers.push_back(plan.build());
    width = plan.width();
    P.refresh(width);
    Qb.refresh(width);
    T.refresh(width);
    if (!use_abs) {
      xc = Expr::unit(width, xci);
      yc = Expr::unit(width, yci);
    }
  }

  Expr out;
  if (use_abs) {
    // xy = 2C^2 p^2 - C^2 q^2 / 2 - C^2 t^2 / 2 with p=|x+y|/2C, q=|x|/C.
    out = P.value()
              .scaled(2.0 * C * C)
              .minus(Qb.value().scaled(0.5 * C * C))
              .minus(T.value().scaled(0.5 * C * C));
  } else {
    // xy = a^2 + a(b-a)(xt + yt) + (b-a)^2 (2p^2 - q^2/2 - t^2/2).
    out = P.value()
              .scaled(2.0 * span * span)
              .minus(Qb.value().scaled(0.5 * span * span))
              .minus(T.value().scaled(0.5 * span * span))
              .plus(xc.scaled(a * span))
              .plus(yc.scaled(a * span))
              .shifted(a * a);
  }

  Layer readout;
  readout.weight.resize(1, width);
  readout.weight.row(0) = out.w;
  readout.bias = Eigen::VectorXd::Constant(1, out.c);

  Network net;
  net.input_dim = 2;
  net.layers = std::move(layers);
  net.layers.push_back(std::move(readout));
  return net;
}

Network build_monomial_net(const MultiIndex& alpha, int N, int M,
                           BuildProfile profile) {
  (void)profile;
  if (N < 1 || M < 1)
    throw ValidationError("build_monomial_net: N and M must be positive");
  if (alpha.empty())
    throw ValidationError("build_monomial_net: empty multi-index");
  for (int aj : alpha)
    if (aj < 0)
      throw ValidationError("build_monomial_net: negative multi-index entry");
  const int d = static_cast<int>(alpha.size());
  const int k = multi_index_order(alpha);
  if (k < 1)
    throw ValidationError(
        "build_monomial_net: zero multi-index (use a constant-1 net instead)");

  // Expand alpha into the factor sequence x_{seq[0]} * x_{seq[1]} * ...
  std::vector<int> seq;
  for (int j = 0; j < d; ++j)
    for (int c = 0; c < alpha[static_cast<std::size_t>(j)]; ++c)
      seq.push_back(j);

  if (k == 1) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, d);
    w(0, seq[0]) = 1.0;
    return affine_net(w, Eigen::VectorXd::Zero(1));
  }

  const int G = N + 1;
  const int m_pp = (7 * k * M + 1) / 2 + 1;  // ceil(7kM/2) + 1

  std::vector<Layer> layers;
  Eigen::Index width = d;
  Expr z;  // current running product, over current layer (or input)
  std::vector<Expr> pend;  // pending factors, over current layer (or input)
  z = Expr::unit(d, seq[0]);
  for (std::size_t t = 1; t < seq.size(); ++t)
    pend.push_back(Expr::unit(d, seq[t]));

  for (int stage = 1; stage < k; ++stage) {
    Expr x = pend.front();
    pend.erase(pend.begin());

    SquarerBranch P, Qb, T;
    P.G = Qb.G = T.G = G;
    P.input = z.plus(x).scaled(0.5);
    Qb.input = z;
    T.input = x;
    std::vector<Eigen::Index> pidx(pend.size());
    for (int j = 0; j < m_pp; ++j) {
      LayerPlan plan(width);
      P.add_units(plan, width);
      Qb.add_units(plan, width);
      T.add_units(plan, width);
      for (std::size_t l = 0; l < pend.size(); ++l) pidx[l] = plan.add(pend[l]);
      layers.push_back(plan.build());
      width = plan.width();
      P.refresh(width);
      Qb.refresh(width);
      T.refresh(width);
      for (std::size_t l = 0; l < pend.size(); ++l)
        pend[l] = Expr::unit(width, pidx[l]);
    }
    Expr prod = P.value().scaled(2.0).minus(Qb.value().scaled(0.5)).minus(
        T.value().scaled(0.5));

    // Clamp the stage output back into [0,1].
    LayerPlan clampp(width);
    const Eigen::Index c1 = clampp.add(prod);
    const Eigen::Index c2 = clampp.add(prod.shifted(-1.0));
    for (std::size_t l = 0; l < pend.size(); ++l) pidx[l] = clampp.add(pend[l]);
    layers.push_back(clampp.build());
    width = clampp.width();
    z = Expr::unit(width, c1).minus(Expr::unit(width, c2));
    for (std::size_t l = 0; l < pend.size(); ++l)
      pend[l] = Expr::unit(width, pidx[l]);
  }

  Layer readout;
  readout.weight.resize(1, width);
  readout.weight.row(0) = z.w;
  readout.bias = Eigen::VectorXd::Constant(1, z.c);

  Network net;
  net.input_dim = d;
  net.layers = std::move(layers);
  net.layers.push_back(std::move(readout));
  return net;
}

Network build_mid_net() {
  // max{a,b} = (relu(a+b) - relu(-a-b) + relu(a-b) + relu(b-a)) / 2 and the
  // min twin with flipped signs; mid = t1+t2+t3 - max3 - min3.
  Network net;
  net.input_dim = 3;

  Expr t1 = Expr::unit(3, 0), t2 = Expr::unit(3, 1), t3 = Expr::unit(3, 2);
  Expr sum = t1.plus(t2).plus(t3);
  LayerPlan l1(3);
  const Eigen::Index s12 = l1.add(t1.plus(t2));
  const Eigen::Index s12n = l1.add(t1.plus(t2).scaled(-1.0));
  const Eigen::Index dpos = l1.add(t1.minus(t2));
  const Eigen::Index dneg = l1.add(t2.minus(t1));
  const Eigen::Index u3 = l1.add(t3);
  const Eigen::Index u3n = l1.add(t3.scaled(-1.0));
  const Eigen::Index sall = l1.add(sum);
  const Eigen::Index salln = l1.add(sum.scaled(-1.0));
  Layer layer1 = l1.build();

  const Eigen::Index W1 = 8;
  auto U = [&](Eigen::Index i) { return Expr::unit(W1, i); };
  Expr max12 = U(s12).minus(U(s12n)).plus(U(dpos)).plus(U(dneg)).scaled(0.5);
  Expr min12 = U(s12).minus(U(s12n)).minus(U(dpos)).minus(U(dneg)).scaled(0.5);
  Expr t3e = U(u3).minus(U(u3n));
  Expr sum_e = U(sall).minus(U(salln));

  LayerPlan l2(W1);
  const Eigen::Index a1 = l2.add(max12.plus(t3e));
  const Eigen::Index a2 = l2.add(max12.plus(t3e).scaled(-1.0));
  const Eigen::Index a3 = l2.add(max12.minus(t3e));
  const Eigen::Index a4 = l2.add(t3e.minus(max12));
  const Eigen::Index b1 = l2.add(min12.plus(t3e));
  const Eigen::Index b2 = l2.add(min12.plus(t3e).scaled(-1.0));
  const Eigen::Index b3 = l2.add(min12.minus(t3e));
  const Eigen::Index b4 = l2.add(t3e.minus(min12));
  const Eigen::Index sc = l2.add(sum_e);
  const Eigen::Index scn = l2.add(sum_e.scaled(-1.0));
  Layer layer2 = l2.build();

  const Eigen::Index W2 = 10;
  auto V = [&](Eigen::Index i) { return Expr::unit(W2, i); };
  Expr max3 = V(a1).minus(V(a2)).plus(V(a3)).plus(V(a4)).scaled(0.5);
  Expr min3 = V(b1).minus(V(b2)).minus(V(b3)).minus(V(b4)).scaled(0.5);
  Expr mid = V(sc).minus(V(scn)).minus(max3).minus(min3);

  Layer readout;
  readout.weight.resize(1, W2);
  readout.weight.row(0) = mid.w;
  readout.bias = Eigen::VectorXd::Constant(1, mid.c);

  net.layers.push_back(std::move(layer1));
  net.layers.push_back(std::move(layer2));
  net.layers.push_back(std::move(readout));
  return net;
}

ApproxCertificate certify_product_net(const Network& net, int N, int M,
                                      double a, double b, BuildProfile profile,
                                      int points_per_axis) {
  double worst = 0.0;
  Eigen::VectorXd x(2);
  const int q = std::max(points_per_axis, 2);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      x(0) = a + (b - a) * i / (q - 1.0);
      x(1) = a + (b - a) * j / (q - 1.0);
      worst = std::max(worst, std::abs(evaluate(net, x)(0) - x(0) * x(1)));
    }
  }
  ApproxCertificate cert;
  cert.construction = "product_net";
  cert.profile = profile;
  cert.N = N;
  cert.M = M;
  cert.d = 2;
  cert.bound_value = product_error_bound(N, M, a, b);
  cert.measured_sup_error = worst;
  cert.pass = worst <= cert.bound_value + 1e-9;
  cert.grid.points_per_axis = q;
  cert.grid.lattice_points = static_cast<std::int64_t>(q) * q;
  cert.actual = stats(net);
  if (profile == BuildProfile::paper_budget) {
    cert.budget = product_budget(N, M);
    cert.pass = cert.pass && cert.actual.width <= cert.budget->width &&
                cert.actual.depth <= cert.budget->depth;
  }
  cert.notes = "range [" + std::to_string(a) + ", " + std::to_string(b) + "]";
  return cert;
}

ApproxCertificate certify_monomial_net(const Network& net,
                                       const MultiIndex& alpha, int N, int M,
                                       BuildProfile profile,
                                       const CertifyOptions& options) {
  const int d = static_cast<int>(alpha.size());
  const int k = multi_index_order(alpha);
  auto reference = [&](const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int j = 0; j < d; ++j)
      for (int c = 0; c < alpha[static_cast<std::size_t>(j)]; ++c) v *= x(j);
    return v;
  };
  SupMeasurement meas =
      measure_sup_error(net, reference, d, std::nullopt, options);
  ApproxCertificate cert;
  cert.construction = "monomial_net";
  cert.profile = profile;
  cert.N = N;
  cert.M = M;
  cert.d = d;
  cert.bound_value = monomial_error_bound(k, N, M);
  cert.measured_sup_error = meas.sup_error;
  cert.pass = meas.sup_error <= cert.bound_value + 1e-9;
  cert.grid = meas.grid;
  cert.actual = stats(net);
  if (profile == BuildProfile::paper_budget) {
    cert.budget = monomial_budget(k, N, M);
    cert.pass = cert.pass && cert.actual.width <= cert.budget->width &&
                cert.actual.depth <= cert.budget->depth;
  }
  std::string astr = "alpha=(";
  for (int j = 0; j < d; ++j)
    astr += std::to_string(alpha[static_cast<std::size_t>(j)]) +
            (j + 1 < d ? "," : ")");
  cert.notes = astr;
  return cert;
}

}  // namespace reluc
