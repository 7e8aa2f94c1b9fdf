// Builtin smoothness-calibrated targets, support samplers (cube, tubular
// neighborhoods of embedded curves/tori, low-dimensional sets), and additive
// noise.  All randomness flows through the pinned Rng mappings, so samples
// are bit-for-bit reproducible from (spec, n, seed).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "reluc/rng.hpp"
#include "reluc/targets.hpp"

namespace reluc {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TrigEmbedding {
  // coordinate i of the embedding: 0.5 + sum_axis amp * cos(2 pi k t + phase)
  std::vector<std::vector<int>> freq;     // [axis][coord]
  std::vector<std::vector<double>> phase;  // [axis][coord]
  double amp = 0.4;
  int d = 0, d_M = 1;

  Eigen::VectorXd at(const Eigen::VectorXd& t) const {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(d, 0.5);
    for (int a = 0; a < d_M; ++a)
      for (int i = 0; i < d; ++i)
        x(i) += amp * std::cos(2.0 * kPi * freq[a][i] * t(a) + phase[a][i]);
    return x;
  }
};

TrigEmbedding make_embedding(int d, int d_M, std::uint64_t seed) {
  TrigEmbedding e;
  e.d = d;
  e.d_M = d_M;
  e.amp = (d_M == 1) ? 0.4 : 0.2;
  Rng rng(seed);
  e.freq.assign(d_M, std::vector<int>(d));
  e.phase.assign(d_M, std::vector<double>(d));
  for (int a = 0; a < d_M; ++a)
    for (int i = 0; i < d; ++i) {
      e.freq[a][i] = 1 + static_cast<int>(rng.below(2));
      e.phase[a][i] = rng.uniform(0.0, 2.0 * kPi);
    }
  return e;
}

double segment_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                        const Eigen::VectorXd& x) {
  const Eigen::VectorXd v = q - p;
  const double denom = v.squaredNorm();
  double t = denom > 0.0 ? (x - p).dot(v) / denom : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (x - (p + t * v)).norm();
}

// Nearest value in the level-40 middle-thirds set on [0,1] (greedy descent
// down both boundary branches; exact to 3^-40).
double nearest_cantor(double v) {
  double best = 1e300;
  auto descend = [&](bool prefer_low) {
    double lo = 0.0, len = 1.0;
    for (int level = 0; level < 40; ++level) {
      const double third = len / 3.0;
      const double mid_lo = lo + third, mid_hi = lo + 2.0 * third;
      if (v < mid_lo)
        len = third;
      else if (v > mid_hi)
        lo = mid_hi, len = third;
      else {
        if (prefer_low)
          len = third;
        else
          lo = mid_hi, len = third;
      }
    }
    const double cand = std::clamp(v, lo, lo + len);
    best = std::min(best, std::abs(v - cand));
  };
  descend(true);
  descend(false);
  return best;
}

Eigen::VectorXd cantor_anchor(const SupportSpec& spec) {
  Rng rng(spec.set_seed);
  Eigen::VectorXd c(spec.d);
  for (int i = 0; i < spec.d; ++i) c(i) = rng.uniform(0.1, 0.9);
  return c;
}

void segment_endpoints(const SupportSpec& spec, Eigen::VectorXd& p,
                       Eigen::VectorXd& q) {
  Rng rng(spec.set_seed);
  p.resize(spec.d);
  q.resize(spec.d);
  for (int i = 0; i < spec.d; ++i) p(i) = rng.uniform(0.1, 0.9);
  for (int i = 0; i < spec.d; ++i) q(i) = rng.uniform(0.1, 0.9);
}

void validate_spec(const SupportSpec& spec) {
  if (spec.d < 1) throw ValidationError("support: d must be positive");
  if (spec.kind == SupportSpec::Kind::manifold_neighborhood) {
    if (spec.d_M != 1 && spec.d_M != 2)
      throw ValidationError("support: intrinsic dimension must be 1 or 2");
    if (spec.d_M >= spec.d)
      throw ValidationError("support: intrinsic dimension must be < d");
    if (spec.rho >= 1.0)
      throw ValidationError("support: neighborhood radius must be < 1");
    if (spec.rho < 0.0)
      throw ValidationError("support: neighborhood radius must be >= 0");
  }
  if (spec.kind == SupportSpec::Kind::minkowski_set &&
      spec.mink_kind == SupportSpec::MinkowskiKind::cantor_product) {
    if (spec.cantor_factors < 1 || spec.cantor_factors > spec.d)
      throw ValidationError("support: cantor_factors must be in [1, d]");
  }
}

// Exact products of per-coordinate derivative bounds, maximized over all
// multi-indices of total order exactly k (simple DP).
double max_partial_bound(const std::vector<double>& per_order, int d, int k) {
  // per_order[o] bounds |h^(o)| for the shared univariate factor.
  std::vector<double> dp(static_cast<std::size_t>(k + 1),
                         -std::numeric_limits<double>::infinity());
  dp[0] = 1.0;
  for (int coord = 0; coord < d; ++coord) {
    std::vector<double> next(static_cast<std::size_t>(k + 1),
                             -std::numeric_limits<double>::infinity());
    for (int used = 0; used <= k; ++used) {
      if (!std::isfinite(dp[static_cast<std::size_t>(used)])) continue;
      for (int o = 0; o + used <= k &&
                      o < static_cast<int>(per_order.size());
           ++o) {
        const double cand =
            dp[static_cast<std::size_t>(used)] * per_order[static_cast<std::size_t>(o)];
        next[static_cast<std::size_t>(used + o)] =
            std::max(next[static_cast<std::size_t>(used + o)], cand);
      }
    }
    dp = std::move(next);
  }
  return std::max(dp[static_cast<std::size_t>(k)], 0.0);
}

}  // namespace

int smoothness_order(double beta) {
  if (!(beta > 0.0)) throw ValidationError("smoothness order: beta must be positive");
  const double f = std::floor(beta);
  return (f == beta) ? static_cast<int>(f) - 1 : static_cast<int>(f);
}

double smoothness_fraction(double beta) {
  return beta - smoothness_order(beta);
}

int multi_index_order(const MultiIndex& alpha) {
  int k = 0;
  for (int a : alpha) k += a;
  return k;
}

std::int64_t multi_index_factorial(const MultiIndex& alpha) {
  std::int64_t f = 1;
  for (int a : alpha) {
    if (a < 0) throw ValidationError("multi-index entries must be nonnegative");
    if (a > 8)
      throw ValidationError(
          "multi-index factorial limited to per-coordinate order 8");
    for (int i = 2; i <= a; ++i) f *= i;
  }
  return f;
}

std::vector<MultiIndex> multi_indices_up_to(int d, int k) {
  std::vector<MultiIndex> out;
  MultiIndex cur(static_cast<std::size_t>(d), 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == d) {
      out.push_back(cur);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      cur[static_cast<std::size_t>(pos)] = a;
      rec(pos + 1, left - a);
    }
    cur[static_cast<std::size_t>(pos)] = 0;
  };
  rec(0, k);
  std::sort(out.begin(), out.end());
  return out;
}

double finite_difference_partial(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const MultiIndex& alpha) {
  const double h = 1e-5;
  int j = -1;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] > 0) {
      j = static_cast<int>(i);
      break;
    }
  if (j < 0) return f(x);
  MultiIndex lower = alpha;
  --lower[static_cast<std::size_t>(j)];
  Eigen::VectorXd xp = x, xm = x;
  xp(j) += h;
  xm(j) -= h;
  return (finite_difference_partial(f, xp, lower) -
          finite_difference_partial(f, xm, lower)) /
         (2.0 * h);
}

HolderTarget builtin_target(const std::string& name, int d, double beta,
                            double B0) {
  if (d < 1) throw ValidationError("builtin_target: d must be positive");
  if (!(beta > 0.0)) throw ValidationError("builtin_target: beta must be positive");
  if (!(B0 > 0.0)) throw ValidationError("builtin_target: B0 must be positive");
  const int s = smoothness_order(beta);
  const double r = smoothness_fraction(beta);

  HolderTarget t;
  t.name = name;
  t.d = d;
  t.beta = beta;
  t.B0 = B0;

  const auto alphas = multi_indices_up_to(d, s);

  if (name == "constant") {
    const double c = 0.3 * B0;
    t.eval = [c](const Eigen::VectorXd&) { return c; };
    for (const auto& a : alphas) {
      if (multi_index_order(a) == 0)
        t.partials[a] = [c](const Eigen::VectorXd&) { return c; };
      else
        t.partials[a] = [](const Eigen::VectorXd&) { return 0.0; };
    }
    return t;
  }

  if (name == "affine") {
    if (B0 < 1.0)
      throw ValidationError("builtin_target: affine requires B0 >= 1");
    const double inv_d = 1.0 / d;
    t.eval = [inv_d](const Eigen::VectorXd& x) { return x.sum() * inv_d; };
    for (const auto& a : alphas) {
      const int k = multi_index_order(a);
      if (k == 0)
        t.partials[a] = t.eval;
      else if (k == 1)
        t.partials[a] = [inv_d](const Eigen::VectorXd&) { return inv_d; };
      else
        t.partials[a] = [](const Eigen::VectorXd&) { return 0.0; };
    }
    return t;
  }

  if (name == "cosine_product") {
    // f = c prod_i cos(pi x_i); |d^alpha f| <= c pi^|alpha| and the order-s
    // partials have Lipschitz-type modulus min(2 c pi^s, c sqrt(d) pi^(s+1) h),
    // whose r-Holder ratio peaks at c 2^(1-r) pi^(s+r) d^(r/2).
    const double denom = std::max(std::pow(kPi, s),
                                  std::pow(2.0, 1.0 - r) * std::pow(kPi, s + r) *
                                      std::pow(static_cast<double>(d), r / 2.0));
    const double c = B0 / denom;
    t.eval = [c, d](const Eigen::VectorXd& x) {
      double v = c;
      for (int i = 0; i < d; ++i) v *= std::cos(kPi * x(i));
      return v;
    };
    for (const auto& a : alphas) {
      t.partials[a] = [c, d, a](const Eigen::VectorXd& x) {
        double v = c;
        for (int i = 0; i < d; ++i) {
          const int o = a[static_cast<std::size_t>(i)];
          v *= std::pow(kPi, o) * std::cos(kPi * x(i) + o * kPi / 2.0);
        }
        return v;
      };
    }
    return t;
  }

  if (name == "poly") {
    // f = c prod_i h(x_i), h = 4x(1-x); h' = 4-8x, h'' = -8, higher orders 0.
    const std::vector<double> per_order = {1.0, 4.0, 8.0};
    double denom = 1.0;
    for (int k = 0; k <= s; ++k)
      denom = std::max(denom, max_partial_bound(per_order, d, k));
    const double Ms = max_partial_bound(per_order, d, s);
    const double Ms1 = max_partial_bound(per_order, d, s + 1);
    denom = std::max(denom, std::max(2.0 * Ms,
                                     std::sqrt(static_cast<double>(d)) * Ms1));
    const double c = B0 / denom;
    auto h_deriv = [](int o, double x) {
      switch (o) {
        case 0:
          return 4.0 * x * (1.0 - x);
        case 1:
          return 4.0 - 8.0 * x;
        case 2:
          return -8.0;
        default:
          return 0.0;
      }
    };
    t.eval = [c, d, h_deriv](const Eigen::VectorXd& x) {
      double v = c;
      for (int i = 0; i < d; ++i) v *= h_deriv(0, x(i));
      return v;
    };
    for (const auto& a : alphas) {
      t.partials[a] = [c, d, a, h_deriv](const Eigen::VectorXd& x) {
        double v = c;
        for (int i = 0; i < d; ++i)
          v *= h_deriv(a[static_cast<std::size_t>(i)], x(i));
        return v;
      };
    }
    return t;
  }

  if (name == "abs_power") {
    if (beta > 1.0)
      throw ValidationError("builtin_target: abs_power requires beta <= 1");
    if (B0 < 1.0)
      throw ValidationError("builtin_target: abs_power requires B0 >= 1");
    const double b = beta;
    t.eval = [b](const Eigen::VectorXd& x) {
      return std::pow(std::abs(x(0) - 0.5), b);
    };
    MultiIndex zero(static_cast<std::size_t>(d), 0);
    t.partials[zero] = t.eval;
    return t;
  }

  throw ValidationError("builtin_target: unknown name '" + name + "'");
}

Eigen::MatrixXd sample_X(const SupportSpec& spec, int n, std::uint64_t seed,
                         Eigen::MatrixXd* params) {
  validate_spec(spec);
  if (n < 1) throw ValidationError("sample_X: n must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd X(spec.d, n);

  switch (spec.kind) {
    case SupportSpec::Kind::cube: {
      if (params) params->resize(0, n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < spec.d; ++i) X(i, j) = rng.uniform01();
      break;
    }
    case SupportSpec::Kind::manifold_neighborhood: {
      const TrigEmbedding emb =
          make_embedding(spec.d, spec.d_M, spec.embed_seed);
      if (params) params->resize(spec.d_M, n);
      Eigen::VectorXd t(spec.d_M), dir(spec.d);
      for (int j = 0; j < n; ++j) {
        for (int a = 0; a < spec.d_M; ++a) t(a) = rng.uniform01();
        Eigen::VectorXd x = emb.at(t);
        if (spec.rho > 0.0) {
          for (int i = 0; i < spec.d; ++i) dir(i) = rng.normal();
          const double nrm = dir.norm();
          const double radius = rng.uniform(0.0, spec.rho);
          if (nrm > 0.0) x += dir * (radius / nrm);
          for (int i = 0; i < spec.d; ++i) x(i) = std::clamp(x(i), 0.0, 1.0);
        }
        X.col(j) = x;
        if (params) params->col(j) = t;
      }
      break;
    }
    case SupportSpec::Kind::minkowski_set: {
      if (spec.mink_kind == SupportSpec::MinkowskiKind::segment) {
        Eigen::VectorXd p, q;
        segment_endpoints(spec, p, q);
        if (params) params->resize(1, n);
        for (int j = 0; j < n; ++j) {
          const double u = rng.uniform01();
          X.col(j) = p + u * (q - p);
          if (params) (*params)(0, j) = u;
        }
      } else {
        const Eigen::VectorXd anchor = cantor_anchor(spec);
        if (params) params->resize(spec.cantor_factors, n);
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd x = anchor;
          for (int f = 0; f < spec.cantor_factors; ++f) {
            double c = 0.0, scale = 1.0;
            double u = 0.0, uscale = 1.0;
            for (int level = 0; level < 40; ++level) {
              const int digit = (rng.below(2) == 0) ? 0 : 2;
              scale /= 3.0;
              c += digit * scale;
              uscale /= 2.0;
              u += (digit ? uscale : 0.0);
            }
            x(f) = 0.1 + 0.8 * c;
            if (params) (*params)(f, j) = u;
          }
          X.col(j) = x;
        }
      }
      break;
    }
  }
  return X;
}

Eigen::MatrixXd sample_X(const SupportSpec& spec, int n, std::uint64_t seed) {
  return sample_X(spec, n, seed, nullptr);
}

double distance_to_support(const SupportSpec& spec, const Eigen::VectorXd& x) {
  validate_spec(spec);
  if (x.size() != spec.d)
    throw ValidationError("distance_to_support: dimension mismatch");
  switch (spec.kind) {
    case SupportSpec::Kind::cube: {
      double sq = 0.0;
      for (int i = 0; i < spec.d; ++i) {
        const double e = std::max({0.0, -x(i), x(i) - 1.0});
        sq += e * e;
      }
      return std::sqrt(sq);
    }
    case SupportSpec::Kind::manifold_neighborhood: {
      const TrigEmbedding emb =
          make_embedding(spec.d, spec.d_M, spec.embed_seed);
      auto dist_at = [&](const Eigen::VectorXd& t) {
        return (emb.at(t) - x).norm();
      };
      if (spec.d_M == 1) {
        const int scan = 2048;
        double best = 1e300, best_t = 0.0;
        Eigen::VectorXd t(1);
        for (int i = 0; i < scan; ++i) {
          t(0) = static_cast<double>(i) / scan;
          const double v = dist_at(t);
          if (v < best) best = v, best_t = t(0);
        }
        // Golden-section refinement around the best scan cell.
        double lo = best_t - 2.0 / scan, hi = best_t + 2.0 / scan;
        const double gr = 0.61803398874989484820;
        for (int it = 0; it < 60; ++it) {
          const double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
          t(0) = m1;
          const double v1 = dist_at(t);
          t(0) = m2;
          const double v2 = dist_at(t);
          if (v1 < v2)
            hi = m2;
          else
            lo = m1;
        }
        t(0) = 0.5 * (lo + hi);
        return std::min(best, dist_at(t));
      }
      // d_M = 2: coarse scan plus local coordinate descent.
      const int scan = 160;
      double best = 1e300;
      Eigen::VectorXd bt(2), t(2);
      for (int i = 0; i < scan; ++i)
        for (int j = 0; j < scan; ++j) {
          t << static_cast<double>(i) / scan, static_cast<double>(j) / scan;
          const double v = dist_at(t);
          if (v < best) best = v, bt = t;
        }
      double step = 1.0 / scan;
      for (int it = 0; it < 80; ++it) {
        bool improved = false;
        for (int a = 0; a < 2; ++a)
          for (int sgn : {-1, 1}) {
            t = bt;
            t(a) += sgn * step;
            const double v = dist_at(t);
            if (v < best) best = v, bt = t, improved = true;
          }
        if (!improved) step *= 0.5;
        if (step < 1e-12) break;
      }
      return best;
    }
    case SupportSpec::Kind::minkowski_set: {
      if (spec.mink_kind == SupportSpec::MinkowskiKind::segment) {
        Eigen::VectorXd p, q;
        segment_endpoints(spec, p, q);
        return segment_distance(p, q, x);
      }
      const Eigen::VectorXd anchor = cantor_anchor(spec);
      double sq = 0.0;
      for (int i = 0; i < spec.d; ++i) {
        double e;
        if (i < spec.cantor_factors) {
          // invert the affine placement 0.1 + 0.8 c
          const double v = (x(i) - 0.1) / 0.8;
          e = 0.8 * nearest_cantor(v);
        } else {
          e = x(i) - anchor(i);
        }
        sq += e * e;
      }
      return std::sqrt(sq);
    }
  }
  throw ComputeError("distance_to_support: unreachable");
}

Dataset generate_dataset(const HolderTarget& target, const SupportSpec& spec,
                         const NoiseSpec& noise, int n, std::uint64_t seed) {
  if (target.d != spec.d)
    throw ValidationError("generate_dataset: target and support dims differ");
  if (noise.scale < 0.0)
    throw ValidationError("generate_dataset: noise scale must be >= 0");
  Dataset ds;
  ds.X = sample_X(spec, n, seed);
  ds.y.resize(n);
  // Independent noise stream with a fixed seed offset.
  Rng noise_rng(seed ^ 0x9E3779B97F4A7C15ull);
  for (int j = 0; j < n; ++j) {
    double eta = 0.0;
    switch (noise.kind) {
      case NoiseSpec::Kind::none:
        break;
      case NoiseSpec::Kind::gaussian:
        eta = noise.scale * noise_rng.normal();
        break;
      case NoiseSpec::Kind::laplace:
        eta = noise_rng.laplace(noise.scale);
        break;
    }
    ds.y(j) = target.eval(ds.X.col(j)) + eta;
  }
  return ds;
}

void write_dataset_csv(const std::string& csv_path, const Dataset& data) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw ComputeError("cannot open " + csv_path + " for writing");
  const int d = static_cast<int>(data.X.rows());
  for (int i = 0; i < d; ++i) out << "x" << (i + 1) << ",";
  out << "y\n";
  char buf[64];
  for (int j = 0; j < data.X.cols(); ++j) {
    for (int i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.X(i, j));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y(j));
    out << buf << "\n";
  }
}

std::string dataset_sidecar_json(const HolderTarget& target,
                                 const SupportSpec& spec,
                                 const NoiseSpec& noise, int n,
                                 std::uint64_t seed) {
  nlohmann::json j;
  j["target"] = {{"name", target.name},
                 {"d", target.d},
                 {"beta", target.beta},
                 {"B0", target.B0}};
  std::string kind = "cube";
  if (spec.kind == SupportSpec::Kind::manifold_neighborhood)
    kind = "manifold_neighborhood";
  else if (spec.kind == SupportSpec::Kind::minkowski_set)
    kind = "minkowski_set";
  j["support"] = {{"kind", kind}, {"d", spec.d}};
  if (spec.kind == SupportSpec::Kind::manifold_neighborhood) {
    j["support"]["d_M"] = spec.d_M;
    j["support"]["embed_seed"] = spec.embed_seed;
    j["support"]["rho"] = spec.rho;
  }
  if (spec.kind == SupportSpec::Kind::minkowski_set) {
    j["support"]["variant"] =
        spec.mink_kind == SupportSpec::MinkowskiKind::segment
            ? "segment"
            : "cantor_product";
    j["support"]["set_seed"] = spec.set_seed;
    if (spec.mink_kind == SupportSpec::MinkowskiKind::cantor_product)
      j["support"]["cantor_factors"] = spec.cantor_factors;
  }
  std::string nkind = "none";
  if (noise.kind == NoiseSpec::Kind::gaussian) nkind = "gaussian";
  if (noise.kind == NoiseSpec::Kind::laplace) nkind = "laplace";
  j["noise"] = {{"kind", nkind}, {"scale", noise.scale}};
  j["n"] = n;
  j["seed"] = seed;
  return j.dump(2);
}

}  // namespace reluc
