#include "reluc/rates.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"
#include "reluc/targets.hpp"

namespace reluc {

namespace {

// ceil evaluated in extended precision so the rational-arithmetic oracle and
// this implementation agree away from exact-integer knife edges.
std::int64_t ceil_l(long double v) {
  if (!(v >= 0.0L) || v > 9.0e18L)
    throw ComputeError("plan_architecture: formula value out of range");
  return static_cast<std::int64_t>(std::ceil(v));
}

std::int64_t ceil_log2_8x(std::int64_t x) {
  // ceil(log2(8x)) for integer x >= 1, exact integer arithmetic.
  std::int64_t t = 0, p = 1;
  while (p < 8 * x) {
    p *= 2;
    ++t;
  }
  return t;
}

// n^t * log2(8 n^t) with t = d/(2(d+2 beta)), then the ceiling.
std::int64_t depth_core(double beta, int d, std::int64_t n) {
  const long double t =
      static_cast<long double>(d) / (2.0L * (d + 2.0L * beta));
  const long double nt = std::pow(static_cast<long double>(n), t);
  return ceil_l(nt * std::log2(8.0L * nt));
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  if (a != 0 && b > std::numeric_limits<std::int64_t>::max() / a)
    throw ComputeError("plan_architecture: size overflows 64-bit range");
  return a * b;
}

std::int64_t pow_i64(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

std::int64_t rect_size(std::int64_t W, std::int64_t D, int input_dim) {
  // W(d+1) + (W^2+W)(D-1) + W + 1 for a rectangle of hidden depth D.
  const long double est = static_cast<long double>(W) * (input_dim + 1) +
                          (static_cast<long double>(W) * W + W) * (D - 1) +
                          W + 1;
  if (est > 9.0e18L)
    throw ComputeError("plan_architecture: size overflows 64-bit range");
  return W * (input_dim + 1) + (W * W + W) * (D - 1) + W + 1;
}

}  // namespace

std::string to_string(PlanProfile profile) {
  switch (profile) {
    case PlanProfile::deep_fixed_width:
      return "deep_fixed_width";
    case PlanProfile::wide_fixed_depth:
      return "wide_fixed_depth";
    case PlanProfile::deep_and_wide:
      return "deep_and_wide";
    case PlanProfile::rectangle_min_size:
      return "rectangle_min_size";
    case PlanProfile::manifold:
      return "manifold";
    case PlanProfile::minkowski:
      return "minkowski";
  }
  return "?";
}

PlanProfile plan_profile_from_string(const std::string& s) {
  if (s == "deep_fixed_width") return PlanProfile::deep_fixed_width;
  if (s == "wide_fixed_depth") return PlanProfile::wide_fixed_depth;
  if (s == "deep_and_wide") return PlanProfile::deep_and_wide;
  if (s == "rectangle_min_size") return PlanProfile::rectangle_min_size;
  if (s == "manifold") return PlanProfile::manifold;
  if (s == "minkowski") return PlanProfile::minkowski;
  throw ValidationError("unknown plan profile '" + s + "'");
}

ArchitecturePlan plan_architecture(double beta, int d_eff, std::int64_t n,
                                   PlanProfile profile, const PlanAux& aux) {
  if (!(beta > 0.0))
    throw ValidationError("plan_architecture: beta must be positive");
  if (d_eff < 1) throw ValidationError("plan_architecture: d_eff must be >= 1");
  if (n < 1) throw ValidationError("plan_architecture: n must be >= 1");
  if (aux.N < 1 || aux.M < 1)
    throw ValidationError("plan_architecture: aux N and M must be >= 1");

  const int s = smoothness_order(beta);
  const std::int64_t s1sq = static_cast<std::int64_t>(s + 1) * (s + 1);
  const std::int64_t d_pow = pow_i64(d_eff, s + 1);

  ArchitecturePlan plan;
  plan.profile = profile;
  plan.beta = beta;
  plan.d_eff = d_eff;
  plan.n = n;
  plan.N = aux.N;
  plan.M = aux.M;
  plan.B = aux.B;

  switch (profile) {
    case PlanProfile::deep_fixed_width:
      plan.W = checked_mul(checked_mul(38 * s1sq, d_pow),
                           aux.N * ceil_log2_8x(aux.N));
      plan.D = checked_mul(21 * s1sq, depth_core(beta, d_eff, n));
      break;
    case PlanProfile::wide_fixed_depth:
      plan.W = checked_mul(checked_mul(38 * s1sq, d_pow),
                           depth_core(beta, d_eff, n));
      plan.D = checked_mul(21 * s1sq, aux.M * ceil_log2_8x(aux.M));
      break;
    case PlanProfile::deep_and_wide: {
      const long double t =
          static_cast<long double>(d_eff) / (4.0L * (d_eff + 2.0L * beta));
      const long double core =
          std::pow(static_cast<long double>(n), t) *
          std::log2(static_cast<long double>(n));
      plan.W = plan.D = std::max<std::int64_t>(ceil_l(core), 1);
      break;
    }
    case PlanProfile::rectangle_min_size:
      plan.W = checked_mul(114 * s1sq, d_pow);
      plan.D = checked_mul(21 * s1sq, depth_core(beta, d_eff, n));
      break;
    case PlanProfile::manifold:
      plan.W = checked_mul(checked_mul(38 * s1sq, d_pow),
                           aux.N * ceil_log2_8x(aux.N));
      plan.D = checked_mul(21 * s1sq, aux.M * ceil_log2_8x(aux.M));
      break;
    case PlanProfile::minkowski:
      plan.W = checked_mul(checked_mul(checked_mul(38 * s1sq, pow_i64(3, d_eff)),
                                       d_pow),
                           aux.N * ceil_log2_8x(aux.N));
      plan.D = checked_mul(21 * s1sq, aux.M * ceil_log2_8x(aux.M)) + 2 * d_eff;
      break;
  }

  if (plan.W < 1 || plan.D < 1)
    throw ComputeError("plan_architecture: degenerate plan");
  plan.S_estimate = rect_size(plan.W, plan.D, d_eff);
  plan.U_estimate = checked_mul(plan.W, plan.D);
  return plan;
}

double nre(double S1, double S2) {
  if (!(S1 > 1.0) || !(S2 > 1.0))
    throw ValidationError("nre: sizes must exceed 1");
  return std::log(S2) / std::log(S1);
}

double nre_exponent_ratio(PlanProfile a, PlanProfile b) {
  // Size exponents in units of d/(d+2 beta): 1/2, 1, 3/4.
  auto gamma = [](PlanProfile p) -> double {
    switch (p) {
      case PlanProfile::deep_fixed_width:
        return 0.5;
      case PlanProfile::wide_fixed_depth:
        return 1.0;
      case PlanProfile::deep_and_wide:
        return 0.75;
      default:
        throw ValidationError(
            "nre_exponent_ratio: size exponent defined only for the three "
            "rate-matched shapes");
    }
  };
  return gamma(b) / gamma(a);
}

std::pair<double, double> pdim_bracket(double S, double D, double c_lo,
                                       double C_hi) {
  if (!(D >= 1.0) || !(S > D))
    throw ValidationError("pdim_bracket: need S > D >= 1");
  if (!(c_lo > 0.0) || !(C_hi > 0.0))
    throw ValidationError("pdim_bracket: constants must be positive");
  return {c_lo * S * D * std::log(S / D), C_hi * S * D * std::log(S)};
}

double covering_log_bound(double B, std::int64_t n, double pdim,
                          bool* outside_regime) {
  if (!(B >= 1.0)) throw ValidationError("covering_log_bound: B must be >= 1");
  if (!(pdim >= 1.0))
    throw ValidationError("covering_log_bound: pdim must be >= 1");
  if (n < 1) throw ValidationError("covering_log_bound: n must be >= 1");
  if (outside_regime) *outside_regime = pdim > 2.0 * static_cast<double>(n);
  const double n_d = static_cast<double>(n);
  return pdim * (std::log(4.0 * std::exp(1.0) * B / pdim) + 2.0 * std::log(n_d));
}

double stochastic_bound(double B, std::int64_t n, double S, double D,
                        double C0) {
  if (n < 2) throw ValidationError("stochastic_bound: n must be >= 2");
  if (!(B > 0.0) || !(S >= 1.0) || !(D >= 1.0) || C0 < 0.0)
    throw ValidationError("stochastic_bound: invalid inputs");
  const double ln = std::log(static_cast<double>(n));
  return C0 * B * B * ln * ln * ln * S * D * std::log(S) /
         static_cast<double>(n);
}

double approx_bound_term(double beta, int d, double B0, int N, int M) {
  if (!(beta > 0.0) || d < 1 || !(B0 > 0.0) || N < 1 || M < 1)
    throw ValidationError("approx_bound_term: all inputs must be positive");
  const int s = smoothness_order(beta);
  const double s1 = s + 1.0;
  return 324.0 * B0 * B0 * s1 * s1 * s1 * s1 *
         std::pow(static_cast<double>(d), 2.0 * s + std::max(beta, 1.0)) *
         std::pow(static_cast<double>(N) * M, -4.0 * beta / d);
}

DecompositionReport decomposition_report(double stoch_term,
                                         double approx_term) {
  if (stoch_term < 0.0 || approx_term < 0.0)
    throw ValidationError("decomposition_report: terms must be >= 0");
  DecompositionReport rep;
  rep.stoch_term = stoch_term;
  rep.approx_term = approx_term;
  rep.total = stoch_term + 2.0 * approx_term;
  if (rep.total > 0.0) {
    rep.stoch_share = stoch_term / rep.total;
    rep.approx_share = 2.0 * approx_term / rep.total;
  } else {
    rep.stoch_share = rep.approx_share = 0.5;
  }
  return rep;
}

std::string plan_to_json(const ArchitecturePlan& plan) {
  nlohmann::json j;
  j["profile"] = to_string(plan.profile);
  j["beta"] = plan.beta;
  j["d_eff"] = plan.d_eff;
  j["n"] = plan.n;
  j["N"] = plan.N;
  j["M"] = plan.M;
  j["W"] = plan.W;
  j["D"] = plan.D;
  j["S_estimate"] = plan.S_estimate;
  j["U_estimate"] = plan.U_estimate;
  j["B"] = plan.B;
  return j.dump(2);
}

std::string plan_table(const std::vector<ArchitecturePlan>& plans) {
  std::string out =
      "profile             beta   d_eff          n        W        D"
      "            S\n";
  char buf[160];
  for (const auto& p : plans) {
    std::snprintf(buf, sizeof(buf), "%-18s %5.2f %7d %10lld %8lld %8lld %12lld\n",
                  to_string(p.profile).c_str(), p.beta, p.d_eff,
                  static_cast<long long>(p.n), static_cast<long long>(p.W),
                  static_cast<long long>(p.D),
                  static_cast<long long>(p.S_estimate));
    out += buf;
  }
  return out;
}

}  // namespace reluc
