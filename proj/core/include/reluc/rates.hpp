// Closed-form architecture planning, size-efficiency ratios, complexity
// brackets, and error-decomposition arithmetic.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reluc/network.hpp"

namespace reluc {

enum class PlanProfile {
  deep_fixed_width,
  wide_fixed_depth,
  deep_and_wide,
  rectangle_min_size,
  manifold,
  minkowski,
};
std::string to_string(PlanProfile profile);
PlanProfile plan_profile_from_string(const std::string& s);

struct ArchitecturePlan {
  PlanProfile profile = PlanProfile::rectangle_min_size;
  double beta = 1.0;
  int d_eff = 1;
  std::int64_t n = 1;
  int N = 1, M = 1;  // grid parameters, used by profiles that take them
  std::int64_t W = 1, D = 1;
  std::int64_t S_estimate = 0, U_estimate = 0;
  double B = 1.0;  // clip level carried into training
};

struct PlanAux {
  int N = 1;
  int M = 1;
  double B = 1.0;
};

// Exact integer evaluation (ceilings included) of the planner formulas:
//   deep_fixed_width:   W = 38(s+1)^2 d^(s+1) N ceil(log2 8N),
//                       D = 21(s+1)^2 ceil(n^t log2(8 n^t)), t = d/(2(d+2b))
//   wide_fixed_depth:   W and D swap growth roles (aux M sizes the depth)
//   deep_and_wide:      W = D = ceil(n^(t/2) log2 n)  (the paper gives only
//                       orders here; unit constants, recorded as such)
//   rectangle_min_size: W = 114(s+1)^2 d^(s+1), D as deep_fixed_width
//   manifold:           deep_fixed_width shapes with d replaced by the
//                       projected dimension and (N, M) from aux
//   minkowski:          manifold shapes with an extra 3^d_eff width factor
//                       and +2 d_eff depth for the projection layers
ArchitecturePlan plan_architecture(double beta, int d_eff, std::int64_t n,
                                   PlanProfile profile,
                                   const PlanAux& aux = {});

// log S2 / log S1; requires S1, S2 > 1.
double nre(double S1, double S2);

// The same ratio computed from the profiles' size exponents as an exact
// rational (valid for deep_fixed_width, wide_fixed_depth, deep_and_wide).
double nre_exponent_ratio(PlanProfile a, PlanProfile b);

// (c_lo * S D log(S/D), C_hi * S D log S); requires S > D >= 1.
std::pair<double, double> pdim_bracket(double S, double D, double c_lo,
                                       double C_hi);

// pdim * log(4 e B n^2 / pdim), in log space; requires pdim >= 1 and B >= 1.
// When pdim > 2n the value is still computed but *outside_regime is set (the
// covering theorem behind the formula assumes pdim <= 2n).
double covering_log_bound(double B, std::int64_t n, double pdim,
                          bool* outside_regime = nullptr);

// C0 * B^2 (log n)^3 S D log(S) / n.
double stochastic_bound(double B, std::int64_t n, double S, double D,
                        double C0);

// 324 B0^2 (s+1)^4 d^(2s + max(beta,1)) (NM)^(-4 beta / d); equals the
// square of the sup-norm bound used by the constructions.
double approx_bound_term(double beta, int d, double B0, int N, int M);

struct DecompositionReport {
  double stoch_term = 0.0;
  double approx_term = 0.0;
  double total = 0.0;  // stoch + 2 * approx
  double stoch_share = 0.0;
  double approx_share = 0.0;
};
DecompositionReport decomposition_report(double stoch_term,
                                         double approx_term);

std::string plan_to_json(const ArchitecturePlan& plan);
std::string plan_table(const std::vector<ArchitecturePlan>& plans);

}  // namespace reluc
