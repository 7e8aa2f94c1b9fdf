// Smoothness-calibrated target functions with derivative access, plus
// samplers for cube / tubular-neighborhood-of-manifold / low-dimensional
// supports and additive noise models.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reluc/network.hpp"

namespace reluc {

using MultiIndex = std::vector<int>;

// Largest integer strictly smaller than beta (so smoothness_order(1) = 0,
// smoothness_order(2.0) = 1, smoothness_order(2.5) = 2).
int smoothness_order(double beta);
// Fractional part r = beta - smoothness_order(beta), in (0, 1].
double smoothness_fraction(double beta);

int multi_index_order(const MultiIndex& alpha);
// Exact integer alpha! = prod alpha_i!; rejects component > 8.
std::int64_t multi_index_factorial(const MultiIndex& alpha);
// All alpha with |alpha|_1 <= k on d coordinates, in lexicographic order.
std::vector<MultiIndex> multi_indices_up_to(int d, int k);

struct HolderTarget {
  std::string name;
  int d = 1;
  double beta = 1.0;
  double B0 = 1.0;
  std::function<double(const Eigen::VectorXd&)> eval;
  // Analytic partial derivatives for all |alpha|_1 <= smoothness_order(beta);
  // may be empty when only finite differences are available.
  std::map<MultiIndex, std::function<double(const Eigen::VectorXd&)>> partials;

  bool has_partial(const MultiIndex& alpha) const {
    return partials.count(alpha) > 0;
  }
};

// Central finite difference of order |alpha|_1 with step 1e-5 per axis.
double finite_difference_partial(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const MultiIndex& alpha);

// Named targets: constant, affine, cosine_product, poly, abs_power.
// abs_power is valid only for beta in (0, 1].
HolderTarget builtin_target(const std::string& name, int d, double beta,
                            double B0);

struct SupportSpec {
  enum class Kind { cube, manifold_neighborhood, minkowski_set };
  enum class MinkowskiKind { segment, cantor_product };

  Kind kind = Kind::cube;
  int d = 1;

  // manifold_neighborhood: intrinsic dimension (1 = closed curve, 2 = torus
  // surface), embedding seed, and tube radius.
  int d_M = 1;
  std::uint64_t embed_seed = 1;
  double rho = 0.0;

  // minkowski_set
  MinkowskiKind mink_kind = MinkowskiKind::segment;
  int cantor_factors = 1;
  std::uint64_t set_seed = 1;
};

struct NoiseSpec {
  enum class Kind { none, gaussian, laplace };
  Kind kind = Kind::none;
  double scale = 0.0;
};

// Columns are sample points in [0,1]^d; deterministic given seed.
Eigen::MatrixXd sample_X(const SupportSpec& spec, int n, std::uint64_t seed);
// As above, additionally exposing the intrinsic parameters drawn for each
// sample (one column per sample; zero rows for the cube) for audits.
Eigen::MatrixXd sample_X(const SupportSpec& spec, int n, std::uint64_t seed,
                         Eigen::MatrixXd* params);

// Euclidean distance from x to the underlying set (radius-0 version of the
// support); used to audit samplers.  Parametric scan plus local refinement.
double distance_to_support(const SupportSpec& spec, const Eigen::VectorXd& x);

struct Dataset {
  Eigen::MatrixXd X;  // d x n
  Eigen::VectorXd y;  // n
};

Dataset generate_dataset(const HolderTarget& target, const SupportSpec& spec,
                         const NoiseSpec& noise, int n, std::uint64_t seed);

// CSV with header x1,...,xd,y plus a JSON sidecar describing target, support,
// and noise.  Numbers are printed with %.17g so reruns are byte-identical.
void write_dataset_csv(const std::string& csv_path, const Dataset& data);
std::string dataset_sidecar_json(const HolderTarget& target,
                                 const SupportSpec& spec,
                                 const NoiseSpec& noise, int n,
                                 std::uint64_t seed);

}  // namespace reluc
