// Random linear projections with distortion audits, and box-counting
// (covering-number) dimension estimation for point clouds.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reluc/network.hpp"

namespace reluc {

struct ProjectionMap {
  Eigen::MatrixXd matrix;  // d0 x d
  enum class Kind { rademacher_scaled, ortho_scaled };
  Kind kind = Kind::rademacher_scaled;
  std::uint64_t seed = 0;
  int d = 0, d0 = 0;
};

// rademacher_scaled: i.i.d. entries +-1/sqrt(d0).  ortho_scaled: d0 random
// Gaussian rows orthonormalized, then scaled by sqrt(d/d0) so that
// A A^T = (d/d0) I.
ProjectionMap make_projector(ProjectionMap::Kind kind, int d, int d0,
                             std::uint64_t seed);

// The projector as a single-linear-layer network (shares the Network JSON
// serialization format).
Network projector_to_network(const ProjectionMap& map);

struct DistortionReport {
  double min_ratio = 0.0;  // extremes of |A(x-y)|^2 / |x-y|^2
  double max_ratio = 0.0;
  int pairs_used = 0;
  int pairs_skipped = 0;  // coincident pairs
};

// Pairs are matched columns of X and Y (both d x p).
DistortionReport distortion_audit(const ProjectionMap& map,
                                  const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Y);

struct MinkowskiEstimate {
  std::vector<double> radii;
  std::vector<int> counts;  // greedy covering count per radius
  double slope = 0.0;       // LS slope of log(count) vs log(1/radius)
};

// Greedy farthest-point covering counts at each radius (radii strictly
// decreasing), then least-squares slope.  Points are columns.
MinkowskiEstimate estimate_minkowski_dim(const Eigen::MatrixXd& points,
                                         const std::vector<double>& radii);

// CSV text "radius,count\n..." for the estimate.
std::string covering_csv(const MinkowskiEstimate& estimate);

// The d0 = ceil(c * d_M * log(d/delta) / delta^2) selector; the constant c
// is a caller-supplied knob.
int default_projection_dim(int d_M, int d, double delta, double c);

}  // namespace reluc
