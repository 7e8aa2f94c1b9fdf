#include "reluc/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "reluc/rng.hpp"

namespace reluc {

ProjectionMap make_projector(ProjectionMap::Kind kind, int d, int d0,
                             std::uint64_t seed) {
  if (d < 1) throw ValidationError("make_projector: d must be >= 1");
  if (d0 < 1 || d0 > d)
    throw ValidationError("make_projector: need 1 <= d0 <= d");
  ProjectionMap map;
  map.kind = kind;
  map.seed = seed;
  map.d = d;
  map.d0 = d0;
  Rng rng(seed);
  if (kind == ProjectionMap::Kind::rademacher_scaled) {
    const double mag = 1.0 / std::sqrt(static_cast<double>(d0));
    map.matrix.resize(d0, d);
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d; ++j)
        map.matrix(i, j) = (rng.below(2) == 0) ? mag : -mag;
  } else {
    // Gaussian rows, modified Gram-Schmidt, then the sqrt(d/d0) stretch.
    Eigen::MatrixXd G(d0, d);
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
    for (int i = 0; i < d0; ++i) {
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < i; ++k)
          G.row(i) -= G.row(i).dot(G.row(k)) * G.row(k);
      const double nrm = G.row(i).norm();
      if (nrm < 1e-12)
        throw ComputeError("make_projector: degenerate Gaussian draw");
      G.row(i) /= nrm;
    }
    map.matrix = G * std::sqrt(static_cast<double>(d) / d0);
  }
  return map;
}

Network projector_to_network(const ProjectionMap& map) {
  return affine_net(map.matrix, Eigen::VectorXd::Zero(map.d0));
}

DistortionReport distortion_audit(const ProjectionMap& map,
                                  const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Y) {
  if (X.rows() != map.d || Y.rows() != map.d)
    throw ValidationError("distortion_audit: point dimension != map.d");
  if (X.cols() != Y.cols())
    throw ValidationError("distortion_audit: X and Y must pair up");
  DistortionReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < X.cols(); ++p) {
    const Eigen::VectorXd diff = X.col(p) - Y.col(p);
    const double base = diff.squaredNorm();
    if (base == 0.0) {
      ++rep.pairs_skipped;
      continue;
    }
    const double ratio = (map.matrix * diff).squaredNorm() / base;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.pairs_used;
  }
  if (rep.pairs_used == 0)
    throw ValidationError("distortion_audit: every pair was coincident");
  return rep;
}

MinkowskiEstimate estimate_minkowski_dim(const Eigen::MatrixXd& points,
                                         const std::vector<double>& radii) {
  if (radii.size() < 2)
    throw ValidationError("estimate_minkowski_dim: need at least 2 radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0))
      throw ValidationError("estimate_minkowski_dim: radii must be positive");
    if (i > 0 && radii[i] >= radii[i - 1])
      throw ValidationError(
          "estimate_minkowski_dim: radii must be strictly decreasing");
  }
  const Eigen::Index n = points.cols();
  if (n < 1) throw ValidationError("estimate_minkowski_dim: empty point set");

  // Farthest-point traversal: the prefix of centers chosen before the
  // farthest remaining distance drops to eps is a greedy eps-net, so one
  // traversal serves every radius.
  Eigen::VectorXd dist =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  std::vector<double> insertion_radius;  // farthest distance when added
  insertion_radius.reserve(static_cast<std::size_t>(n));
  Eigen::Index cur = 0;
  insertion_radius.push_back(std::numeric_limits<double>::infinity());
  for (;;) {
    for (Eigen::Index j = 0; j < n; ++j)
      dist(j) = std::min(dist(j), (points.col(j) - points.col(cur)).norm());
    Eigen::Index far = 0;
    const double far_dist = dist.maxCoeff(&far);
    if (far_dist <= 0.0) break;
    insertion_radius.push_back(far_dist);
    cur = far;
    if (static_cast<Eigen::Index>(insertion_radius.size()) >= n) break;
  }

  MinkowskiEstimate est;
  est.radii = radii;
  est.counts.reserve(radii.size());
  for (double eps : radii) {
    // Centers added while the farthest distance still exceeded eps.
    int count = 0;
    for (double r : insertion_radius)
      if (r > eps) ++count;
    est.counts.push_back(std::max(count, 1));
  }

  // LS slope of log(count) against log(1/eps).
  const std::size_t m = radii.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = std::log(1.0 / radii[i]);
    const double y = std::log(static_cast<double>(est.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  est.slope = (denom != 0.0) ? (m * sxy - sx * sy) / denom : 0.0;
  return est;
}

std::string covering_csv(const MinkowskiEstimate& estimate) {
  std::string out = "radius,count\n";
  char buf[64];
  for (std::size_t i = 0; i < estimate.radii.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%d\n", estimate.radii[i],
                  estimate.counts[i]);
    out += buf;
  }
  return out;
}

int default_projection_dim(int d_M, int d, double delta, double c) {
  if (d_M < 1 || d < 1)
    throw ValidationError("default_projection_dim: dims must be >= 1");
  if (!(delta > 0.0) || delta >= 1.0)
    throw ValidationError("default_projection_dim: delta must be in (0, 1)");
  if (!(c > 0.0))
    throw ValidationError("default_projection_dim: c must be positive");
  const double value =
      c * d_M * std::log(static_cast<double>(d) / delta) / (delta * delta);
  return static_cast<int>(std::ceil(value));
}

}  // namespace reluc
