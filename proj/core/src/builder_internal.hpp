// Shared internal machinery for the network builders.  Not installed.

#pragma once

#include <vector>

#include "reluc/builders.hpp"
#include "reluc/network.hpp"

namespace reluc {
namespace detail {

// Affine expression over the units of the most recent layer (or over the raw
// input before any layer exists): value = w . units + c.
struct Expr {
  Eigen::RowVectorXd w;
  double c = 0.0;

  static Expr zero(Eigen::Index width) {
    Expr e;
    e.w = Eigen::RowVectorXd::Zero(width);
    return e;
  }
  static Expr unit(Eigen::Index width, Eigen::Index idx, double scale = 1.0) {
    Expr e = zero(width);
    e.w(idx) = scale;
    return e;
  }
  Expr scaled(double s) const {
    Expr e;
    e.w = w * s;
    e.c = c * s;
    return e;
  }
  Expr plus(const Expr& o) const {
    Expr e;
    e.w = w + o.w;
    e.c = c + o.c;
    return e;
  }
  Expr minus(const Expr& o) const {
    Expr e;
    e.w = w - o.w;
    e.c = c - o.c;
    return e;
  }
  Expr shifted(double s) const {
    Expr e = *this;
    e.c += s;
    return e;
  }
};

// Accumulates pre-activation rows for the next layer.
class LayerPlan {
 public:
  explicit LayerPlan(Eigen::Index prev_width) : prev_width_(prev_width) {}

  // Returns the index this row's unit will have in the new layer.
  Eigen::Index add(const Expr& e) {
    rows_.push_back(e);
    return static_cast<Eigen::Index>(rows_.size()) - 1;
  }

  Eigen::Index width() const { return static_cast<Eigen::Index>(rows_.size()); }

  Layer build() const {
    Layer l;
    l.weight.resize(width(), prev_width_);
    l.bias.resize(width());
    for (Eigen::Index i = 0; i < width(); ++i) {
      l.weight.row(i) = rows_[static_cast<std::size_t>(i)].w;
      l.bias(i) = rows_[static_cast<std::size_t>(i)].c;
    }
    return l;
  }

 private:
  Eigen::Index prev_width_;
  std::vector<Expr> rows_;
};

// Largest t >= 0 with t^p <= value (value >= 0, p >= 1).
std::int64_t integer_root_floor(std::int64_t value, int p);

// Step net with an optional second output y = x - psi(x)/K (the offset of x
// within its grid cell).
Network build_step_net_core(int N, int M, int d, double delta,
                            BuildProfile profile, bool with_anchor);

// Point fitter over an arbitrary table length (the public wrapper pins the
// length to N^2 M^2); budgets still use (N, M, s).
Network fit_points(const std::vector<double>& values, int N, int M, int s,
                   BuildProfile profile);

// Uncertified smooth-function approximant with an explicit gap width for its
// staircases (0 < delta <= 1/(3K)).  Used by both the gap-excluded and the
// median-filtered public builders.
Network build_holder_core(const HolderTarget& target, int N, int M,
                          BuildProfile profile, bool allow_fd, double delta,
                          bool* fd_used_out);

}  // namespace detail
}  // namespace reluc
