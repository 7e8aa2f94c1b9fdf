// SGD training of rectangle ReLU regressors, excess-risk estimation, and
// convergence-rate sweeps with slope fitting.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reluc/network.hpp"
#include "reluc/projection.hpp"
#include "reluc/rates.hpp"
#include "reluc/targets.hpp"

namespace reluc {

// Dense rectangle-MLP parameters used by the in-module trainer: D hidden
// layers of equal width, scalar output, output clamped to [-B, B] during
// the loss (subgradient 0 outside the clamp).
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  int input_dim = 0, width = 0, depth = 0;
};

// He-scaled Gaussian initialization, deterministic given seed.
MlpParams init_mlp(int input_dim, int width, int depth, std::uint64_t seed);

// Mean squared error (1/n) sum (clamp(f(x_i), B) - y_i)^2 over columns of X.
double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, double B);

// Reverse-mode gradient of mlp_loss in the same layout as the parameters.
MlpParams mlp_loss_gradient(const MlpParams& p, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y, double B);

// The trained parameters as a Network; clip_bound is set to B (the clamp the
// trainer applied), without extra realizing layers.
Network mlp_to_network(const MlpParams& p, double B);

struct TrainConfig {
  ArchitecturePlan plan;  // W, D, B taken literally
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 0.05;  // cosine-decayed over the epochs
  std::uint64_t seed = 1;
  std::optional<double> truncation_level;  // clamp labels when set
  int replicates = 1;
};

double empirical_risk(const Network& net, const Dataset& data);

Dataset truncate_labels(const Dataset& data, double level);

// Minibatch SGD on the squared loss; returns the parameter snapshot with the
// lowest full-sample empirical risk seen (initial parameters included).
// Throws ComputeError if the risk becomes non-finite.
Network train_erm(const Dataset& data, const TrainConfig& config);

// (1/m) sum (net(X_j) - f0(X_j))^2 over fresh support samples.
double excess_risk_mc(const Network& net, const HolderTarget& target,
                      const SupportSpec& support, int m, std::uint64_t seed);

struct SweepConfig {
  PlanProfile profile = PlanProfile::rectangle_min_size;
  int plan_N = 1, plan_M = 1;  // aux grid parameters for the literal plan
  int replicates = 3;
  int epochs = 160;
  int batch_size = 64;
  double learning_rate = 0.05;
  // Desk-scale shrink of the literal plan (the paper-sized shapes are not
  // trainable at these n); both the knobs and the literal plan are recorded.
  double width_multiplier = 0.125;
  double depth_multiplier = 1.0 / 48.0;
  int min_width = 8, max_width = 64;
  int min_depth = 2, max_depth = 12;
  std::optional<double> truncation_c;  // label clamp at c * log n when set
  int mc_points = 20000;
  std::uint64_t seed = 1;
  double B = 1.0;  // output clamp for training
  // When set, inputs are projected through this frozen map and the trained
  // net is composed with it (one extra exact linear layer).
  std::optional<ProjectionMap> projection;
};

struct RateReport {
  std::vector<std::int64_t> n_values;
  std::vector<std::vector<double>> per_replicate;  // [n index][replicate]
  std::vector<double> mean_excess, sd_excess;
  double fitted_slope = 0.0;
  double target_exponent = 0.0;  // -2 beta / (2 beta + d_eff)
  std::pair<double, double> slope_ci{0.0, 0.0};
  bool degenerate = false;  // errors ~ 0 everywhere; slope not meaningful
  ArchitecturePlan literal_plan;  // unscaled plan at the largest n
  std::vector<int> widths_used, depths_used;
  double width_multiplier = 0.0, depth_multiplier = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string notes;
};

// For each n: plan, shrink by the multipliers, train `replicates` nets on
// fresh datasets, estimate excess risk by Monte Carlo, then fit the LS slope
// of log(mean excess) vs log n with a bootstrap confidence interval.
RateReport rate_sweep(const HolderTarget& target, const SupportSpec& support,
                      const NoiseSpec& noise,
                      const std::vector<std::int64_t>& n_values,
                      const SweepConfig& config);

std::string rate_report_csv(const RateReport& report);
std::string rate_report_json(const RateReport& report);
// Two-column "n mean_excess" text for log-log plotting.
std::string rate_report_plot_data(const RateReport& report);

}  // namespace reluc
