// Explicit ReLU feedforward networks: representation, evaluation, combination,
// size accounting, and a bit-exact JSON serialization.
//
// A network is an ordered list of affine layers; ReLU is applied after every
// layer except the last.  Weights are dense (sparse constructions store
// explicit zeros), so the stored-scalar count matches the usual parameter
// count S = sum_i p_{i+1} * (p_i + 1).

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reluc {

// Thrown for malformed usage: bad dimensions, invalid arguments, bad payloads.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation cannot proceed (divergence, overflow, ...).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a certified bound check fails and the caller asked to enforce it.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One affine stage y = W x + b.
struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out

  Eigen::Index out_dim() const { return weight.rows(); }
  Eigen::Index in_dim() const { return weight.cols(); }
};

struct Network {
  int input_dim = 0;
  std::vector<Layer> layers;
  // Sup-norm cap on the (scalar) output.  When set it is both realized by the
  // trailing layers (see clip()) and re-applied by evaluate() as a guard.
  std::optional<double> clip_bound;

  int output_dim() const {
    return layers.empty() ? input_dim
                          : static_cast<int>(layers.back().out_dim());
  }
};

// Size accounting in the usual feedforward conventions:
//   depth   D = number of hidden (ReLU-activated) layers,
//   width   W = max hidden-layer width (0 if no hidden layer),
//   size    S = total stored scalars = sum over layers of out*(in+1),
//   neurons U = sum of hidden-layer widths.
struct NetworkStats {
  int width = 0;
  int depth = 0;
  std::int64_t size = 0;
  std::int64_t neurons = 0;
};

// Validates layer chaining and finiteness; throws ValidationError.
void check_well_formed(const Network& net);

// Forward pass.  x must have length input_dim; output is clamped to
// [-B, B] per coordinate when clip_bound is set.
Eigen::VectorXd evaluate(const Network& net, const Eigen::VectorXd& x);

// Column-batched forward pass: X is input_dim x n, result is output_dim x n.
Eigen::MatrixXd evaluate_batch(const Network& net, const Eigen::MatrixXd& X);

// Function composition g(f(x)).  The first affine of `outer` is merged with
// the last affine of `inner` into a single layer, so
// depth(result) = depth(outer) + depth(inner).
Network compose(const Network& outer, const Network& inner);

// Side-by-side stacking of networks over a shared input; outputs are
// concatenated in argument order.  Shallower nets are padded to the common
// depth with identity-carrying channel pairs x = relu(x) - relu(-x), so the
// result is still a plain ReLU net computing exactly the same outputs.
Network parallelize(const std::vector<Network>& nets);

NetworkStats stats(const Network& net);

// Upper bound for S of a fully connected rectangle of width W, depth D on
// d inputs: W(d+1) + (W^2+W)(D-1) + W + 1.
std::int64_t rectangle_size_bound(int width, int depth, int input_dim);

// Appends two ReLU layers computing min(max(f(x), -B), B) exactly via
// relu(y+B) - relu(y-B) - B followed by an identity pair, and records B in
// clip_bound.  Requires a scalar-output net and B > 0.
Network clip(const Network& net, double B);

// A network with a single linear layer (no hidden layers).
Network affine_net(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias);

// Identity map on `dim` coordinates as a 0-hidden-layer net.
Network identity_net(int dim);

// JSON serialization; round-trips every coefficient bit-exactly for finite
// doubles.  deserialize throws ValidationError on malformed payloads,
// unknown versions, or empty layers.
std::string serialize(const Network& net);
Network deserialize(const std::string& bytes);

}  // namespace reluc
