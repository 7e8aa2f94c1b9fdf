#include "reluc/network.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "json.hpp"

namespace reluc {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

Eigen::MatrixXd relu(Eigen::MatrixXd m) { return m.cwiseMax(0.0); }

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Normalizes a possibly layer-free net (pure identity) to a one-layer affine
// form so that downstream code can assume at least one layer.
Network materialized(const Network& net) {
  if (!net.layers.empty()) return net;
  Network out = identity_net(net.input_dim);
  out.clip_bound = net.clip_bound;
  return out;
}

}  // namespace

void check_well_formed(const Network& net) {
  require(net.input_dim > 0, "network input_dim must be positive");
  Eigen::Index prev = net.input_dim;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    require(l.weight.rows() > 0 && l.weight.cols() > 0,
            "layer " + std::to_string(i) + " has an empty weight matrix");
    require(l.weight.cols() == prev,
            "layer " + std::to_string(i) + " input width " +
                std::to_string(l.weight.cols()) + " does not chain (expected " +
                std::to_string(prev) + ")");
    require(l.bias.size() == l.weight.rows(),
            "layer " + std::to_string(i) + " bias length mismatch");
    require(all_finite(l.weight) && all_finite(l.bias),
            "layer " + std::to_string(i) + " contains non-finite coefficients");
    prev = l.weight.rows();
  }
  if (net.clip_bound) {
    require(*net.clip_bound >= 0.0 && std::isfinite(*net.clip_bound),
            "clip_bound must be a finite nonnegative real");
  }
}

Eigen::VectorXd evaluate(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim)
    throw ValidationError("evaluate: input length " + std::to_string(x.size()) +
                          " does not match input_dim " +
                          std::to_string(net.input_dim));
  Eigen::VectorXd h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Eigen::VectorXd z = l.weight * h + l.bias;
    h = (i + 1 < net.layers.size()) ? z.cwiseMax(0.0).eval() : z;
  }
  if (net.clip_bound) {
    const double B = *net.clip_bound;
    h = h.cwiseMax(-B).cwiseMin(B);
  }
  return h;
}

Eigen::MatrixXd evaluate_batch(const Network& net, const Eigen::MatrixXd& X) {
  if (X.rows() != net.input_dim)
    throw ValidationError("evaluate_batch: input rows " +
                          std::to_string(X.rows()) +
                          " do not match input_dim " +
                          std::to_string(net.input_dim));
  Eigen::MatrixXd H = X;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Eigen::MatrixXd Z = (l.weight * H).colwise() + l.bias;
    if (i + 1 < net.layers.size()) Z = relu(std::move(Z));
    H = std::move(Z);
  }
  if (net.clip_bound) {
    const double B = *net.clip_bound;
    H = H.cwiseMax(-B).cwiseMin(B);
  }
  return H;
}

Network compose(const Network& outer, const Network& inner) {
  check_well_formed(outer);
  check_well_formed(inner);
  if (outer.input_dim != inner.output_dim())
    throw ValidationError(
        "compose: outer input_dim " + std::to_string(outer.input_dim) +
        " does not match inner output dim " +
        std::to_string(inner.output_dim()));

  const Network f = materialized(inner);
  const Network g = materialized(outer);

  Network out;
  out.input_dim = f.input_dim;
  out.layers.reserve(f.layers.size() + g.layers.size() - 1);
  for (std::size_t i = 0; i + 1 < f.layers.size(); ++i)
    out.layers.push_back(f.layers[i]);

  // Merge inner's last affine with outer's first affine: no depth inflation.
  const Layer& a = f.layers.back();
  const Layer& b = g.layers.front();
  Layer merged;
  merged.weight = b.weight * a.weight;
  merged.bias = b.weight * a.bias + b.bias;
  out.layers.push_back(std::move(merged));

  for (std::size_t i = 1; i < g.layers.size(); ++i)
    out.layers.push_back(g.layers[i]);
  out.clip_bound = g.clip_bound;
  return out;
}

Network parallelize(const std::vector<Network>& nets) {
  if (nets.empty()) throw ValidationError("parallelize: empty network list");
  for (const Network& n : nets) check_well_formed(n);
  const int d = nets.front().input_dim;
  for (const Network& n : nets)
    if (n.input_dim != d)
      throw ValidationError("parallelize: mismatched input dims");
  if (nets.size() == 1) return nets.front();

  // Normalize and pad every net to the same hidden depth with the exact
  // identity channels x = relu(x) - relu(-x).
  std::size_t max_layers = 0;
  std::vector<Network> padded;
  padded.reserve(nets.size());
  for (const Network& n : nets) padded.push_back(materialized(n));
  for (const Network& n : padded) max_layers = std::max(max_layers, n.layers.size());

  for (Network& n : padded) {
    while (n.layers.size() < max_layers) {
      // Fold the current final affine (A, b) into a [A; -A] split layer and
      // append a recombining affine [I, -I].
      Layer last = n.layers.back();
      n.layers.pop_back();
      const Eigen::Index q = last.out_dim();
      Layer split;
      split.weight.resize(2 * q, last.in_dim());
      split.weight.topRows(q) = last.weight;
      split.weight.bottomRows(q) = -last.weight;
      split.bias.resize(2 * q);
      split.bias.head(q) = last.bias;
      split.bias.tail(q) = -last.bias;
      n.layers.push_back(std::move(split));
      Layer recomb;
      recomb.weight.resize(q, 2 * q);
      recomb.weight << Eigen::MatrixXd::Identity(q, q),
          -Eigen::MatrixXd::Identity(q, q);
      recomb.bias = Eigen::VectorXd::Zero(q);
      n.layers.push_back(std::move(recomb));
    }
  }

  Network out;
  out.input_dim = d;
  for (std::size_t li = 0; li < max_layers; ++li) {
    Eigen::Index rows = 0, cols = 0;
    for (const Network& n : padded) {
      rows += n.layers[li].out_dim();
      cols += n.layers[li].in_dim();
    }
    Layer layer;
    layer.bias.resize(rows);
    if (li == 0) {
      // All blocks read the shared input: stack vertically.
      layer.weight = Eigen::MatrixXd::Zero(rows, d);
      Eigen::Index r = 0;
      for (const Network& n : padded) {
        const Layer& l = n.layers[0];
        layer.weight.middleRows(r, l.out_dim()) = l.weight;
        layer.bias.segment(r, l.out_dim()) = l.bias;
        r += l.out_dim();
      }
    } else {
      layer.weight = Eigen::MatrixXd::Zero(rows, cols);
      Eigen::Index r = 0, c = 0;
      for (const Network& n : padded) {
        const Layer& l = n.layers[li];
        layer.weight.block(r, c, l.out_dim(), l.in_dim()) = l.weight;
        layer.bias.segment(r, l.out_dim()) = l.bias;
        r += l.out_dim();
        c += l.in_dim();
      }
    }
    out.layers.push_back(std::move(layer));
  }
  return out;
}

NetworkStats stats(const Network& net) {
  check_well_formed(net);
  NetworkStats s;
  if (net.layers.empty()) return s;
  s.depth = static_cast<int>(net.layers.size()) - 1;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    s.size += static_cast<std::int64_t>(l.out_dim()) * (l.in_dim() + 1);
    if (i + 1 < net.layers.size()) {
      s.neurons += l.out_dim();
      s.width = std::max<int>(s.width, static_cast<int>(l.out_dim()));
    }
  }
  return s;
}

std::int64_t rectangle_size_bound(int width, int depth, int input_dim) {
  const std::int64_t W = width, D = depth, d = input_dim;
  if (D == 0) return d + 1;  // single affine readout of a scalar
  return W * (d + 1) + (W * W + W) * (D - 1) + W + 1;
}

Network clip(const Network& net, double B) {
  check_well_formed(net);
  if (net.output_dim() != 1)
    throw ValidationError("clip: requires a scalar-output network");
  if (!(B > 0.0) || !std::isfinite(B))
    throw ValidationError("clip: bound must be a positive finite real");

  Network out = materialized(net);
  Layer last = out.layers.back();
  out.layers.pop_back();

  // relu(y+B), relu(y-B) with the previous readout folded in.
  Layer split;
  split.weight.resize(2, last.in_dim());
  split.weight.row(0) = last.weight.row(0);
  split.weight.row(1) = last.weight.row(0);
  split.bias.resize(2);
  split.bias << last.bias(0) + B, last.bias(0) - B;
  out.layers.push_back(std::move(split));

  // c = u1 - u2 - B is the clamped value; carry it through an identity pair.
  Layer pair;
  pair.weight.resize(2, 2);
  pair.weight << 1, -1, -1, 1;
  pair.bias.resize(2);
  pair.bias << -B, B;
  out.layers.push_back(std::move(pair));

  Layer readout;
  readout.weight.resize(1, 2);
  readout.weight << 1, -1;
  readout.bias = Eigen::VectorXd::Zero(1);
  out.layers.push_back(std::move(readout));

  out.clip_bound = B;
  return out;
}

Network affine_net(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias) {
  Network net;
  net.input_dim = static_cast<int>(weight.cols());
  Layer l;
  l.weight = weight;
  l.bias = bias;
  net.layers.push_back(std::move(l));
  check_well_formed(net);
  return net;
}

Network identity_net(int dim) {
  if (dim <= 0) throw ValidationError("identity_net: dim must be positive");
  return affine_net(Eigen::MatrixXd::Identity(dim, dim),
                    Eigen::VectorXd::Zero(dim));
}

std::string serialize(const Network& net) {
  check_well_formed(net);
  if (net.layers.empty())
    throw ValidationError("serialize: refusing to write a layer-free network");
  json doc;
  doc["version"] = 1;
  doc["input_dim"] = net.input_dim;
  if (net.clip_bound)
    doc["clip_bound"] = *net.clip_bound;
  else
    doc["clip_bound"] = nullptr;
  json layers = json::array();
  for (const Layer& l : net.layers) {
    json jl;
    jl["rows"] = static_cast<std::int64_t>(l.out_dim());
    jl["cols"] = static_cast<std::int64_t>(l.in_dim());
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        w.push_back(l.weight(r, c));
    jl["weights"] = std::move(w);
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    jl["bias"] = std::move(b);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc.dump();
}

Network deserialize(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("deserialize: invalid JSON: ") + e.what());
  }
  require(doc.is_object(), "deserialize: top-level value must be an object");
  require(doc.contains("version") && doc["version"].is_number_integer(),
          "deserialize: missing integer version field");
  const int version = doc["version"].get<int>();
  require(version == 1, "deserialize: unsupported version " +
                            std::to_string(version) + " (expected 1)");
  require(doc.contains("input_dim") && doc["input_dim"].is_number_integer(),
          "deserialize: missing input_dim");
  require(doc.contains("layers") && doc["layers"].is_array(),
          "deserialize: missing layers array");
  require(!doc["layers"].empty(), "deserialize: empty layer list rejected");

  Network net;
  net.input_dim = doc["input_dim"].get<int>();
  if (doc.contains("clip_bound") && !doc["clip_bound"].is_null())
    net.clip_bound = doc["clip_bound"].get<double>();
  for (const json& jl : doc["layers"]) {
    require(jl.is_object() && jl.contains("rows") && jl.contains("cols") &&
                jl.contains("weights") && jl.contains("bias"),
            "deserialize: malformed layer record");
    const auto rows = jl["rows"].get<std::int64_t>();
    const auto cols = jl["cols"].get<std::int64_t>();
    require(rows > 0 && cols > 0, "deserialize: empty layer rejected");
    const auto& jw = jl["weights"];
    const auto& jb = jl["bias"];
    require(jw.is_array() &&
                static_cast<std::int64_t>(jw.size()) == rows * cols,
            "deserialize: weight count mismatch");
    require(jb.is_array() && static_cast<std::int64_t>(jb.size()) == rows,
            "deserialize: bias count mismatch");
    Layer l;
    l.weight.resize(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        l.weight(r, c) = jw[k++].get<double>();
    l.bias.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) l.bias(r) = jb[r].get<double>();
    net.layers.push_back(std::move(l));
  }
  check_well_formed(net);
  return net;
}

}  // namespace reluc
