#include "reluc/erm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "reluc/rng.hpp"

namespace reluc {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                       std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (a + 1) +
                    0xBF58476D1CE4E5B9ull * (b + 1) +
                    0x94D049BB133111EBull * (salt + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // z_l per layer
  std::vector<Eigen::MatrixXd> act;   // a_0 = X, then relu(z_l)
  Eigen::RowVectorXd raw_out;         // last pre-activation, 1 x n
};

void forward(const MlpParams& p, const Eigen::MatrixXd& X, ForwardCache* c) {
  c->pre.clear();
  c->act.clear();
  c->act.push_back(X);
  for (int l = 0; l < p.depth; ++l) {
    Eigen::MatrixXd z =
        (p.weights[static_cast<std::size_t>(l)] * c->act.back()).colwise() +
        p.biases[static_cast<std::size_t>(l)];
    c->act.push_back(z.cwiseMax(0.0));
    c->pre.push_back(std::move(z));
  }
  c->raw_out = (p.weights.back() * c->act.back()).colwise() + p.biases.back();
}

double loss_from_out(const Eigen::RowVectorXd& raw, const Eigen::VectorXd& y,
                     double B) {
  const Eigen::ArrayXd clamped =
      raw.transpose().array().max(-B).min(B);
  return (clamped - y.array()).square().mean();
}

}  // namespace

MlpParams init_mlp(int input_dim, int width, int depth, std::uint64_t seed) {
  if (input_dim < 1 || width < 1 || depth < 1)
    throw ValidationError("init_mlp: dims must be >= 1");
  Rng rng(seed);
  MlpParams p;
  p.input_dim = input_dim;
  p.width = width;
  p.depth = depth;
  auto he = [&](int rows, int cols) {
    Eigen::MatrixXd w(rows, cols);
    const double scale = std::sqrt(2.0 / cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = scale * rng.normal();
    return w;
  };
  p.weights.push_back(he(width, input_dim));
  p.biases.push_back(Eigen::VectorXd::Zero(width));
  for (int l = 1; l < depth; ++l) {
    p.weights.push_back(he(width, width));
    p.biases.push_back(Eigen::VectorXd::Zero(width));
  }
  p.weights.push_back(he(1, width));
  p.biases.push_back(Eigen::VectorXd::Zero(1));
  return p;
}

double mlp_loss(const MlpParams& p, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y, double B) {
  ForwardCache c;
  forward(p, X, &c);
  return loss_from_out(c.raw_out, y, B);
}

MlpParams mlp_loss_gradient(const MlpParams& p, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y, double B) {
  const Eigen::Index n = X.cols();
  ForwardCache c;
  forward(p, X, &c);

  MlpParams g;
  g.input_dim = p.input_dim;
  g.width = p.width;
  g.depth = p.depth;
  g.weights.resize(p.weights.size());
  g.biases.resize(p.biases.size());

  // d/dout of mean (clamp(out) - y)^2, with the clamp passing gradient only
  // strictly inside (at the boundary we keep the inside subgradient).
  Eigen::RowVectorXd delta(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double raw = c.raw_out(j);
    const double clamped = std::clamp(raw, -B, B);
    const double gate = (raw >= -B && raw <= B) ? 1.0 : 0.0;
    delta(j) = 2.0 * (clamped - y(j)) * gate / static_cast<double>(n);
  }

  Eigen::MatrixXd d = delta;  // rows = current layer out dim
  for (int l = p.depth; l >= 0; --l) {
    g.weights[static_cast<std::size_t>(l)] =
        d * c.act[static_cast<std::size_t>(l)].transpose();
    g.biases[static_cast<std::size_t>(l)] = d.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back =
          p.weights[static_cast<std::size_t>(l)].transpose() * d;
      const Eigen::MatrixXd& z = c.pre[static_cast<std::size_t>(l - 1)];
      d = (z.array() > 0.0).cast<double>() * back.array();
    }
  }
  return g;
}

Network mlp_to_network(const MlpParams& p, double B) {
  Network net;
  net.input_dim = p.input_dim;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    Layer layer;
    layer.weight = p.weights[l];
    layer.bias = p.biases[l];
    net.layers.push_back(std::move(layer));
  }
  if (B > 0.0) net.clip_bound = B;
  check_well_formed(net);
  return net;
}

double empirical_risk(const Network& net, const Dataset& data) {
  if (data.X.cols() == 0) throw ValidationError("empirical_risk: empty dataset");
  const Eigen::MatrixXd out = evaluate_batch(net, data.X);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
    const double r = out(0, j) - data.y(j);
    acc += r * r;
  }
  return acc / static_cast<double>(data.X.cols());
}

Dataset truncate_labels(const Dataset& data, double level) {
  if (!(level > 0.0))
    throw ValidationError("truncate_labels: level must be positive");
  Dataset out = data;
  for (Eigen::Index j = 0; j < out.y.size(); ++j)
    out.y(j) = std::clamp(out.y(j), -level, level);
  return out;
}

Network train_erm(const Dataset& data, const TrainConfig& config) {
  const Eigen::Index n = data.X.cols();
  if (n == 0) throw ValidationError("train_erm: empty dataset");
  if (config.plan.W < 1 || config.plan.W > 4096 || config.plan.D < 1 ||
      config.plan.D > 512)
    throw ValidationError("train_erm: plan shape outside trainable range");
  if (config.epochs < 1 || config.batch_size < 1)
    throw ValidationError("train_erm: epochs and batch_size must be >= 1");
  const int W = static_cast<int>(config.plan.W);
  const int D = static_cast<int>(config.plan.D);
  const double B = config.plan.B;
  const int d = static_cast<int>(data.X.rows());

  Dataset work = data;
  if (config.truncation_level)
    work = truncate_labels(data, *config.truncation_level);

  Rng rng(config.seed);
  MlpParams params = init_mlp(d, W, D, rng.next_u64());

  double best_risk = mlp_loss(params, work.X, work.y, B);
  MlpParams best = params;

  const int batches_per_epoch =
      static_cast<int>((n + config.batch_size - 1) / config.batch_size);
  const long total_steps =
      static_cast<long>(batches_per_epoch) * config.epochs;
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(rng.below(
                    static_cast<std::uint64_t>(i + 1)))]);
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size,
                                                     n - start);
      Eigen::MatrixXd Xb(d, bs);
      Eigen::VectorXd yb(bs);
      for (Eigen::Index k = 0; k < bs; ++k) {
        Xb.col(k) = work.X.col(order[static_cast<std::size_t>(start + k)]);
        yb(k) = work.y(order[static_cast<std::size_t>(start + k)]);
      }
      const double lr =
          config.learning_rate * 0.5 *
          (1.0 + std::cos(kPi * static_cast<double>(step) /
                          static_cast<double>(total_steps)));
      ++step;
      MlpParams grad = mlp_loss_gradient(params, Xb, yb, B);
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        params.weights[l] -= lr * grad.weights[l];
        params.biases[l] -= lr * grad.biases[l];
      }
    }
    const double risk = mlp_loss(params, work.X, work.y, B);
    if (!std::isfinite(risk)) {
      char msg[120];
      std::snprintf(msg, sizeof(msg),
                    "train_erm: risk became non-finite at epoch %d "
                    "(lr=%.3g, W=%d, D=%d)",
                    epoch, config.learning_rate, W, D);
      throw ComputeError(msg);
    }
    if (risk < best_risk) {
      best_risk = risk;
      best = params;
    }
  }
  return mlp_to_network(best, B);
}

double excess_risk_mc(const Network& net, const HolderTarget& target,
                      const SupportSpec& support, int m, std::uint64_t seed) {
  if (m < 1) throw ValidationError("excess_risk_mc: m must be >= 1");
  const Eigen::MatrixXd X = sample_X(support, m, seed);
  const Eigen::MatrixXd out = evaluate_batch(net, X);
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    const double r = out(0, j) - target.eval(X.col(j));
    acc += r * r;
  }
  return acc / static_cast<double>(m);
}

RateReport rate_sweep(const HolderTarget& target, const SupportSpec& support,
                      const NoiseSpec& noise,
                      const std::vector<std::int64_t>& n_values,
                      const SweepConfig& config) {
  if (n_values.size() < 4)
    throw ValidationError("rate_sweep: need at least 4 sample sizes");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1])
      throw ValidationError("rate_sweep: n_values must be strictly increasing");
  if (config.replicates < 3)
    throw ValidationError("rate_sweep: need at least 3 replicates");
  if (config.projection && config.projection->d != support.d)
    throw ValidationError("rate_sweep: projection dimension mismatch");

  const int d_eff =
      config.projection ? config.projection->d0 : support.d;
  RateReport rep;
  rep.n_values = n_values;
  rep.replicates = config.replicates;
  rep.seed = config.seed;
  rep.width_multiplier = config.width_multiplier;
  rep.depth_multiplier = config.depth_multiplier;
  rep.target_exponent = -2.0 * target.beta / (2.0 * target.beta + d_eff);

  std::optional<Network> proj_net;
  if (config.projection)
    proj_net = projector_to_network(*config.projection);

  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const std::int64_t n = n_values[ni];
    PlanAux aux;
    aux.N = config.plan_N;
    aux.M = config.plan_M;
    aux.B = config.B;
    const ArchitecturePlan literal =
        plan_architecture(target.beta, d_eff, n, config.profile, aux);
    if (ni + 1 == n_values.size()) rep.literal_plan = literal;
    const int W_used = std::clamp(
        static_cast<int>(std::ceil(literal.W * config.width_multiplier)),
        config.min_width, config.max_width);
    const int D_used = std::clamp(
        static_cast<int>(std::ceil(literal.D * config.depth_multiplier)),
        config.min_depth, config.max_depth);
    rep.widths_used.push_back(W_used);
    rep.depths_used.push_back(D_used);

    std::vector<double> runs;
    int failures = 0;
    for (int r = 0; r < config.replicates; ++r) {
      const std::uint64_t data_seed = mix_seed(config.seed, ni, r, 0);
      const std::uint64_t train_seed = mix_seed(config.seed, ni, r, 1);
      const std::uint64_t mc_seed = mix_seed(config.seed, ni, r, 2);
      Dataset ds = generate_dataset(target, support, noise,
                                    static_cast<int>(n), data_seed);
      if (config.projection) ds.X = config.projection->matrix * ds.X;

      TrainConfig tc;
      tc.plan = literal;
      tc.plan.W = W_used;
      tc.plan.D = D_used;
      tc.plan.B = config.B;
      tc.epochs = config.epochs;
      tc.batch_size = config.batch_size;
      tc.learning_rate = config.learning_rate;
      tc.seed = train_seed;
      if (config.truncation_c)
        tc.truncation_level =
            *config.truncation_c * std::log(static_cast<double>(n));
      try {
        Network g = train_erm(ds, tc);
        Network f_hat = config.projection ? compose(g, *proj_net) : g;
        runs.push_back(excess_risk_mc(f_hat, target, support,
                                      config.mc_points, mc_seed));
      } catch (const ComputeError&) {
        ++failures;
        runs.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    if (2 * failures > config.replicates)
      throw ComputeError(
          "rate_sweep: training diverged in more than half of the "
          "replicates at n=" +
          std::to_string(n));
    rep.per_replicate.push_back(runs);
    double sum = 0.0;
    int good = 0;
    for (double v : runs)
      if (std::isfinite(v)) {
        sum += v;
        ++good;
      }
    const double mean = sum / std::max(good, 1);
    double var = 0.0;
    for (double v : runs)
      if (std::isfinite(v)) var += (v - mean) * (v - mean);
    rep.mean_excess.push_back(mean);
    rep.sd_excess.push_back(good > 1 ? std::sqrt(var / (good - 1)) : 0.0);
  }

  double floor = 0.0;
  for (double m : rep.mean_excess) floor = std::max(floor, m);
  rep.degenerate = floor < 1e-10;

  auto slope_of = [&](const std::vector<double>& means) {
    const std::size_t m = means.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double x = std::log(static_cast<double>(rep.n_values[i]));
      const double y = std::log(std::max(means[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    return denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  };
  rep.fitted_slope = rep.degenerate ? 0.0 : slope_of(rep.mean_excess);

  // Bootstrap over replicates within each n (200 resamples).
  if (!rep.degenerate) {
    Rng boot(config.seed ^ 0x5DEECE66Dull);
    std::vector<double> slopes;
    for (int b = 0; b < 200; ++b) {
      std::vector<double> means;
      for (std::size_t ni = 0; ni < rep.per_replicate.size(); ++ni) {
        const auto& runs = rep.per_replicate[ni];
        double sum = 0.0;
        int good = 0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
          const double v = runs[boot.below(runs.size())];
          if (std::isfinite(v)) {
            sum += v;
            ++good;
          }
        }
        means.push_back(good > 0 ? sum / good
                                 : rep.mean_excess[ni]);
      }
      slopes.push_back(slope_of(means));
    }
    std::sort(slopes.begin(), slopes.end());
    rep.slope_ci = {slopes[4], slopes[194]};  // ~2.5% and ~97.5%
  }

  char note[200];
  std::snprintf(note, sizeof(note),
                "d_eff=%d profile=%s epochs=%d batch=%d lr=%.4g mc=%d%s",
                d_eff, to_string(config.profile).c_str(), config.epochs,
                config.batch_size, config.learning_rate, config.mc_points,
                config.projection ? " projected" : "");
  rep.notes = note;
  return rep;
}

std::string rate_report_csv(const RateReport& report) {
  std::string out = "n,replicate,excess_risk\n";
  char buf[96];
  for (std::size_t ni = 0; ni < report.n_values.size(); ++ni)
    for (std::size_t r = 0; r < report.per_replicate[ni].size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%lld,%zu,%.17g\n",
                    static_cast<long long>(report.n_values[ni]), r,
                    report.per_replicate[ni][r]);
      out += buf;
    }
  return out;
}

std::string rate_report_json(const RateReport& report) {
  nlohmann::json j;
  j["n_values"] = report.n_values;
  j["mean_excess"] = report.mean_excess;
  j["sd_excess"] = report.sd_excess;
  j["fitted_slope"] = report.fitted_slope;
  j["target_exponent"] = report.target_exponent;
  j["slope_ci"] = {report.slope_ci.first, report.slope_ci.second};
  j["degenerate"] = report.degenerate;
  j["widths_used"] = report.widths_used;
  j["depths_used"] = report.depths_used;
  j["width_multiplier"] = report.width_multiplier;
  j["depth_multiplier"] = report.depth_multiplier;
  j["literal_plan"] = nlohmann::json::parse(plan_to_json(report.literal_plan));
  j["replicates"] = report.replicates;
  j["seed"] = report.seed;
  j["notes"] = report.notes;
  return j.dump(2);
}

std::string rate_report_plot_data(const RateReport& report) {
  std::string out;
  char buf[80];
  for (std::size_t ni = 0; ni < report.n_values.size(); ++ni) {
    std::snprintf(buf, sizeof(buf), "%lld %.17g\n",
                  static_cast<long long>(report.n_values[ni]),
                  report.mean_excess[ni]);
    out += buf;
  }
  return out;
}

}  // namespace reluc
