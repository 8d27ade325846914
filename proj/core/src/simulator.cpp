#include "posbias/simulator.hpp"

#include "posbias/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace posbias {

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "uniform") return PolicyKind::uniform;
  if (name == "pinned") return PolicyKind::pinned;
  if (name == "skewed") return PolicyKind::skewed;
  throw std::invalid_argument("unknown policy kind '" + name +
                              "' (expected uniform, pinned or skewed)");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::uniform: return "uniform";
    case PolicyKind::pinned: return "pinned";
    case PolicyKind::skewed: return "skewed";
  }
  return "uniform";
}

Eigen::VectorXd BiasCurve::evaluate(int n_positions) const {
  if (n_positions < 1) throw std::invalid_argument("bias curve: n_positions < 1");
  Eigen::VectorXd theta(n_positions);
  if (name == "inverse_rank") {
    for (int k = 0; k < n_positions; ++k) theta[k] = 1.0 / (1.0 + k);
  } else if (name == "exponential") {
    if (rate < 0) throw std::invalid_argument("bias curve: negative decay rate");
    for (int k = 0; k < n_positions; ++k) theta[k] = std::exp(-rate * k);
  } else if (name == "custom") {
    if (static_cast<int>(values.size()) != n_positions)
      throw std::invalid_argument("bias curve: custom values length != n_positions");
    for (int k = 0; k < n_positions; ++k) {
      if (!(values[k] >= 0.0 && values[k] <= 1.0))
        throw std::invalid_argument("bias curve: custom value out of [0, 1]");
      theta[k] = values[k];
    }
  } else {
    throw std::invalid_argument("unknown bias curve '" + name +
                                "' (expected inverse_rank, exponential or custom)");
  }
  return theta;
}

void SimConfig::validate() const {
  if (n_items < 1) throw std::invalid_argument("sim config: n_items must be >= 1");
  if (n_positions < 1) throw std::invalid_argument("sim config: n_positions must be >= 1");
  if (n_users < 1) throw std::invalid_argument("sim config: n_users must be >= 1");
  if (d_features < 1) throw std::invalid_argument("sim config: d_features must be >= 1");
  if (d_item_features < 1)
    throw std::invalid_argument("sim config: d_item_features must be >= 1");
  if (n_impressions < 0)
    throw std::invalid_argument("sim config: n_impressions must be >= 0");
  if (n_user_segments < 1 || n_item_clusters < 1)
    throw std::invalid_argument("sim config: segment/cluster counts must be >= 1");
  if (n_item_clusters > n_items)
    throw std::invalid_argument("sim config: more item clusters than items");
  if (!(mu_low >= 0.0 && mu_high <= 1.0 && mu_low <= mu_high))
    throw std::invalid_argument("sim config: mu range must satisfy 0 <= lo <= hi <= 1");
  if (policy_kind == PolicyKind::skewed && !(policy_skew >= 0.0 && policy_skew <= 1.0))
    throw std::invalid_argument("sim config: policy_skew must lie in [0, 1]");
}

GroundTruth make_ground_truth(const SimConfig& config) {
  config.validate();
  std::mt19937_64 rng(mix_seed(config.seed, 0x7472757468));  // "truth"
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(config.mu_low, config.mu_high);

  GroundTruth truth;
  truth.theta = PositionBiasVector(config.bias_curve.evaluate(config.n_positions));

  const int I = config.n_items, G = config.n_item_clusters;
  const int S = config.n_user_segments;

  truth.item_clusters.resize(I);
  for (int i = 0; i < I; ++i) truth.item_clusters[i] = (i * G) / I;

  Eigen::MatrixXd mu_proto(G, S);
  for (int g = 0; g < G; ++g)
    for (int s = 0; s < S; ++s) mu_proto(g, s) = unif(rng);
  if (config.anchor_popular_cluster) mu_proto.row(0).setConstant(0.9);

  Eigen::MatrixXd mu(I, S);
  for (int i = 0; i < I; ++i)
    for (int s = 0; s < S; ++s) {
      const double v = mu_proto(truth.item_clusters[i], s) + config.mu_jitter * gauss(rng);
      mu(i, s) = std::clamp(v, 0.02, 0.98);
    }
  truth.mu = RelevanceTable(std::move(mu));

  Eigen::MatrixXd feat_proto(G, config.d_item_features);
  for (int g = 0; g < G; ++g)
    for (int j = 0; j < config.d_item_features; ++j) feat_proto(g, j) = gauss(rng);
  truth.item_features.resize(I, config.d_item_features);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < config.d_item_features; ++j)
      truth.item_features(i, j) =
          feat_proto(truth.item_clusters[i], j) + config.feature_noise * gauss(rng);

  Eigen::MatrixXd ctx_proto(S, config.d_features);
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < config.d_features; ++j) ctx_proto(s, j) = gauss(rng);
  std::uniform_int_distribution<int> seg_dist(0, S - 1);
  truth.user_segments.resize(config.n_users);
  truth.user_contexts.resize(config.n_users, config.d_features);
  for (int u = 0; u < config.n_users; ++u) {
    truth.user_segments[u] = seg_dist(rng);
    for (int j = 0; j < config.d_features; ++j)
      truth.user_contexts(u, j) =
          ctx_proto(truth.user_segments[u], j) + config.context_noise * gauss(rng);
  }
  return truth;
}

Eigen::VectorXd GroundTruth::item_relevance_for_user(int user) const {
  const int seg = user_segments.at(static_cast<std::size_t>(user));
  return mu.values().col(seg);
}

LoggingPolicy make_policy(const SimConfig& config) {
  config.validate();
  const int I = config.n_items, K = config.n_positions;
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(I, K, 1.0 / (I * K));
  if (config.policy_kind == PolicyKind::uniform) return LoggingPolicy(uniform);

  if (I < K)
    throw std::invalid_argument(
        "pinned policy: n_items < n_positions leaves positions uncovered");
  Eigen::MatrixXd pinned = Eigen::MatrixXd::Zero(I, K);
  for (int i = 0; i < I; ++i) pinned(i, i % K) = 1.0 / I;
  if (config.policy_kind == PolicyKind::pinned) return LoggingPolicy(pinned);

  const double w = config.policy_skew;
  return LoggingPolicy((1.0 - w) * uniform + w * pinned);
}

InteractionLog simulate_log(const GroundTruth& truth, const LoggingPolicy& policy,
                            const SimConfig& config) {
  config.validate();
  if (policy.n_items() != config.n_items || policy.n_positions() != config.n_positions)
    throw std::invalid_argument("simulate_log: policy dimensions do not match config");
  if (truth.mu.n_items() != config.n_items)
    throw std::invalid_argument("simulate_log: truth dimensions do not match config");

  const int I = config.n_items, K = config.n_positions;
  std::vector<double> flat(static_cast<std::size_t>(I) * K);
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k) flat[static_cast<std::size_t>(i) * K + k] = policy(i, k);

  std::mt19937_64 rng(mix_seed(config.seed, 0x6c6f67));  // "log"
  std::discrete_distribution<int> pair_dist(flat.begin(), flat.end());
  std::uniform_int_distribution<int> user_dist(0, config.n_users - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  InteractionLog log(I, K, config.d_features);
  log.reserve(static_cast<std::size_t>(config.n_impressions));
  Interaction rec;
  for (std::int64_t t = 0; t < config.n_impressions; ++t) {
    const int pair = pair_dist(rng);
    const int item = pair / K;
    const int pos = pair % K;
    const int user = user_dist(rng);
    const double p = truth.mu(item, truth.user_segments[user]) * truth.theta[pos];
    rec.context = truth.user_contexts.row(user).transpose();
    rec.item_id = item;
    rec.position = pos;
    rec.click = coin(rng) < p ? 1 : 0;
    log.append(rec);
  }
  return log;
}

InteractionLog sparsify(const InteractionLog& log, const LoggingPolicy& pinned) {
  if (pinned.n_items() != log.n_items())
    throw std::invalid_argument("sparsify: policy does not match log catalog");
  const std::vector<int> pins = pinned.pinned_positions();
  InteractionLog out(log.n_items(), log.n_positions(), log.context_dim());
  Interaction rec;
  for (std::size_t j = 0; j < log.size(); ++j) {
    if (log.position(j) != pins[static_cast<std::size_t>(log.item(j))]) continue;
    rec.context = log.context(j).transpose();
    rec.item_id = log.item(j);
    rec.click = log.click(j);
    rec.position = log.position(j);
    out.append(rec);
  }
  return out;
}

int distinct_pairs(const InteractionLog& log) {
  std::set<std::pair<int, int>> seen;
  for (std::size_t j = 0; j < log.size(); ++j) seen.insert({log.item(j), log.position(j)});
  return static_cast<int>(seen.size());
}

}  // namespace posbias
