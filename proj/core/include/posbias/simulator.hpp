#pragma once
// Synthetic PBM data generator with known ground truth.
//
// Items come in clusters: cluster members share a feature prototype and a
// relevance prototype, so items with similar relevance rows also have similar
// feature rows. That correlation is what the embedding methods exploit when
// the logging policy pins each item to a single slot.

#include "posbias/click_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace posbias {

enum class PolicyKind { uniform, pinned, skewed };

PolicyKind policy_kind_from_string(const std::string& name);
std::string to_string(PolicyKind kind);

// Named position-bias curve. "inverse_rank" gives theta_k = 1/(1+k),
// "exponential" gives theta_k = exp(-rate*k), "custom" takes the values
// verbatim (e.g. loaded from a file).
struct BiasCurve {
  std::string name = "inverse_rank";
  double rate = 1.0;                 // exponential decay rate
  std::vector<double> values;        // custom curve values

  Eigen::VectorXd evaluate(int n_positions) const;
};

struct SimConfig {
  int n_items = 15;
  int n_positions = 10;
  int n_users = 240;
  int d_features = 8;        // user-context dimension
  BiasCurve bias_curve;
  PolicyKind policy_kind = PolicyKind::uniform;
  double policy_skew = 0.5;  // skewed policy: mix weight toward pinned
  std::uint64_t seed = 1;
  std::int64_t n_impressions = 100000;

  // Ground-truth structure.
  int n_user_segments = 4;
  int n_item_clusters = 4;
  int d_item_features = 24;
  double mu_low = 0.1;
  double mu_high = 0.9;
  double mu_jitter = 0.05;       // within-cluster relevance spread
  double feature_noise = 0.3;    // item feature spread around cluster prototype
  double context_noise = 0.3;    // user context spread around segment prototype
  bool anchor_popular_cluster = true;  // force one cluster to mu ~ 0.9

  void validate() const;
};

struct GroundTruth {
  PositionBiasVector theta;
  RelevanceTable mu;               // items x segments
  Eigen::MatrixXd item_features;   // items x d_item_features
  Eigen::MatrixXd user_contexts;   // users x d_features
  std::vector<int> user_segments;  // users
  std::vector<int> item_clusters;  // items

  // Relevance of every item for one user, mu(., u).
  Eigen::VectorXd item_relevance_for_user(int user) const;
};

// Draws theta from the configured bias curve and builds the clustered
// relevance table, item features and user population. Deterministic in
// config.seed.
GroundTruth make_ground_truth(const SimConfig& config);

// uniform: pi(i,k) = 1/(|I|*K). pinned: item i sits at slot i mod K with
// mass 1/|I| (requires n_items >= n_positions so every slot is covered).
// skewed: (1-w)*uniform + w*pinned.
LoggingPolicy make_policy(const SimConfig& config);

// Samples config.n_impressions records: (i,k) ~ pi, user uniform, then
// click ~ Bernoulli(mu(i,u) * theta_k). Deterministic in config.seed.
InteractionLog simulate_log(const GroundTruth& truth, const LoggingPolicy& policy,
                            const SimConfig& config);

// Keeps only the records whose item sits at its pinned position under
// `pinned`, reproducing the single-slot sparse regime from a uniform log.
InteractionLog sparsify(const InteractionLog& log, const LoggingPolicy& pinned);

// Distinct (item, position) pairs present in a log.
int distinct_pairs(const InteractionLog& log);

}  // namespace posbias
