#pragma once
// Evaluation of estimated position bias (RMSE against ground truth) and of
// downstream ranking quality (MRR, MAP@k).

#include "posbias/rem.hpp"
#include "posbias/simulator.hpp"

#include <map>
#include <vector>

namespace posbias {

// sqrt(mean_k (est_k - truth_k)^2). With normalize set, both vectors are
// first divided by their own leading entry, which removes the multiplicative
// scale the PBM leaves unidentified.
double rmse_theta(const PositionBiasVector& estimated, const PositionBiasVector& truth,
                  bool normalize = false);

// Items sorted by reconstructed relevance sum_e p(e|i) * mu(e, u), descending;
// ties broken by lower item id.
std::vector<int> rank_items(const EmState& state, const AssignmentMatrix& assignment,
                            Eigen::Ref<const Eigen::RowVectorXd> context);

// Mean reciprocal rank of the first relevant item; queries with no relevant
// item contribute 0. `relevant` holds sorted item-id lists per query.
double mrr(const std::vector<std::vector<int>>& rankings,
           const std::vector<std::vector<int>>& relevant);

// Mean average precision truncated at k: precision at each hit within the
// top k, averaged over min(|relevant|, k).
double map_at_k(const std::vector<std::vector<int>>& rankings,
                const std::vector<std::vector<int>>& relevant, int k);

struct EvalConfig {
  std::vector<int> cutoffs = {5, 10};
  int n_trials = 5;
  bool normalize = false;        // use normalized RMSE as the headline number
  double relevance_quantile = 0.5;  // per-user relevance threshold

  void validate() const;
};

struct TrialMetrics {
  double rmse_raw = 0.0;
  double rmse_normalized = 0.0;
  double mrr = 0.0;
  std::map<int, double> map_at;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

// Aggregate over trials of one estimation method.
struct EvalReport {
  std::string method;
  int n_trials = 0;
  std::vector<TrialMetrics> per_trial;
  MetricSummary rmse_raw;
  MetricSummary rmse_normalized;
  MetricSummary mrr;
  std::map<int, MetricSummary> map_at;
};

// Per-user ground-truth relevant sets: items whose true relevance for that
// user strictly exceeds the per-user quantile.
std::vector<std::vector<int>> relevant_sets(const GroundTruth& truth, double quantile);

// Scores one trained state against the ground truth over every user.
TrialMetrics evaluate_trial(const EmState& state, const AssignmentMatrix& assignment,
                            const GroundTruth& truth, const EvalConfig& config);

EvalReport aggregate_trials(const std::string& method,
                            const std::vector<TrialMetrics>& trials,
                            const EvalConfig& config);

}  // namespace posbias
