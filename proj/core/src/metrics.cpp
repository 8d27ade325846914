#include "posbias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace posbias {

double rmse_theta(const PositionBiasVector& estimated, const PositionBiasVector& truth,
                  bool normalize) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("rmse_theta: length mismatch");
  Eigen::VectorXd a = estimated.values();
  Eigen::VectorXd b = truth.values();
  if (normalize) {
    if (a[0] == 0.0 || b[0] == 0.0)
      throw std::invalid_argument("rmse_theta: cannot normalize by a zero first entry");
    a /= a[0];
    b /= b[0];
  }
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

std::vector<int> rank_items(const EmState& state, const AssignmentMatrix& assignment,
                            Eigen::Ref<const Eigen::RowVectorXd> context) {
  if (!state.relevance) throw std::invalid_argument("rank_items: state has no model");
  const int m = assignment.n_tokens();
  std::vector<double> mu_tok(static_cast<std::size_t>(m));
  state.relevance->predict_tokens(context, mu_tok);

  const int n_items = assignment.n_items();
  std::vector<double> score(static_cast<std::size_t>(n_items), 0.0);
  for (int i = 0; i < n_items; ++i) {
    double s = 0.0;
    for (int e = 0; e < m; ++e) s += assignment(i, e) * mu_tok[static_cast<std::size_t>(e)];
    score[static_cast<std::size_t>(i)] = s;
  }
  std::vector<int> order(static_cast<std::size_t>(n_items));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    return a < b;
  });
  return order;
}

namespace {

bool is_relevant(const std::vector<int>& sorted_ids, int item) {
  return std::binary_search(sorted_ids.begin(), sorted_ids.end(), item);
}

double average_precision_at(const std::vector<int>& ranking,
                            const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  const int depth = std::min<int>(k, static_cast<int>(ranking.size()));
  double hits = 0.0, sum_prec = 0.0;
  for (int j = 0; j < depth; ++j) {
    if (is_relevant(relevant, ranking[static_cast<std::size_t>(j)])) {
      hits += 1.0;
      sum_prec += hits / (j + 1);
    }
  }
  return sum_prec / std::min<int>(static_cast<int>(relevant.size()), k);
}

}  // namespace

double mrr(const std::vector<std::vector<int>>& rankings,
           const std::vector<std::vector<int>>& relevant) {
  if (rankings.size() != relevant.size())
    throw std::invalid_argument("mrr: query count mismatch");
  if (rankings.empty()) throw std::invalid_argument("mrr: no queries");
  double total = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (rankings[q].empty()) throw std::invalid_argument("mrr: empty ranking");
    for (std::size_t j = 0; j < rankings[q].size(); ++j) {
      if (is_relevant(relevant[q], rankings[q][j])) {
        total += 1.0 / static_cast<double>(j + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(rankings.size());
}

double map_at_k(const std::vector<std::vector<int>>& rankings,
                const std::vector<std::vector<int>>& relevant, int k) {
  if (k < 1) throw std::invalid_argument("map_at_k: k must be >= 1");
  if (rankings.size() != relevant.size())
    throw std::invalid_argument("map_at_k: query count mismatch");
  if (rankings.empty()) throw std::invalid_argument("map_at_k: no queries");
  double total = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q)
    total += average_precision_at(rankings[q], relevant[q], k);
  return total / static_cast<double>(rankings.size());
}

void EvalConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("eval config: n_trials must be >= 1");
  if (cutoffs.empty()) throw std::invalid_argument("eval config: need at least one cutoff");
  for (int k : cutoffs)
    if (k < 1) throw std::invalid_argument("eval config: cutoffs must be >= 1");
  if (!(relevance_quantile >= 0.0 && relevance_quantile < 1.0))
    throw std::invalid_argument("eval config: relevance_quantile must lie in [0, 1)");
}

std::vector<std::vector<int>> relevant_sets(const GroundTruth& truth, double quantile) {
  const int n_users = static_cast<int>(truth.user_contexts.rows());
  const int n_items = truth.mu.n_items();
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_users));
  std::vector<double> values(static_cast<std::size_t>(n_items));
  for (int u = 0; u < n_users; ++u) {
    const Eigen::VectorXd mu_u = truth.item_relevance_for_user(u);
    for (int i = 0; i < n_items; ++i) values[static_cast<std::size_t>(i)] = mu_u[i];
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const auto pos = static_cast<std::size_t>(quantile * (n_items - 1));
    // midpoint interpolation so an odd catalog uses its true median
    const double lo = sorted[pos];
    const double frac = quantile * (n_items - 1) - static_cast<double>(pos);
    const double threshold =
        pos + 1 < sorted.size() ? lo + frac * (sorted[pos + 1] - lo) : lo;
    for (int i = 0; i < n_items; ++i)
      if (mu_u[i] > threshold) out[static_cast<std::size_t>(u)].push_back(i);
  }
  return out;
}

TrialMetrics evaluate_trial(const EmState& state, const AssignmentMatrix& assignment,
                            const GroundTruth& truth, const EvalConfig& config) {
  config.validate();
  TrialMetrics out;
  out.rmse_raw = rmse_theta(state.theta, truth.theta, false);
  out.rmse_normalized = rmse_theta(state.theta, truth.theta, true);

  const int n_users = static_cast<int>(truth.user_contexts.rows());
  std::vector<std::vector<int>> rankings(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u)
    rankings[static_cast<std::size_t>(u)] =
        rank_items(state, assignment, truth.user_contexts.row(u));
  const std::vector<std::vector<int>> relevant =
      relevant_sets(truth, config.relevance_quantile);

  out.mrr = mrr(rankings, relevant);
  for (int k : config.cutoffs) out.map_at[k] = map_at_k(rankings, relevant, k);
  return out;
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

}  // namespace

EvalReport aggregate_trials(const std::string& method,
                            const std::vector<TrialMetrics>& trials,
                            const EvalConfig& config) {
  if (trials.empty()) throw std::invalid_argument("aggregate_trials: no trials");
  EvalReport report;
  report.method = method;
  report.n_trials = static_cast<int>(trials.size());
  report.per_trial = trials;

  auto collect = [&](auto getter) {
    std::vector<double> xs;
    xs.reserve(trials.size());
    for (const TrialMetrics& t : trials) xs.push_back(getter(t));
    return summarize(xs);
  };
  report.rmse_raw = collect([](const TrialMetrics& t) { return t.rmse_raw; });
  report.rmse_normalized = collect([](const TrialMetrics& t) { return t.rmse_normalized; });
  report.mrr = collect([](const TrialMetrics& t) { return t.mrr; });
  for (int k : config.cutoffs)
    report.map_at[k] = collect([k](const TrialMetrics& t) { return t.map_at.at(k); });
  return report;
}

}  // namespace posbias
