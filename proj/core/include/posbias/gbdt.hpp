#pragma once
// Gradient-boosted decision trees for binary click propensity.
//
// Logistic loss, exact greedy splits on sorted feature values, Newton leaf
// values. Labels may be fractional (posterior click probabilities) and
// samples may carry weights; both reduce to the ordinary binary case when
// labels are 0/1 and weights are 1.

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace posbias::gbdt {

struct GbdtConfig {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// feature < 0 marks a leaf; value holds the unscaled Newton step.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> features) const;
};

// Fitted boosted model: sigmoid(base_score + learning_rate * sum of trees),
// predictions clamped to [1e-6, 1 - 1e-6].
class Model {
 public:
  Model() = default;

  double predict(std::span<const double> features) const;

  int n_features() const { return n_features_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<Tree>& trees() const { return trees_; }

  // Weighted training logloss per boosting round; entry 0 is the base-score
  // model, entry t the model after t trees. Nonincreasing by construction.
  const std::vector<double>& train_logloss() const { return train_logloss_; }

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  friend Model fit(std::span<const double>, int, std::span<const double>,
                   std::span<const double>, const GbdtConfig&);

  int n_features_ = 0;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<Tree> trees_;
  std::vector<double> train_logloss_;
};

// Core fit on a flat row-major feature matrix. weights may be empty (all 1).
Model fit(std::span<const double> features_row_major, int n_features,
          std::span<const double> labels, std::span<const double> weights,
          const GbdtConfig& config);

// Convenience overload for (feature vector, label) sample lists.
Model fit(const std::vector<std::vector<double>>& features,
          const std::vector<double>& labels, const GbdtConfig& config);

}  // namespace posbias::gbdt
