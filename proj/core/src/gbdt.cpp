#include "posbias/gbdt.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace posbias::gbdt {

namespace {

constexpr double kPredClampLo = 1e-6;
constexpr double kPredClampHi = 1.0 - 1e-6;
constexpr double kLeafClip = 4.0;
constexpr double kHessReg = 1e-6;
constexpr double kMinGain = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_prob(double p) { return std::clamp(p, kPredClampLo, kPredClampHi); }

double weighted_logloss(std::span<const double> y, const std::vector<double>& score,
                        std::span<const double> w, double total_weight) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(sigmoid(score[i]));
    loss += w[i] * -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  return loss / total_weight;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;

  bool better_than(const SplitCandidate& other) const {
    if (gain != other.gain) return gain > other.gain;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

double leaf_value(double g, double h) {
  return std::clamp(-g / (h + kHessReg), -kLeafClip, kLeafClip);
}

double split_score(double g, double h) { return g * g / (h + kHessReg); }

}  // namespace

void GbdtConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("gbdt config: n_trees must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("gbdt config: max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("gbdt config: learning_rate must lie in (0, 1]");
  if (min_samples_leaf < 1)
    throw std::invalid_argument("gbdt config: min_samples_leaf must be >= 1");
}

double Tree::predict(std::span<const double> features) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = features[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double Model::predict(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != n_features_ && !trees_.empty())
    throw std::invalid_argument("gbdt predict: expected " + std::to_string(n_features_) +
                                " features, got " + std::to_string(features.size()));
  double score = base_score_;
  for (const Tree& tree : trees_) score += learning_rate_ * tree.predict(features);
  return clamp_prob(sigmoid(score));
}

Model fit(std::span<const double> features_row_major, int n_features,
          std::span<const double> labels, std::span<const double> weights,
          const GbdtConfig& config) {
  config.validate();
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("gbdt fit: need at least one sample");
  if (n_features < 1) throw std::invalid_argument("gbdt fit: need at least one feature");
  if (features_row_major.size() != n * static_cast<std::size_t>(n_features))
    throw std::invalid_argument("gbdt fit: feature matrix size mismatch");
  if (!weights.empty() && weights.size() != n)
    throw std::invalid_argument("gbdt fit: weights size mismatch");

  std::vector<double> w(n, 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double total_weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(labels[i] >= 0.0 && labels[i] <= 1.0))
      throw std::invalid_argument("gbdt fit: labels must lie in [0, 1]");
    if (!(w[i] >= 0.0)) throw std::invalid_argument("gbdt fit: negative sample weight");
    total_weight += w[i];
  }
  if (!(total_weight > 0.0))
    throw std::invalid_argument("gbdt fit: total sample weight is zero");

  Model model;
  model.n_features_ = n_features;
  model.learning_rate_ = config.learning_rate;

  double label_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) label_mean += w[i] * labels[i];
  label_mean = clamp_prob(label_mean / total_weight);
  model.base_score_ = std::log(label_mean / (1.0 - label_mean));

  std::vector<double> score(n, model.base_score_);
  model.train_logloss_.push_back(weighted_logloss(labels, score, w, total_weight));

  // All-identical labels: the base score is already the optimum.
  const auto [lo_it, hi_it] = std::minmax_element(labels.begin(), labels.end());
  if (*lo_it == *hi_it) return model;

  // Column views plus one global presort per feature, reused by every tree.
  std::vector<std::vector<double>> col(static_cast<std::size_t>(n_features),
                                       std::vector<double>(n));
  std::vector<std::vector<std::uint32_t>> sorted(static_cast<std::size_t>(n_features),
                                                 std::vector<std::uint32_t>(n));
  for (int f = 0; f < n_features; ++f) {
    auto& c = col[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < n; ++i)
      c[i] = features_row_major[i * static_cast<std::size_t>(n_features) +
                                static_cast<std::size_t>(f)];
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); }))
      throw std::invalid_argument("gbdt fit: non-finite feature value");
    auto& idx = sorted[static_cast<std::size_t>(f)];
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(),
                     [&c](std::uint32_t a, std::uint32_t b) { return c[a] < c[b]; });
  }

  std::vector<double> grad(n), hess(n);
  std::vector<std::int32_t> node_of(n);

  struct NodeStats {
    double g = 0.0, h = 0.0;
    std::size_t count = 0;
    SplitCandidate best;
    bool open = false;
  };

  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = w[i] * (p - labels[i]);
      hess[i] = std::max(w[i] * p * (1.0 - p), 1e-12 * w[i]);
    }

    Tree tree;
    tree.nodes.emplace_back();  // root
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> level_nodes = {0};

    for (int depth = 0; depth < config.max_depth && !level_nodes.empty(); ++depth) {
      std::vector<NodeStats> stats(tree.nodes.size());
      for (int id : level_nodes) stats[static_cast<std::size_t>(id)].open = true;
      for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t id = node_of[i];
        if (id < 0 || !stats[static_cast<std::size_t>(id)].open) continue;
        auto& s = stats[static_cast<std::size_t>(id)];
        s.g += grad[i];
        s.h += hess[i];
        s.count += 1;
      }

      // Scan every feature once; per-node prefix accumulators pick up split
      // candidates at value boundaries.
      std::vector<double> run_g(tree.nodes.size()), run_h(tree.nodes.size());
      std::vector<std::size_t> run_cnt(tree.nodes.size());
      std::vector<double> prev_val(tree.nodes.size());
      for (int f = 0; f < n_features; ++f) {
        std::fill(run_g.begin(), run_g.end(), 0.0);
        std::fill(run_h.begin(), run_h.end(), 0.0);
        std::fill(run_cnt.begin(), run_cnt.end(), 0);
        std::fill(prev_val.begin(), prev_val.end(),
                  -std::numeric_limits<double>::infinity());
        const auto& c = col[static_cast<std::size_t>(f)];
        for (const std::uint32_t i : sorted[static_cast<std::size_t>(f)]) {
          const std::int32_t id = node_of[i];
          if (id < 0) continue;
          auto& s = stats[static_cast<std::size_t>(id)];
          if (!s.open) continue;
          const auto sid = static_cast<std::size_t>(id);
          const double v = c[i];
          if (run_cnt[sid] > 0 && v > prev_val[sid]) {
            const std::size_t right_cnt = s.count - run_cnt[sid];
            if (run_cnt[sid] >= static_cast<std::size_t>(config.min_samples_leaf) &&
                right_cnt >= static_cast<std::size_t>(config.min_samples_leaf)) {
              const double gl = run_g[sid], hl = run_h[sid];
              const double gain = 0.5 * (split_score(gl, hl) +
                                         split_score(s.g - gl, s.h - hl) -
                                         split_score(s.g, s.h));
              SplitCandidate cand{gain, f, 0.5 * (prev_val[sid] + v)};
              if (cand.gain > kMinGain && cand.better_than(s.best)) s.best = cand;
            }
          }
          run_g[sid] += grad[i];
          run_h[sid] += hess[i];
          run_cnt[sid] += 1;
          prev_val[sid] = v;
        }
      }

      std::vector<int> next_level;
      for (int id : level_nodes) {
        auto& s = stats[static_cast<std::size_t>(id)];
        if (s.best.feature < 0) continue;
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = s.best.feature;
        node.threshold = s.best.threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        next_level.push_back(node.left);
        next_level.push_back(node.right);
      }
      if (next_level.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        std::int32_t id = node_of[i];
        if (id < 0) continue;
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.feature < 0) continue;
        node_of[i] =
            col[static_cast<std::size_t>(node.feature)][i] < node.threshold ? node.left
                                                                            : node.right;
      }
      level_nodes = std::move(next_level);
    }

    // Leaf values: Newton step per leaf.
    std::vector<double> leaf_g(tree.nodes.size()), leaf_h(tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
      // Samples may still reference internal ids when max_depth cut growth
      // short; walk down to the leaf.
      std::int32_t id = node_of[i];
      while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        id = col[static_cast<std::size_t>(node.feature)][i] < node.threshold ? node.left
                                                                             : node.right;
      }
      node_of[i] = id;
      leaf_g[static_cast<std::size_t>(id)] += grad[i];
      leaf_h[static_cast<std::size_t>(id)] += hess[i];
    }
    for (std::size_t id = 0; id < tree.nodes.size(); ++id)
      if (tree.nodes[id].feature < 0)
        tree.nodes[id].value = leaf_value(leaf_g[id], leaf_h[id]);

    for (std::size_t i = 0; i < n; ++i)
      score[i] += config.learning_rate *
                  tree.nodes[static_cast<std::size_t>(node_of[i])].value;
    model.trees_.push_back(std::move(tree));
    model.train_logloss_.push_back(weighted_logloss(labels, score, w, total_weight));
    std::fill(node_of.begin(), node_of.end(), 0);
  }
  return model;
}

Model fit(const std::vector<std::vector<double>>& features,
          const std::vector<double>& labels, const GbdtConfig& config) {
  if (features.empty()) throw std::invalid_argument("gbdt fit: need at least one sample");
  const std::size_t d = features.front().size();
  std::vector<double> flat;
  flat.reserve(features.size() * d);
  for (const auto& row : features) {
    if (row.size() != d)
      throw std::invalid_argument("gbdt fit: inconsistent feature dimension");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return fit(flat, static_cast<int>(d), labels, {}, config);
}

nlohmann::json Model::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(std::move(nodes));
  }
  return {{"n_features", n_features_},
          {"base_score", base_score_},
          {"learning_rate", learning_rate_},
          {"trees", std::move(trees)},
          {"train_logloss", train_logloss_}};
}

Model Model::from_json(const nlohmann::json& j) {
  Model model;
  model.n_features_ = j.at("n_features").get<int>();
  model.base_score_ = j.at("base_score").get<double>();
  model.learning_rate_ = j.at("learning_rate").get<double>();
  model.train_logloss_ = j.value("train_logloss", std::vector<double>{});
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<int>();
      n.right = nj.at(3).get<int>();
      n.value = nj.at(4).get<double>();
      tree.nodes.push_back(n);
    }
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

}  // namespace posbias::gbdt
