#pragma once
// Core domain types and probability algebra of the position-based click model.
//
// The PBM factorizes a click as examination times relevance:
//   P(C=1 | i, u, k) = mu(i, u) * theta_k
// where theta_k is the position bias of slot k and mu(i, u) the item-user
// relevance. Everything downstream (simulator, EM estimator, metrics) is
// built on these types.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace posbias {

// Absolute tolerance used for all probability-normalization checks.
inline constexpr double kNormTol = 1e-9;

// Fixed-length vector of real-valued user attributes.
using Context = Eigen::VectorXd;

// One logged impression: who saw what, where, and whether they clicked.
struct Interaction {
  Context context;
  int item_id = 0;
  int click = 0;     // 0 or 1
  int position = 0;  // 0-based slot index
};

// Columnar store for a logged dataset. Rows are immutable once appended;
// contexts all share one dimension, items/positions are bounded by the
// catalog sizes given at construction.
class InteractionLog {
 public:
  InteractionLog(int n_items, int n_positions, int context_dim);

  void append(const Interaction& rec);
  void reserve(std::size_t n);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  int n_items() const { return n_items_; }
  int n_positions() const { return n_positions_; }
  int context_dim() const { return context_dim_; }

  Eigen::Ref<const Eigen::RowVectorXd> context(std::size_t i) const {
    return contexts_.row(static_cast<Eigen::Index>(i));
  }
  int item(std::size_t i) const { return items_[i]; }
  int click(std::size_t i) const { return clicks_[i]; }
  int position(std::size_t i) const { return positions_[i]; }

  const Eigen::MatrixXd& contexts() const { return contexts_; }
  const std::vector<std::int32_t>& items() const { return items_; }
  const std::vector<std::uint8_t>& clicks() const { return clicks_; }
  const std::vector<std::int32_t>& positions() const { return positions_; }

 private:
  int n_items_;
  int n_positions_;
  int context_dim_;
  Eigen::MatrixXd contexts_;  // size() x context_dim
  std::vector<std::int32_t> items_;
  std::vector<std::uint8_t> clicks_;
  std::vector<std::int32_t> positions_;
  std::size_t capacity_ = 0;
};

// Examination probability per position; every entry lies in [0, 1].
class PositionBiasVector {
 public:
  PositionBiasVector() = default;
  explicit PositionBiasVector(Eigen::VectorXd theta);

  int size() const { return static_cast<int>(theta_.size()); }
  double operator[](int k) const { return theta_[k]; }
  const Eigen::VectorXd& values() const { return theta_; }

 private:
  Eigen::VectorXd theta_;
};

// Ground-truth relevance mu(i, u), tabulated as items x user segments.
class RelevanceTable {
 public:
  RelevanceTable() = default;
  explicit RelevanceTable(Eigen::MatrixXd mu);

  int n_items() const { return static_cast<int>(mu_.rows()); }
  int n_segments() const { return static_cast<int>(mu_.cols()); }
  double operator()(int item, int segment) const { return mu_(item, segment); }
  const Eigen::MatrixXd& values() const { return mu_; }

 private:
  Eigen::MatrixXd mu_;
};

// Joint distribution pi(i, k) over (item, position) assignments. The whole
// table sums to 1, matching the convention of a policy over the action set
// {(i, k)}.
class LoggingPolicy {
 public:
  LoggingPolicy() = default;
  explicit LoggingPolicy(Eigen::MatrixXd pi);

  int n_items() const { return static_cast<int>(pi_.rows()); }
  int n_positions() const { return static_cast<int>(pi_.cols()); }
  double operator()(int item, int position) const { return pi_(item, position); }
  const Eigen::MatrixXd& values() const { return pi_; }

  // Position with the largest assignment mass for each item. For a pinned
  // policy this is the single slot the item ever occupies.
  std::vector<int> pinned_positions() const;

 private:
  Eigen::MatrixXd pi_;
};

// P(C=1 | i, u, k) = mu_iu * theta_k. Both arguments must be probabilities.
double click_probability(double mu_iu, double theta_k);

// Item-level relevance reconstructed from token-level relevance:
//   mu(i, u) = sum_e p(e|i) * mu(e, u).
// assignment_row must sum to 1 (within kNormTol) and match mu_eu in length.
double embedded_relevance(std::span<const double> assignment_row,
                          std::span<const double> mu_eu);

}  // namespace posbias
