#pragma once
// Regression EM with embedding tokens.
//
// A logged click dataset is expanded over embedding tokens with partial
// rewards, then EM alternates posterior computation over the hidden
// (examination, relevance) pair with a closed-form theta update and a
// regression fit of token-level relevance. The identity assignment reduces
// the whole construction to vanilla regression EM.

#include "posbias/click_model.hpp"
#include "posbias/embedding.hpp"
#include "posbias/gbdt.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace posbias {

// Predictions clamped to this range before entering Eq-style denominators,
// so an observed non-click never meets theta*mu == 1.
inline constexpr double kMuClampLo = 1e-6;
inline constexpr double kMuClampHi = 1.0 - 1e-6;

enum class ExpandMode { sample, expectation };

ExpandMode expand_mode_from_string(const std::string& name);
std::string to_string(ExpandMode mode);

// One token-level record of the expanded dataset.
struct EmbeddedInteraction {
  Eigen::Ref<const Eigen::RowVectorXd> context;
  int token_id;
  double partial_reward;  // binary reward; fractional mass sits in `weight`
  int position;
  double weight;
};

// Columnar expanded dataset over (user context, token, partial reward,
// position). Each source record contributes one row per token. In sample
// mode rewards are Bernoulli draws with unit weight; in expectation mode the
// reward equals the source click and the row carries mass p(e|i), so the
// fractional partial reward of a row is weight * reward and downstream sums
// weight rows by their mass.
class EmbeddedLog {
 public:
  EmbeddedLog(const InteractionLog& source, int n_tokens, ExpandMode mode);

  std::size_t size() const { return tokens_.size(); }
  int n_tokens() const { return n_tokens_; }
  int n_positions() const { return source_->n_positions(); }
  int context_dim() const { return source_->context_dim(); }
  ExpandMode mode() const { return mode_; }
  const InteractionLog& source() const { return *source_; }

  EmbeddedInteraction operator[](std::size_t r) const {
    const std::size_t src = record_of(r);
    return {source_->context(src), tokens_[r], rewards_[r],
            source_->position(src), weights_[r]};
  }

  std::size_t record_of(std::size_t r) const { return r / static_cast<std::size_t>(n_tokens_); }
  int token(std::size_t r) const { return tokens_[r]; }
  double reward(std::size_t r) const { return rewards_[r]; }
  double weight(std::size_t r) const { return weights_[r]; }
  int position(std::size_t r) const {
    return source_->position(record_of(r));
  }

  void push(int token, double reward, double weight) {
    tokens_.push_back(token);
    rewards_.push_back(reward);
    weights_.push_back(weight);
  }

 private:
  const InteractionLog* source_;
  int n_tokens_;
  ExpandMode mode_;
  std::vector<std::int32_t> tokens_;
  std::vector<double> rewards_;
  std::vector<double> weights_;
};

// Expands every (record, token) pair. Sample mode draws the partial reward
// w ~ Bernoulli(p(e|i) * c); expectation mode keeps w = c and moves p(e|i)
// into the row weight. The expanded log keeps a pointer into `log`, which
// must outlive it.
EmbeddedLog expand_log(const InteractionLog& log, const AssignmentMatrix& assignment,
                       ExpandMode mode, std::uint64_t seed);

// Posterior over the hidden (examination E, relevance R) pair for one record.
struct Posteriors {
  double e1r1 = 0.0;
  double e1r0 = 0.0;
  double e0r1 = 0.0;
  double e0r0 = 0.0;

  double examined() const { return e1r1 + e1r0; }
  double relevant() const { return e1r1 + e0r1; }
};

// P(E, R | w, e, k) for one record. A click puts all mass on (1, 1); a
// non-click splits the remaining mass by theta and mu. theta*mu == 1 with
// w == 0 is contradictory input and throws.
Posteriors e_step_posteriors(double w, double theta_k, double mu_eu);

// Learned mu(u, e): click propensity of a (context, token) pair. Predictions
// lie in [kMuClampLo, kMuClampHi].
class RelevanceModel {
 public:
  virtual ~RelevanceModel() = default;
  virtual double predict(Eigen::Ref<const Eigen::RowVectorXd> context, int token) const = 0;

  // Predictions for tokens 0..out.size()-1 under one context.
  virtual void predict_tokens(Eigen::Ref<const Eigen::RowVectorXd> context,
                              std::span<double> out) const;

  virtual nlohmann::json to_json() const = 0;
};

// Context-independent per-token average, the closed-form tabular update.
class TabularRelevanceModel : public RelevanceModel {
 public:
  explicit TabularRelevanceModel(Eigen::VectorXd mu_token);
  double predict(Eigen::Ref<const Eigen::RowVectorXd> context, int token) const override;
  const Eigen::VectorXd& token_means() const { return mu_token_; }
  nlohmann::json to_json() const override;

 private:
  Eigen::VectorXd mu_token_;
};

// GBDT over context features concatenated with a one-hot token encoding.
class GbdtRelevanceModel : public RelevanceModel {
 public:
  GbdtRelevanceModel(gbdt::Model model, int context_dim, int n_tokens);
  double predict(Eigen::Ref<const Eigen::RowVectorXd> context, int token) const override;
  void predict_tokens(Eigen::Ref<const Eigen::RowVectorXd> context,
                      std::span<double> out) const override;
  const gbdt::Model& model() const { return model_; }
  nlohmann::json to_json() const override;

 private:
  gbdt::Model model_;
  int context_dim_;
  int n_tokens_;
};

// Uniform prior model used before the first M-step.
class ConstantRelevanceModel : public RelevanceModel {
 public:
  explicit ConstantRelevanceModel(double value) : value_(value) {}
  double predict(Eigen::Ref<const Eigen::RowVectorXd>, int) const override { return value_; }
  nlohmann::json to_json() const override;

 private:
  double value_;
};

std::shared_ptr<RelevanceModel> relevance_model_from_json(const nlohmann::json& j);

enum class LearnerKind { tabular, gbdt };

LearnerKind learner_kind_from_string(const std::string& name);
std::string to_string(LearnerKind kind);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::gbdt;
  gbdt::GbdtConfig gbdt;
};

struct EmConfig {
  int max_iter = 50;
  double tol = 1e-3;  // max-norm theta change
  ExpandMode mode = ExpandMode::sample;
  LearnerConfig learner;
  std::uint64_t seed = 0;
  bool resample_rewards_each_iter = false;
  std::optional<Eigen::VectorXd> initial_theta;  // defaults to uniform 0.5

  void validate() const;
};

struct EmState {
  PositionBiasVector theta;
  std::shared_ptr<const RelevanceModel> relevance;
  int iterations = 0;
  bool converged = false;
  std::vector<Eigen::VectorXd> theta_history;  // includes the initial vector
  LearnerConfig learner;
  ExpandMode mode = ExpandMode::sample;
  std::uint64_t seed = 0;
  int n_tokens = 0;
};

// Bulk E-step over the expanded log with a fixed (theta, mu) state.
std::vector<Posteriors> e_step(const EmbeddedLog& log, const PositionBiasVector& theta,
                               const RelevanceModel& model);

// theta_k = weighted average over records at position k of
// w + (1 - w) * P(E=1 | w=0). Throws when some position has no mass.
PositionBiasVector m_step_theta(const EmbeddedLog& log,
                                const std::vector<Posteriors>& posteriors);

// Fits the relevance learner. Sample mode draws r from P(R=1 | record) and
// fits binary labels; expectation mode fits the posterior mean with row
// weights. Zero-weight rows are dropped from the training set.
std::shared_ptr<RelevanceModel> m_step_relevance(const EmbeddedLog& log,
                                                 const std::vector<Posteriors>& posteriors,
                                                 const LearnerConfig& learner,
                                                 std::uint64_t seed);

// Algorithm: expand once, then alternate E-step and both M-steps until the
// theta change drops below tol or max_iter is hit. Non-convergence is a
// status flag, not an error.
EmState run_em(const InteractionLog& log, const AssignmentMatrix& assignment,
               const EmConfig& config);

}  // namespace posbias
