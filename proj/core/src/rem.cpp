#include "posbias/rem.hpp"

#include "posbias/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace posbias {

ExpandMode expand_mode_from_string(const std::string& name) {
  if (name == "sample") return ExpandMode::sample;
  if (name == "expectation") return ExpandMode::expectation;
  throw std::invalid_argument("unknown expand mode '" + name +
                              "' (expected sample or expectation)");
}

std::string to_string(ExpandMode mode) {
  return mode == ExpandMode::sample ? "sample" : "expectation";
}

LearnerKind learner_kind_from_string(const std::string& name) {
  if (name == "tabular") return LearnerKind::tabular;
  if (name == "gbdt") return LearnerKind::gbdt;
  throw std::invalid_argument("unknown learner '" + name + "' (expected tabular or gbdt)");
}

std::string to_string(LearnerKind kind) {
  return kind == LearnerKind::tabular ? "tabular" : "gbdt";
}

EmbeddedLog::EmbeddedLog(const InteractionLog& source, int n_tokens, ExpandMode mode)
    : source_(&source), n_tokens_(n_tokens), mode_(mode) {
  if (n_tokens < 1) throw std::invalid_argument("EmbeddedLog: n_tokens must be >= 1");
  const std::size_t total = source.size() * static_cast<std::size_t>(n_tokens);
  tokens_.reserve(total);
  rewards_.reserve(total);
  weights_.reserve(total);
}

EmbeddedLog expand_log(const InteractionLog& log, const AssignmentMatrix& assignment,
                       ExpandMode mode, std::uint64_t seed) {
  if (assignment.n_items() != log.n_items())
    throw std::invalid_argument("expand_log: assignment rows do not match catalog size");
  const int m = assignment.n_tokens();
  EmbeddedLog out(log, m, mode);
  std::mt19937_64 rng(mix_seed(seed, 0x657870616e64));  // "expand"
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (std::size_t j = 0; j < log.size(); ++j) {
    const int item = log.item(j);
    const double click = static_cast<double>(log.click(j));
    for (int e = 0; e < m; ++e) {
      const double p = assignment(item, e);
      if (mode == ExpandMode::sample) {
        // w ~ Bernoulli(p(e|i) * c); p >= 1 always fires, so the identity
        // assignment passes the click through exactly.
        const double rate = p * click;
        const double w = (rate >= 1.0 || coin(rng) < rate) ? 1.0 : 0.0;
        out.push(e, w, 1.0);
      } else {
        out.push(e, click, p);
      }
    }
  }
  return out;
}

Posteriors e_step_posteriors(double w, double theta_k, double mu_eu) {
  if (!(w == 0.0 || w == 1.0))
    throw std::invalid_argument("e_step_posteriors: w must be 0 or 1");
  if (!(theta_k >= 0.0 && theta_k <= 1.0))
    throw std::invalid_argument("e_step_posteriors: theta_k not in [0, 1]");
  if (!(mu_eu >= 0.0 && mu_eu <= 1.0))
    throw std::invalid_argument("e_step_posteriors: mu_eu not in [0, 1]");

  Posteriors post;
  if (w == 1.0) {
    post.e1r1 = 1.0;
    return post;
  }
  const double denom = 1.0 - theta_k * mu_eu;
  if (denom <= 0.0)
    throw std::invalid_argument(
        "e_step_posteriors: theta*mu == 1 with w == 0 (observed non-click impossible)");
  post.e1r0 = theta_k * (1.0 - mu_eu) / denom;
  post.e0r1 = (1.0 - theta_k) * mu_eu / denom;
  post.e0r0 = (1.0 - theta_k) * (1.0 - mu_eu) / denom;
  return post;
}

void RelevanceModel::predict_tokens(Eigen::Ref<const Eigen::RowVectorXd> context,
                                    std::span<double> out) const {
  for (std::size_t e = 0; e < out.size(); ++e)
    out[e] = predict(context, static_cast<int>(e));
}

TabularRelevanceModel::TabularRelevanceModel(Eigen::VectorXd mu_token)
    : mu_token_(std::move(mu_token)) {
  if (mu_token_.size() < 1)
    throw std::invalid_argument("TabularRelevanceModel: empty token table");
}

double TabularRelevanceModel::predict(Eigen::Ref<const Eigen::RowVectorXd>,
                                      int token) const {
  if (token < 0 || token >= mu_token_.size())
    throw std::invalid_argument("TabularRelevanceModel: token out of range");
  return std::clamp(mu_token_[token], kMuClampLo, kMuClampHi);
}

nlohmann::json TabularRelevanceModel::to_json() const {
  std::vector<double> values(mu_token_.data(), mu_token_.data() + mu_token_.size());
  return {{"kind", "tabular"}, {"token_means", values}};
}

GbdtRelevanceModel::GbdtRelevanceModel(gbdt::Model model, int context_dim, int n_tokens)
    : model_(std::move(model)), context_dim_(context_dim), n_tokens_(n_tokens) {}

double GbdtRelevanceModel::predict(Eigen::Ref<const Eigen::RowVectorXd> context,
                                   int token) const {
  if (context.size() != context_dim_)
    throw std::invalid_argument("GbdtRelevanceModel: context dimension mismatch");
  if (token < 0 || token >= n_tokens_)
    throw std::invalid_argument("GbdtRelevanceModel: token out of range");
  std::vector<double> features(static_cast<std::size_t>(context_dim_ + n_tokens_), 0.0);
  for (int j = 0; j < context_dim_; ++j) features[static_cast<std::size_t>(j)] = context[j];
  features[static_cast<std::size_t>(context_dim_ + token)] = 1.0;
  return model_.predict(features);
}

void GbdtRelevanceModel::predict_tokens(Eigen::Ref<const Eigen::RowVectorXd> context,
                                        std::span<double> out) const {
  if (context.size() != context_dim_)
    throw std::invalid_argument("GbdtRelevanceModel: context dimension mismatch");
  if (static_cast<int>(out.size()) > n_tokens_)
    throw std::invalid_argument("GbdtRelevanceModel: token out of range");
  std::vector<double> features(static_cast<std::size_t>(context_dim_ + n_tokens_), 0.0);
  for (int j = 0; j < context_dim_; ++j) features[static_cast<std::size_t>(j)] = context[j];
  for (std::size_t e = 0; e < out.size(); ++e) {
    features[static_cast<std::size_t>(context_dim_) + e] = 1.0;
    out[e] = model_.predict(features);
    features[static_cast<std::size_t>(context_dim_) + e] = 0.0;
  }
}

nlohmann::json GbdtRelevanceModel::to_json() const {
  return {{"kind", "gbdt"},
          {"context_dim", context_dim_},
          {"n_tokens", n_tokens_},
          {"model", model_.to_json()}};
}

nlohmann::json ConstantRelevanceModel::to_json() const {
  return {{"kind", "constant"}, {"value", value_}};
}

std::shared_ptr<RelevanceModel> relevance_model_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tabular") {
    const auto values = j.at("token_means").get<std::vector<double>>();
    Eigen::VectorXd mu(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
      mu[static_cast<Eigen::Index>(i)] = values[i];
    return std::make_shared<TabularRelevanceModel>(std::move(mu));
  }
  if (kind == "gbdt") {
    return std::make_shared<GbdtRelevanceModel>(gbdt::Model::from_json(j.at("model")),
                                                j.at("context_dim").get<int>(),
                                                j.at("n_tokens").get<int>());
  }
  if (kind == "constant")
    return std::make_shared<ConstantRelevanceModel>(j.at("value").get<double>());
  throw std::invalid_argument("relevance model: unknown kind '" + kind + "'");
}

void EmConfig::validate() const {
  if (max_iter < 1) throw std::invalid_argument("em config: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("em config: tol must be >= 0");
  learner.gbdt.validate();
  if (initial_theta) {
    for (Eigen::Index k = 0; k < initial_theta->size(); ++k)
      if (!((*initial_theta)[k] >= 0.0 && (*initial_theta)[k] <= 1.0))
        throw std::invalid_argument("em config: initial theta outside [0, 1]");
  }
}

std::vector<Posteriors> e_step(const EmbeddedLog& log, const PositionBiasVector& theta,
                               const RelevanceModel& model) {
  if (theta.size() != log.n_positions())
    throw std::invalid_argument("e_step: theta length does not match positions");
  const int m = log.n_tokens();
  std::vector<Posteriors> posteriors(log.size());

  // mu depends on (record, token) only through (context, token); contexts are
  // constant within a record, so predict once per pair.
  std::vector<double> mu_buf(static_cast<std::size_t>(m));
  std::size_t r = 0;
  const std::size_t n_records = log.size() / static_cast<std::size_t>(m);
  for (std::size_t rec = 0; rec < n_records; ++rec) {
    const auto ctx = log.source().context(rec);
    const int k = log.source().position(rec);
    model.predict_tokens(ctx, mu_buf);
    for (int e = 0; e < m; ++e)
      mu_buf[static_cast<std::size_t>(e)] =
          std::clamp(mu_buf[static_cast<std::size_t>(e)], kMuClampLo, kMuClampHi);
    for (int e = 0; e < m; ++e, ++r)
      posteriors[r] = e_step_posteriors(log.reward(r), theta[k],
                                        mu_buf[static_cast<std::size_t>(e)]);
  }
  return posteriors;
}

PositionBiasVector m_step_theta(const EmbeddedLog& log,
                                const std::vector<Posteriors>& posteriors) {
  if (posteriors.size() != log.size())
    throw std::invalid_argument("m_step_theta: posterior count mismatch");
  const int K = log.n_positions();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(K);
  for (std::size_t r = 0; r < log.size(); ++r) {
    const int k = log.position(r);
    const double w = log.reward(r);
    const double mass = log.weight(r);
    num[k] += mass * (w + (1.0 - w) * posteriors[r].examined());
    den[k] += mass;
  }
  Eigen::VectorXd theta(K);
  for (int k = 0; k < K; ++k) {
    if (den[k] <= 0.0)
      throw std::runtime_error("m_step_theta: no records at position " + std::to_string(k));
    theta[k] = num[k] / den[k];
  }
  return PositionBiasVector(std::move(theta));
}

std::shared_ptr<RelevanceModel> m_step_relevance(const EmbeddedLog& log,
                                                 const std::vector<Posteriors>& posteriors,
                                                 const LearnerConfig& learner,
                                                 std::uint64_t seed) {
  if (posteriors.size() != log.size())
    throw std::invalid_argument("m_step_relevance: posterior count mismatch");
  const int m = log.n_tokens();
  const int d = log.context_dim();
  const bool sampled = log.mode() == ExpandMode::sample;
  std::mt19937_64 rng(mix_seed(seed, 0x6d737465));  // "mste"
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  if (learner.kind == LearnerKind::tabular) {
    Eigen::VectorXd num = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(m);
    for (std::size_t r = 0; r < log.size(); ++r) {
      const double w = log.reward(r);
      const double mass = log.weight(r);
      const double p_r1 = w + (1.0 - w) * posteriors[r].e0r1;
      const int e = log.token(r);
      if (sampled) {
        const double rlab = (p_r1 >= 1.0 || coin(rng) < p_r1) ? 1.0 : 0.0;
        num[e] += rlab;
        den[e] += 1.0;
      } else {
        num[e] += mass * p_r1;
        den[e] += mass;
      }
    }
    Eigen::VectorXd mu(m);
    for (int e = 0; e < m; ++e) mu[e] = den[e] > 0.0 ? num[e] / den[e] : 0.5;
    return std::make_shared<TabularRelevanceModel>(std::move(mu));
  }

  // GBDT on context (+) one-hot token. Zero-weight rows carry no mass and are
  // dropped from the training set.
  const int n_features = d + m;
  std::vector<double> features;
  std::vector<double> labels;
  std::vector<double> weights;
  features.reserve(log.size() * static_cast<std::size_t>(n_features));
  labels.reserve(log.size());
  for (std::size_t r = 0; r < log.size(); ++r) {
    const double mass = log.weight(r);
    if (mass <= 0.0) continue;
    const double w = log.reward(r);
    const double p_r1 = w + (1.0 - w) * posteriors[r].e0r1;
    double label;
    if (sampled)
      label = (p_r1 >= 1.0 || coin(rng) < p_r1) ? 1.0 : 0.0;
    else
      label = p_r1;
    const auto ctx = log.source().context(log.record_of(r));
    for (int j = 0; j < d; ++j) features.push_back(ctx[j]);
    for (int e = 0; e < m; ++e) features.push_back(e == log.token(r) ? 1.0 : 0.0);
    labels.push_back(label);
    weights.push_back(mass);
  }
  if (labels.empty())
    throw std::runtime_error("m_step_relevance: expanded log carries no mass");
  gbdt::GbdtConfig cfg = learner.gbdt;
  cfg.seed = seed;
  gbdt::Model model = gbdt::fit(features, n_features, labels, weights, cfg);
  for (const double loss : model.train_logloss())
    if (!std::isfinite(loss))
      throw std::runtime_error("m_step_relevance: learner loss went non-finite");
  return std::make_shared<GbdtRelevanceModel>(std::move(model), d, m);
}

EmState run_em(const InteractionLog& log, const AssignmentMatrix& assignment,
               const EmConfig& config) {
  config.validate();
  if (log.empty()) throw std::invalid_argument("run_em: empty log");

  const int K = log.n_positions();
  Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(K, 0.5);
  if (config.initial_theta) {
    if (config.initial_theta->size() != K)
      throw std::invalid_argument("run_em: initial theta length mismatch");
    theta0 = *config.initial_theta;
  }

  EmState state;
  state.learner = config.learner;
  state.mode = config.mode;
  state.seed = config.seed;
  state.n_tokens = assignment.n_tokens();
  state.theta = PositionBiasVector(theta0);
  state.theta_history.push_back(theta0);

  EmbeddedLog embedded = expand_log(log, assignment, config.mode, config.seed);
  std::shared_ptr<RelevanceModel> model = std::make_shared<ConstantRelevanceModel>(0.5);

  for (int iter = 0; iter < config.max_iter; ++iter) {
    const std::vector<Posteriors> posteriors = e_step(embedded, state.theta, *model);
    model = m_step_relevance(embedded, posteriors, config.learner,
                             mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(iter)));
    PositionBiasVector next = m_step_theta(embedded, posteriors);
    const double delta = (next.values() - state.theta.values()).cwiseAbs().maxCoeff();
    state.theta = std::move(next);
    state.theta_history.push_back(state.theta.values());
    state.iterations = iter + 1;
    if (delta < config.tol) {
      state.converged = true;
      break;
    }
    if (config.resample_rewards_each_iter && config.mode == ExpandMode::sample)
      embedded = expand_log(log, assignment, config.mode,
                            mix_seed(config.seed, 2000 + static_cast<std::uint64_t>(iter)));
  }
  state.relevance = model;
  return state;
}

}  // namespace posbias
