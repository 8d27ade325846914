#include "posbias/click_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace posbias {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

InteractionLog::InteractionLog(int n_items, int n_positions, int context_dim)
    : n_items_(n_items), n_positions_(n_positions), context_dim_(context_dim) {
  require(n_items >= 1, "InteractionLog: n_items must be >= 1");
  require(n_positions >= 1, "InteractionLog: n_positions must be >= 1");
  require(context_dim >= 0, "InteractionLog: context_dim must be >= 0");
  contexts_.resize(0, context_dim);
}

void InteractionLog::reserve(std::size_t n) {
  items_.reserve(n);
  clicks_.reserve(n);
  positions_.reserve(n);
  if (capacity_ < n) {
    Eigen::MatrixXd grown(static_cast<Eigen::Index>(n), context_dim_);
    grown.topRows(contexts_.rows()) = contexts_;
    const auto used = static_cast<Eigen::Index>(items_.size());
    contexts_.conservativeResize(used, context_dim_);
    grown.topRows(used) = contexts_;
    contexts_.swap(grown);
    capacity_ = n;
  }
}

void InteractionLog::append(const Interaction& rec) {
  require(rec.context.size() == context_dim_,
          "InteractionLog: context dimension mismatch");
  require(rec.context.allFinite(), "InteractionLog: non-finite context feature");
  require(rec.item_id >= 0 && rec.item_id < n_items_,
          "InteractionLog: item_id out of range");
  require(rec.position >= 0 && rec.position < n_positions_,
          "InteractionLog: position out of range");
  require(rec.click == 0 || rec.click == 1, "InteractionLog: click must be 0 or 1");

  const std::size_t n = items_.size();
  if (n >= capacity_) {
    capacity_ = capacity_ == 0 ? 64 : capacity_ * 2;
    Eigen::MatrixXd grown(static_cast<Eigen::Index>(capacity_), context_dim_);
    grown.topRows(static_cast<Eigen::Index>(n)) =
        contexts_.topRows(static_cast<Eigen::Index>(n));
    contexts_.swap(grown);
  }
  contexts_.row(static_cast<Eigen::Index>(n)) = rec.context.transpose();
  items_.push_back(rec.item_id);
  clicks_.push_back(static_cast<std::uint8_t>(rec.click));
  positions_.push_back(rec.position);
}

PositionBiasVector::PositionBiasVector(Eigen::VectorXd theta) : theta_(std::move(theta)) {
  require(theta_.size() >= 1, "PositionBiasVector: need at least one position");
  for (Eigen::Index k = 0; k < theta_.size(); ++k) {
    require(std::isfinite(theta_[k]) && theta_[k] >= 0.0 && theta_[k] <= 1.0,
            "PositionBiasVector: theta_" + std::to_string(k) + " not in [0, 1]");
  }
}

RelevanceTable::RelevanceTable(Eigen::MatrixXd mu) : mu_(std::move(mu)) {
  require(mu_.rows() >= 1 && mu_.cols() >= 1, "RelevanceTable: empty table");
  require(mu_.allFinite() && (mu_.array() >= 0.0).all() && (mu_.array() <= 1.0).all(),
          "RelevanceTable: values must lie in [0, 1]");
}

LoggingPolicy::LoggingPolicy(Eigen::MatrixXd pi) : pi_(std::move(pi)) {
  require(pi_.rows() >= 1 && pi_.cols() >= 1, "LoggingPolicy: empty policy");
  require(pi_.allFinite() && (pi_.array() >= 0.0).all(),
          "LoggingPolicy: entries must be nonnegative");
  require(std::abs(pi_.sum() - 1.0) <= kNormTol,
          "LoggingPolicy: total mass must sum to 1");
}

std::vector<int> LoggingPolicy::pinned_positions() const {
  std::vector<int> pins(static_cast<std::size_t>(pi_.rows()));
  for (Eigen::Index i = 0; i < pi_.rows(); ++i) {
    Eigen::Index best = 0;
    pi_.row(i).maxCoeff(&best);
    pins[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return pins;
}

double click_probability(double mu_iu, double theta_k) {
  require(std::isfinite(mu_iu) && mu_iu >= 0.0 && mu_iu <= 1.0,
          "click_probability: mu_iu not in [0, 1]");
  require(std::isfinite(theta_k) && theta_k >= 0.0 && theta_k <= 1.0,
          "click_probability: theta_k not in [0, 1]");
  return mu_iu * theta_k;
}

double embedded_relevance(std::span<const double> assignment_row,
                          std::span<const double> mu_eu) {
  require(assignment_row.size() == mu_eu.size(),
          "embedded_relevance: length mismatch between assignment row and mu");
  require(!assignment_row.empty(), "embedded_relevance: empty vectors");
  double mass = 0.0;
  double out = 0.0;
  for (std::size_t j = 0; j < assignment_row.size(); ++j) {
    mass += assignment_row[j];
    out += assignment_row[j] * mu_eu[j];
  }
  require(std::abs(mass - 1.0) <= kNormTol,
          "embedded_relevance: assignment row does not sum to 1");
  return out;
}

}  // namespace posbias
