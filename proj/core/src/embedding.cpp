#include "posbias/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace posbias {

EmbedMethod embed_method_from_string(const std::string& name) {
  if (name == "lsi") return EmbedMethod::lsi;
  if (name == "vae") return EmbedMethod::vae;
  if (name == "identity") return EmbedMethod::identity;
  throw std::invalid_argument("unknown embedding method '" + name +
                              "' (expected lsi, vae or identity)");
}

std::string to_string(EmbedMethod method) {
  switch (method) {
    case EmbedMethod::lsi: return "lsi";
    case EmbedMethod::vae: return "vae";
    case EmbedMethod::identity: return "identity";
  }
  return "identity";
}

AssignmentMatrix::AssignmentMatrix(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.rows() < 1 || probs_.cols() < 1)
    throw std::invalid_argument("AssignmentMatrix: empty matrix");
  if (!probs_.allFinite() || (probs_.array() < 0.0).any() || (probs_.array() > 1.0).any())
    throw std::invalid_argument("AssignmentMatrix: entries must lie in [0, 1]");
  for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
    if (std::abs(probs_.row(i).sum() - 1.0) > kNormTol)
      throw std::invalid_argument("AssignmentMatrix: row " + std::to_string(i) +
                                  " does not sum to 1");
  }
}

LsiModel lsi_embed(const Eigen::MatrixXd& item_features, int m) {
  if (!item_features.allFinite())
    throw std::invalid_argument("lsi_embed: non-finite feature entries");
  const Eigen::Index n = item_features.rows(), l = item_features.cols();
  if (m < 1 || m > std::min(n, l))
    throw std::invalid_argument("lsi_embed: m must lie in [1, min(n_items, n_features)]");

  LsiModel model;
  model.column_means = item_features.colwise().mean();
  const Eigen::MatrixXd centered = item_features.rowwise() - model.column_means.transpose();

  const TruncatedSvd svd = truncated_svd(centered, m);
  model.right_vectors = svd.v;
  model.singular_values = svd.singular_values;
  model.embedding.method = EmbedMethod::lsi;
  model.embedding.values = svd.u * svd.singular_values.head(m).asDiagonal();
  return model;
}

Eigen::MatrixXd lsi_reconstruct(const LsiModel& model) {
  Eigen::MatrixXd rec = model.embedding.values * model.right_vectors.transpose();
  rec.rowwise() += model.column_means.transpose();
  return rec;
}

AssignmentMatrix to_assignment(const EmbeddingMatrix& embedding, double temperature,
                               bool standardize_rows) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("to_assignment: temperature must be positive");
  if (!embedding.values.allFinite())
    throw std::invalid_argument("to_assignment: non-finite embedding entries");

  Eigen::MatrixXd z = embedding.values;
  if (standardize_rows) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double mean = z.row(i).mean();
      const double var = (z.row(i).array() - mean).square().mean();
      const double sd = std::sqrt(var);
      if (sd > 1e-12)
        z.row(i) = (z.row(i).array() - mean) / sd;
      else
        z.row(i).setZero();  // constant row: softmax falls back to uniform
    }
  }
  Eigen::MatrixXd probs(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::ArrayXd row = z.row(i).array() / temperature;
    const Eigen::ArrayXd shifted = row - row.maxCoeff();
    const Eigen::ArrayXd ex = shifted.exp();
    probs.row(i) = (ex / ex.sum()).matrix();
  }
  return AssignmentMatrix(std::move(probs));
}

AssignmentMatrix identity_assignment(int n_items) {
  if (n_items < 1) throw std::invalid_argument("identity_assignment: n_items must be >= 1");
  return AssignmentMatrix(Eigen::MatrixXd::Identity(n_items, n_items));
}

Eigen::MatrixXd embedded_policy(const AssignmentMatrix& assignment,
                                const LoggingPolicy& policy) {
  if (assignment.n_items() != policy.n_items())
    throw std::invalid_argument("embedded_policy: item count mismatch");
  return assignment.values().transpose() * policy.values();
}

}  // namespace posbias
