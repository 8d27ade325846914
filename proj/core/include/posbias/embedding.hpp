#pragma once
// Item embeddings (LSI, VAE, identity) and their conversion to the
// row-stochastic token assignment p(e|i) via softmax.

#include "posbias/click_model.hpp"
#include "posbias/svd.hpp"

#include <string>

namespace posbias {

enum class EmbedMethod { lsi, vae, identity };

EmbedMethod embed_method_from_string(const std::string& name);
std::string to_string(EmbedMethod method);

// Item x token real matrix produced by one of the embedding methods.
struct EmbeddingMatrix {
  Eigen::MatrixXd values;  // |I| x m
  EmbedMethod method = EmbedMethod::identity;

  int n_items() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

// Row-stochastic p(e|i): each row distributes one item's identity over the
// m embedding tokens.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  explicit AssignmentMatrix(Eigen::MatrixXd probs);

  int n_items() const { return static_cast<int>(probs_.rows()); }
  int n_tokens() const { return static_cast<int>(probs_.cols()); }
  double operator()(int item, int token) const { return probs_(item, token); }
  const Eigen::MatrixXd& values() const { return probs_; }

 private:
  Eigen::MatrixXd probs_;
};

// LSI: rank-m truncated SVD of the column-centered feature matrix. The
// embedding is U_m * Sigma_m; right vectors and column means are kept so the
// low-rank reconstruction can be formed.
struct LsiModel {
  EmbeddingMatrix embedding;
  Eigen::MatrixXd right_vectors;    // l x m
  Eigen::VectorXd column_means;     // l
  Eigen::VectorXd singular_values;  // full spectrum of the centered matrix
};

LsiModel lsi_embed(const Eigen::MatrixXd& item_features, int m);

// U_m Sigma_m V_m^T with column means added back; approximates the input of
// lsi_embed in the Frobenius sense (exactly, when m reaches the rank).
Eigen::MatrixXd lsi_reconstruct(const LsiModel& model);

// Row-wise softmax with the max-subtraction trick:
//   p(e_j | i) = exp(z_ij / tau) / sum_j' exp(z_ij' / tau).
// When standardize_rows is set (default) each embedding row is shifted and
// scaled to zero mean / unit variance first, which makes the result
// insensitive to the arbitrary overall scale of LSI/VAE outputs.
AssignmentMatrix to_assignment(const EmbeddingMatrix& embedding, double temperature = 1.0,
                               bool standardize_rows = true);

// Degenerate assignment where each item is its own token; reduces the
// embedded estimator to the vanilla one.
AssignmentMatrix identity_assignment(int n_items);

// Token-level logging policy pi(e, k) = sum_i p(e|i) * pi(i, k).
Eigen::MatrixXd embedded_policy(const AssignmentMatrix& assignment,
                                const LoggingPolicy& policy);

}  // namespace posbias
