#pragma once
// Small variational autoencoder for tabular item features. One hidden layer
// on each side, Gaussian likelihood, KL to a standard normal, trained by
// full-batch gradient descent with momentum. The encoder means are the item
// embedding.

#include "posbias/embedding.hpp"

#include <cstdint>
#include <vector>

namespace posbias {

struct VaeConfig {
  int hidden = 64;
  int epochs = 500;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-epoch training diagnostics. loss = reconstruction + kl (negative ELBO
// up to constants), averaged over items.
struct VaeTrainLog {
  std::vector<double> loss;
  std::vector<double> kl;
};

// Trains the VAE on column-standardized features and returns the encoder
// mean vectors. Deterministic in config.seed; throws std::runtime_error with
// epoch diagnostics if the loss goes non-finite.
EmbeddingMatrix vae_embed(const Eigen::MatrixXd& item_features, int m,
                          const VaeConfig& config, VaeTrainLog* train_log = nullptr);

}  // namespace posbias
