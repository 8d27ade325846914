#include "posbias/vae.hpp"

#include "posbias/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace posbias {

namespace {

struct Layers {
  Eigen::MatrixXd w1, wm, wv, w2, w3;
  Eigen::RowVectorXd b1, bm, bv, b2, b3;

  Layers(int l, int h, int m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto init = [&](Eigen::Index rows, Eigen::Index cols) {
      Eigen::MatrixXd w(rows, cols);
      const double scale = std::sqrt(2.0 / static_cast<double>(rows + cols));
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = scale * gauss(rng);
      return w;
    };
    w1 = init(l, h);
    wm = init(h, m);
    wv = init(h, m);
    w2 = init(m, h);
    w3 = init(h, l);
    b1 = Eigen::RowVectorXd::Zero(h);
    bm = Eigen::RowVectorXd::Zero(m);
    bv = Eigen::RowVectorXd::Zero(m);
    b2 = Eigen::RowVectorXd::Zero(h);
    b3 = Eigen::RowVectorXd::Zero(l);
  }
};

}  // namespace

void VaeConfig::validate() const {
  if (hidden < 1) throw std::invalid_argument("vae config: hidden must be >= 1");
  if (epochs < 1) throw std::invalid_argument("vae config: epochs must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("vae config: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("vae config: momentum must lie in [0, 1)");
}

EmbeddingMatrix vae_embed(const Eigen::MatrixXd& item_features, int m,
                          const VaeConfig& config, VaeTrainLog* train_log) {
  config.validate();
  if (!item_features.allFinite())
    throw std::invalid_argument("vae_embed: non-finite feature entries");
  const Eigen::Index n = item_features.rows(), l = item_features.cols();
  if (m < 1 || m > l)
    throw std::invalid_argument("vae_embed: m must lie in [1, n_features]");

  // Column standardization keeps the Gaussian likelihood scale-free.
  Eigen::RowVectorXd mean = item_features.colwise().mean();
  Eigen::RowVectorXd sd =
      ((item_features.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < l; ++j)
    if (sd[j] < 1e-12) sd[j] = 1.0;
  Eigen::MatrixXd x = (item_features.rowwise() - mean).array().rowwise() / sd.array();

  std::mt19937_64 rng(mix_seed(config.seed, 0x766165));  // "vae"
  std::normal_distribution<double> gauss(0.0, 1.0);
  Layers p(static_cast<int>(l), config.hidden, m, rng);
  Layers vel(static_cast<int>(l), config.hidden, m, rng);
  vel.w1.setZero(); vel.wm.setZero(); vel.wv.setZero(); vel.w2.setZero(); vel.w3.setZero();
  vel.b1.setZero(); vel.bm.setZero(); vel.bv.setZero(); vel.b2.setZero(); vel.b3.setZero();

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd eps(n, m);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // forward
    Eigen::MatrixXd h1 = ((x * p.w1).rowwise() + p.b1).array().tanh();
    Eigen::MatrixXd mu = (h1 * p.wm).rowwise() + p.bm;
    Eigen::MatrixXd logvar =
        (((h1 * p.wv).rowwise() + p.bv).array().min(8.0).max(-8.0)).matrix();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) eps(i, j) = gauss(rng);
    Eigen::MatrixXd std_dev = (0.5 * logvar.array()).exp().matrix();
    Eigen::MatrixXd z = mu + std_dev.cwiseProduct(eps);
    Eigen::MatrixXd h2 = ((z * p.w2).rowwise() + p.b2).array().tanh();
    Eigen::MatrixXd xhat = (h2 * p.w3).rowwise() + p.b3;

    const double rec = 0.5 * (xhat - x).squaredNorm() * inv_n;
    const double kl =
        0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum() *
        inv_n;
    const double loss = rec + kl;
    if (!std::isfinite(loss))
      throw std::runtime_error("vae_embed: non-finite loss at epoch " +
                               std::to_string(epoch) + " (reconstruction=" +
                               std::to_string(rec) + ", kl=" + std::to_string(kl) +
                               "); lower the learning rate");
    if (train_log) {
      train_log->loss.push_back(loss);
      train_log->kl.push_back(kl);
    }

    // backward
    Eigen::MatrixXd d_xhat = (xhat - x) * inv_n;
    Eigen::MatrixXd g_w3 = h2.transpose() * d_xhat;
    Eigen::RowVectorXd g_b3 = d_xhat.colwise().sum();
    Eigen::MatrixXd d_h2 =
        (d_xhat * p.w3.transpose()).cwiseProduct((1.0 - h2.array().square()).matrix());
    Eigen::MatrixXd g_w2 = z.transpose() * d_h2;
    Eigen::RowVectorXd g_b2 = d_h2.colwise().sum();
    Eigen::MatrixXd d_z = d_h2 * p.w2.transpose();
    Eigen::MatrixXd d_mu = d_z + mu * inv_n;
    Eigen::MatrixXd d_logvar = (d_z.cwiseProduct(eps).cwiseProduct(std_dev) * 0.5) +
                               (0.5 * (logvar.array().exp() - 1.0) * inv_n).matrix();
    Eigen::MatrixXd g_wm = h1.transpose() * d_mu;
    Eigen::RowVectorXd g_bm = d_mu.colwise().sum();
    Eigen::MatrixXd g_wv = h1.transpose() * d_logvar;
    Eigen::RowVectorXd g_bv = d_logvar.colwise().sum();
    Eigen::MatrixXd d_h1 = ((d_mu * p.wm.transpose()) + (d_logvar * p.wv.transpose()))
                               .cwiseProduct((1.0 - h1.array().square()).matrix());
    Eigen::MatrixXd g_w1 = x.transpose() * d_h1;
    Eigen::RowVectorXd g_b1 = d_h1.colwise().sum();

    auto step = [&](auto& param, auto& velocity, const auto& grad) {
      velocity = config.momentum * velocity - config.learning_rate * grad;
      param += velocity;
    };
    step(p.w1, vel.w1, g_w1);
    step(p.b1, vel.b1, g_b1);
    step(p.wm, vel.wm, g_wm);
    step(p.bm, vel.bm, g_bm);
    step(p.wv, vel.wv, g_wv);
    step(p.bv, vel.bv, g_bv);
    step(p.w2, vel.w2, g_w2);
    step(p.b2, vel.b2, g_b2);
    step(p.w3, vel.w3, g_w3);
    step(p.b3, vel.b3, g_b3);
  }

  EmbeddingMatrix out;
  out.method = EmbedMethod::vae;
  Eigen::MatrixXd h1 = ((x * p.w1).rowwise() + p.b1).array().tanh();
  out.values = (h1 * p.wm).rowwise() + p.bm;
  return out;
}

}  // namespace posbias
