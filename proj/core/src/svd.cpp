#include "posbias/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace posbias {

void jacobi_eigen_symmetric(const Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues,
                            Eigen::MatrixXd& eigenvectors) {
  if (a.rows() != a.cols()) throw std::invalid_argument("jacobi: matrix not square");
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd d = a;
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index r = p + 1; r < n; ++r) off += d(p, r) * d(p, r);
    if (off <= 1e-30 * std::max(1.0, d.diagonal().cwiseAbs().maxCoeff())) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index r = p + 1; r < n; ++r) {
        const double apr = d(p, r);
        if (std::abs(apr) <= 1e-300) continue;
        const double app = d(p, p), arr = d(r, r);
        const double tau = (arr - app) / (2.0 * apr);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double djp = d(j, p), djr = d(j, r);
          d(j, p) = c * djp - s * djr;
          d(j, r) = s * djp + c * djr;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          const double dpj = d(p, j), drj = d(r, j);
          d(p, j) = c * dpj - s * drj;
          d(r, j) = s * dpj + c * drj;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          const double qjp = q(j, p), qjr = q(j, r);
          q(j, p) = c * qjp - s * qjr;
          q(j, r) = s * qjp + c * qjr;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return d(i, i) > d(j, j); });
  eigenvalues.resize(n);
  eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    eigenvalues[j] = d(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    eigenvectors.col(j) = q.col(order[static_cast<std::size_t>(j)]);
  }
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& x, int m) {
  if (x.rows() < 1 || x.cols() < 1) throw std::invalid_argument("svd: empty matrix");
  if (!x.allFinite()) throw std::invalid_argument("svd: non-finite entries");
  const Eigen::Index n = x.rows(), l = x.cols();
  if (m < 1 || m > std::min(n, l))
    throw std::invalid_argument("svd: m must lie in [1, min(rows, cols)]");

  // Eigendecompose the smaller Gram matrix, then recover the other factor.
  const bool rows_small = n <= l;
  Eigen::MatrixXd gram = rows_small ? Eigen::MatrixXd(x * x.transpose())
                                    : Eigen::MatrixXd(x.transpose() * x);
  Eigen::VectorXd lambda;
  Eigen::MatrixXd w;
  jacobi_eigen_symmetric(gram, lambda, w);

  const Eigen::Index p = gram.rows();
  Eigen::VectorXd sigma(p);
  for (Eigen::Index j = 0; j < p; ++j) sigma[j] = std::sqrt(std::max(lambda[j], 0.0));

  const double cutoff = sigma.size() > 0 ? sigma[0] * 1e-12 : 0.0;
  int rank = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    if (sigma[j] > cutoff && sigma[j] > 0.0) ++rank;

  if (m > rank)
    throw std::invalid_argument("svd: requested rank " + std::to_string(m) +
                                " exceeds achievable rank " + std::to_string(rank));

  TruncatedSvd out;
  out.singular_values = sigma;
  out.rank = rank;
  out.u.resize(n, m);
  out.v.resize(l, m);
  if (rows_small) {
    out.u = w.leftCols(m);
    for (int j = 0; j < m; ++j) out.v.col(j) = x.transpose() * out.u.col(j) / sigma[j];
  } else {
    out.v = w.leftCols(m);
    for (int j = 0; j < m; ++j) out.u.col(j) = x * out.v.col(j) / sigma[j];
  }
  return out;
}

}  // namespace posbias
