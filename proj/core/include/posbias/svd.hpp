#pragma once
// Dense truncated SVD via cyclic Jacobi on the smaller Gram matrix.
// Deterministic and accurate enough for the catalog sizes this project
// targets (tens of items, hundreds of features).

#include <Eigen/Dense>

namespace posbias {

struct TruncatedSvd {
  Eigen::MatrixXd u;                // n x m
  Eigen::VectorXd singular_values;  // full spectrum, nonincreasing
  Eigen::MatrixXd v;                // l x m
  int rank = 0;                     // numerical rank of the input
};

// Symmetric eigendecomposition by cyclic Jacobi rotations; eigenvalues
// returned in nonincreasing order with matching eigenvector columns.
void jacobi_eigen_symmetric(const Eigen::MatrixXd& a, Eigen::VectorXd& eigenvalues,
                            Eigen::MatrixXd& eigenvectors);

// Rank-m truncated SVD of x. Throws std::invalid_argument when m exceeds the
// numerical rank; the message names the achievable rank.
TruncatedSvd truncated_svd(const Eigen::MatrixXd& x, int m);

}  // namespace posbias
