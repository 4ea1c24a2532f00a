#ifndef GAMMASE_KMEANS_H_
#define GAMMASE_KMEANS_H_

#include <Eigen/Dense>

namespace gammase {

// Lloyd's algorithm over the columns of data (dim x n), returning dim x k
// centroids.  Seeding is deterministic and value-based (largest-norm
// column first, then farthest-point, ties to the lowest index), so equal
// inputs give equal centroids and duplicating every column changes
// nothing.  Throws InputError if n < k.
Eigen::MatrixXd KMeansColumns(const Eigen::MatrixXd& data, int k,
                              int max_iters = 100);

}  // namespace gammase

#endif  // GAMMASE_KMEANS_H_
