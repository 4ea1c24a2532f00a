#include "gammase/kmeans.h"

#include <limits>
#include <vector>

#include "gammase/common.h"

namespace gammase {

Eigen::MatrixXd KMeansColumns(const Eigen::MatrixXd& data, int k,
                              int max_iters) {
  const Eigen::Index n = data.cols();
  GS_CHECK_INPUT(k > 0, "k must be positive");
  GS_CHECK_INPUT(n >= k, "k-means needs at least k=", k, " columns, got ", n);
  GS_CHECK_INPUT(data.allFinite(), "k-means input contains non-finite values");

  Eigen::MatrixXd centroids(data.rows(), k);
  // Farthest-point seeding.  Strictly-greater comparisons make every tie
  // resolve to the lowest index.
  Eigen::Index best = 0;
  double best_norm = -1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double norm = data.col(j).squaredNorm();
    if (norm > best_norm) {
      best_norm = norm;
      best = j;
    }
  }
  centroids.col(0) = data.col(best);
  Eigen::VectorXd min_dist(n);
  for (Eigen::Index j = 0; j < n; ++j)
    min_dist[j] = (data.col(j) - centroids.col(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    double far_dist = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (min_dist[j] > far_dist) {
        far_dist = min_dist[j];
        far = j;
      }
    }
    centroids.col(c) = data.col(far);
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = (data.col(j) - centroids.col(c)).squaredNorm();
      if (d < min_dist[j]) min_dist[j] = d;
    }
  }

  std::vector<int> assign(n, -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      int arg = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = (data.col(j) - centroids.col(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          arg = c;
        }
      }
      if (arg != assign[j]) {
        assign[j] = arg;
        changed = true;
      }
    }
    if (!changed && it > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(data.rows(), k);
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      sums.col(assign[j]) += data.col(j);
      ++counts[assign[j]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.col(c) = sums.col(c) / static_cast<double>(counts[c]);
      } else {
        // Reseed an empty cluster with the point farthest from its
        // centroid (deterministic scan order).
        Eigen::Index far = 0;
        double far_dist = -1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          double d = (data.col(j) - centroids.col(assign[j])).squaredNorm();
          if (d > far_dist) {
            far_dist = d;
            far = j;
          }
        }
        centroids.col(c) = data.col(far);
      }
    }
  }
  return centroids;
}

}  // namespace gammase
