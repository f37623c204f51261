#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace surgskill::detail {

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x d
  double inertia = 0.0;
};

// k-means++ seeding followed by Lloyd iterations; best inertia over
// `restarts` runs drawn sequentially from one seeded stream.
KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts = 20, int max_iter = 300);

// Every restart, in draw order.
std::vector<KMeansResult> kmeans_restarts(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts = 20,
                                          int max_iter = 300);

}  // namespace surgskill::detail
