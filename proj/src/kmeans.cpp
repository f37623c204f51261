#include "kmeans.hpp"

#include <algorithm>
#include <limits>

#include "surgskill/rng.hpp"

namespace surgskill::detail {

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd C(k, X.cols());
  C.row(0) = X.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (X.rowwise() - C.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0) {
      double r = rng.uniform() * total, acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    C.row(c) = X.row(pick);
    d2 = d2.cwiseMin((X.rowwise() - C.row(c)).rowwise().squaredNorm());
  }
  return C;
}

KMeansResult lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd C, int max_iter) {
  const Eigen::Index n = X.rows();
  const int k = static_cast<int>(C.rows());
  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = (X.row(i) - C.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (r.labels[static_cast<std::size_t>(i)] != best) {
        r.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int l = r.labels[static_cast<std::size_t>(i)];
      sum.row(l) += X.row(i);
      ++cnt[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c)
      if (cnt[static_cast<std::size_t>(c)] > 0) C.row(c) = sum.row(c) / cnt[static_cast<std::size_t>(c)];
  }
  r.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) r.inertia += (X.row(i) - C.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  r.centers = std::move(C);
  return r;
}

}  // namespace

std::vector<KMeansResult> kmeans_restarts(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts,
                                          int max_iter) {
  k = std::max(1, std::min<int>(k, static_cast<int>(X.rows())));
  Rng rng(seed);
  std::vector<KMeansResult> out;
  for (int r = 0; r < std::max(1, restarts); ++r) out.push_back(lloyd(X, seed_plus_plus(X, k, rng), max_iter));
  return out;
}

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts, int max_iter) {
  auto all = kmeans_restarts(X, k, seed, restarts, max_iter);
  std::size_t best = 0;
  for (std::size_t r = 1; r < all.size(); ++r)
    if (all[r].inertia < all[best].inertia) best = r;
  return std::move(all[best]);
}

}  // namespace surgskill::detail
