#pragma once

#include <Eigen/Core>
#include <vector>

namespace surgskill {

using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct FisherModel {
  std::vector<int> classes;       // distinct tags, ascending
  Eigen::MatrixX2d means;         // one row per class
  Eigen::Matrix2d within;         // pooled within-class covariance incl. regularization
  double lambda = 0.0;
  Eigen::MatrixXd basis;          // 2 x r, W^T * within * W = I
  Eigen::VectorXd eigenvalues;    // r discriminant ratios, descending
  Eigen::VectorXd priors;

  // Euclidean unit vector of discriminant i, sign fixed so the largest
  // component is positive.
  Eigen::Vector2d direction(int i) const;
  int predict(const Eigen::Vector2d& x) const;
  std::vector<int> predict(const Points2& pts) const;
};

struct ClassError {
  int tag = 0;
  std::size_t n = 0;
  std::size_t errors = 0;
};

struct SpatialOrganizationScore {
  double ratio = 0.0;
  std::size_t misclassified = 0;
  std::size_t n_points = 0;
  std::vector<ClassError> per_mode;
};

struct SubjectPoints {
  Points2 points;
  std::vector<int> tags;
};

struct LooScore {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> ratios;
};

FisherModel fit_fisher(const Points2& points, const std::vector<int>& tags);
SpatialOrganizationScore spatial_organization(const Points2& points, const std::vector<int>& tags);
LooScore loo_spatial_organization(const std::vector<SubjectPoints>& subjects);

}  // namespace surgskill
