#include "surgskill/planning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "surgskill/error.hpp"

namespace surgskill {

FisherModel fit_fisher(const Points2& X, const std::vector<int>& tags) {
  if (static_cast<std::size_t>(X.rows()) != tags.size())
    throw AnalysisError(ErrorKind::InsufficientClasses, "points and tags differ in length");
  FisherModel f;
  f.classes = tags;
  std::sort(f.classes.begin(), f.classes.end());
  f.classes.erase(std::unique(f.classes.begin(), f.classes.end()), f.classes.end());
  const auto C = static_cast<Eigen::Index>(f.classes.size());
  if (C < 2) throw AnalysisError(ErrorKind::InsufficientClasses, "need at least 2 distinct tags");

  const Eigen::Index N = X.rows();
  std::vector<Eigen::Index> cls(static_cast<std::size_t>(N));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(C);
  f.means = Eigen::MatrixX2d::Zero(C, 2);
  for (Eigen::Index i = 0; i < N; ++i) {
    auto c = std::lower_bound(f.classes.begin(), f.classes.end(), tags[static_cast<std::size_t>(i)]) - f.classes.begin();
    cls[static_cast<std::size_t>(i)] = c;
    f.means.row(c) += X.row(i);
    count[c] += 1;
  }
  for (Eigen::Index c = 0; c < C; ++c) {
    if (count[c] < 3)
      throw AnalysisError(ErrorKind::InsufficientClasses, "tag " + std::to_string(f.classes[static_cast<std::size_t>(c)]) +
                                                              " has fewer than 3 points");
    f.means.row(c) /= count[c];
  }
  f.priors = count / static_cast<double>(N);

  Eigen::Matrix2d Sw = Eigen::Matrix2d::Zero();
  for (Eigen::Index i = 0; i < N; ++i) {
    Eigen::RowVector2d d = X.row(i) - f.means.row(cls[static_cast<std::size_t>(i)]);
    Sw += d.transpose() * d;
  }
  Sw /= static_cast<double>(N - C);
  const double tr = Sw.trace();
  if (!(tr > 0)) throw AnalysisError(ErrorKind::SingularScatter, "within-class scatter is zero");
  f.lambda = 1e-6 * tr / 2.0;
  f.within = Sw + f.lambda * Eigen::Matrix2d::Identity();

  Eigen::RowVector2d mu = X.colwise().mean();
  Eigen::Matrix2d Sb = Eigen::Matrix2d::Zero();
  for (Eigen::Index c = 0; c < C; ++c) {
    Eigen::RowVector2d d = f.means.row(c) - mu;
    Sb += count[c] * d.transpose() * d;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> ges(Sb, f.within);
  const Eigen::Index r = std::min<Eigen::Index>(C - 1, 2);
  f.basis.resize(2, r);
  f.eigenvalues.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    f.basis.col(i) = ges.eigenvectors().col(1 - i);
    f.eigenvalues[i] = ges.eigenvalues()[1 - i];
  }
  return f;
}

Eigen::Vector2d FisherModel::direction(int i) const {
  Eigen::Vector2d d = basis.col(i).normalized();
  Eigen::Index j;
  d.cwiseAbs().maxCoeff(&j);
  return d[j] < 0 ? Eigen::Vector2d(-d) : d;
}

int FisherModel::predict(const Eigen::Vector2d& x) const {
  Eigen::VectorXd z = basis.transpose() * x;
  int best = 0;
  double bs = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    Eigen::VectorXd zc = basis.transpose() * means.row(c).transpose();
    double s = -0.5 * (z - zc).squaredNorm() + std::log(priors[c]);
    if (s > bs) {
      bs = s;
      best = static_cast<int>(c);
    }
  }
  return classes[static_cast<std::size_t>(best)];
}

std::vector<int> FisherModel::predict(const Points2& pts) const {
  std::vector<int> out(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(Eigen::Vector2d(pts.row(i).transpose()));
  return out;
}

SpatialOrganizationScore spatial_organization(const Points2& points, const std::vector<int>& tags) {
  FisherModel f = fit_fisher(points, tags);
  auto pred = f.predict(points);
  SpatialOrganizationScore s;
  s.n_points = tags.size();
  for (int c : f.classes) s.per_mode.push_back({c, 0, 0});
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto c = std::lower_bound(f.classes.begin(), f.classes.end(), tags[i]) - f.classes.begin();
    auto& e = s.per_mode[static_cast<std::size_t>(c)];
    ++e.n;
    if (pred[i] != tags[i]) {
      ++e.errors;
      ++s.misclassified;
    }
  }
  s.ratio = s.n_points ? static_cast<double>(s.misclassified) / static_cast<double>(s.n_points) : 0.0;
  return s;
}

LooScore loo_spatial_organization(const std::vector<SubjectPoints>& subjects) {
  if (subjects.size() < 2)
    throw AnalysisError(ErrorKind::InsufficientSubjects, "leave-one-out needs at least 2 subjects");
  LooScore out;
  for (std::size_t held = 0; held < subjects.size(); ++held) {
    Eigen::Index n = 0;
    for (std::size_t s = 0; s < subjects.size(); ++s)
      if (s != held) n += subjects[s].points.rows();
    Points2 pts(n, 2);
    std::vector<int> tags;
    tags.reserve(static_cast<std::size_t>(n));
    Eigen::Index row = 0;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      if (s == held) continue;
      pts.middleRows(row, subjects[s].points.rows()) = subjects[s].points;
      row += subjects[s].points.rows();
      tags.insert(tags.end(), subjects[s].tags.begin(), subjects[s].tags.end());
    }
    out.ratios.push_back(spatial_organization(pts, tags).ratio);
  }
  const double k = static_cast<double>(out.ratios.size());
  out.mean = std::accumulate(out.ratios.begin(), out.ratios.end(), 0.0) / k;
  double var = 0.0;
  for (double r : out.ratios) var += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(var / k);
  return out;
}

}  // namespace surgskill
