#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <numeric>

#include "surgskill/error.hpp"
#include "surgskill/planning.hpp"
#include "surgskill/rng.hpp"

using namespace surgskill;

namespace {

struct Cloud {
  Points2 X;
  std::vector<int> tags;
};

// n points per entry of centers, isotropic spread s
Cloud blobs(const std::vector<Eigen::Vector2d>& centers, int n, double s, std::uint64_t seed) {
  Rng rng(seed);
  Cloud c;
  c.X.resize(static_cast<Eigen::Index>(centers.size()) * n, 2);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < centers.size(); ++k)
    for (int i = 0; i < n; ++i) {
      double a = rng.normal(), b = rng.normal();
      c.X.row(row++) = (centers[k] + s * Eigen::Vector2d(a, b)).transpose();
      c.tags.push_back(static_cast<int>(k) * 10 + 1);
    }
  return c;
}

// full Gaussian log density with the pooled covariance, normalizer included
std::vector<int> gaussian_oracle(const Points2& X, const std::vector<int>& tags) {
  std::vector<int> cls = tags;
  std::sort(cls.begin(), cls.end());
  cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
  const std::size_t C = cls.size();
  std::vector<Eigen::Vector2d> mu(C, Eigen::Vector2d::Zero());
  std::vector<double> n(C, 0.0);
  auto idx = [&](int t) { return static_cast<std::size_t>(std::find(cls.begin(), cls.end(), t) - cls.begin()); };
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto c = idx(tags[static_cast<std::size_t>(i)]);
    mu[c] += X.row(i).transpose();
    n[c] += 1;
  }
  for (std::size_t c = 0; c < C; ++c) mu[c] /= n[c];
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Vector2d d = X.row(i).transpose() - mu[idx(tags[static_cast<std::size_t>(i)])];
    S += d * d.transpose();
  }
  S /= static_cast<double>(X.rows()) - static_cast<double>(C);
  S += (1e-6 * S.trace() / 2.0) * Eigen::Matrix2d::Identity();
  Eigen::LLT<Eigen::Matrix2d> llt(S);
  const double logdet = 2.0 * std::log(llt.matrixL().toDenseMatrix().diagonal().prod());
  std::vector<int> out;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double best = -INFINITY;
    int arg = 0;
    for (std::size_t c = 0; c < C; ++c) {
      Eigen::Vector2d d = X.row(i).transpose() - mu[c];
      double ll = -0.5 * d.dot(llt.solve(d)) - 0.5 * logdet - std::log(2 * std::numbers::pi) +
                  std::log(n[c] / static_cast<double>(X.rows()));
      if (ll > best) {
        best = ll;
        arg = cls[c];
      }
    }
    out.push_back(arg);
  }
  return out;
}

}  // namespace

TEST_CASE("axis-aligned separation gives the x direction") {
  // unit rings of 16 points have exactly isotropic spread
  Cloud c;
  c.X.resize(32, 2);
  for (int k = 0; k < 32; ++k) {
    const double th = 2 * std::numbers::pi * (k % 16) / 16.0;
    c.X.row(k) << (k < 16 ? 0.0 : 100.0) + std::cos(th), std::sin(th);
    c.tags.push_back(k < 16 ? 1 : 11);
  }
  auto f = fit_fisher(c.X, c.tags);
  REQUIRE(f.basis.cols() == 1);
  Eigen::Vector2d d = f.direction(0);
  CHECK(std::abs(d.x() - 1.0) <= 1e-6);
  CHECK(std::abs(d.y()) <= 1e-6);
  CHECK(f.classes == std::vector<int>{1, 11});
  // unit norm under the within-class metric
  CHECK(std::abs((f.basis.col(0).transpose() * f.within * f.basis.col(0))(0, 0) - 1.0) <= 1e-9);
}

TEST_CASE("basis is orthonormal under the within-class metric") {
  auto c = blobs({{0, 0}, {30, 5}, {-10, 40}}, 80, 6.0, 2);
  auto f = fit_fisher(c.X, c.tags);
  REQUIRE(f.basis.cols() == 2);
  Eigen::Matrix2d G = f.basis.transpose() * f.within * f.basis;
  CHECK((G - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(f.eigenvalues[0] >= f.eigenvalues[1]);
  CHECK(std::abs(f.priors.sum() - 1.0) <= 1e-12);
}

TEST_CASE("identical class distributions are at chance") {
  Rng rng(3);
  const Eigen::Index N = 3000;
  Points2 X(N, 2);
  std::vector<int> tags;
  for (Eigen::Index i = 0; i < N; ++i) {
    double a = rng.normal(), b = rng.normal();
    X.row(i) << a, b;
    tags.push_back(static_cast<int>(i % 2));
  }
  auto s = spatial_organization(X, tags);
  CHECK(s.ratio > 0.4);
  CHECK(s.ratio <= 0.6);
}

TEST_CASE("predictions match a brute-force Gaussian classifier") {
  Rng rng(11);
  for (int inst = 0; inst < 40; ++inst) {
    const auto N = static_cast<Eigen::Index>(20 + rng.below(181));
    Points2 X(N, 2);
    std::vector<int> tags;
    const Eigen::Vector2d centers[3] = {{rng.normal() * 15, rng.normal() * 15},
                                        {rng.normal() * 15, rng.normal() * 15},
                                        {rng.normal() * 15, rng.normal() * 15}};
    for (Eigen::Index i = 0; i < N; ++i) {
      // unbalanced classes, first few rows guarantee >= 3 points each
      int c = i < 9 ? static_cast<int>(i % 3) : (rng.uniform() < 0.5 ? 0 : 1 + static_cast<int>(rng.below(2)));
      double a = rng.normal() * 4, b = rng.normal() * 9;
      X.row(i) << centers[c].x() + a + 0.5 * b, centers[c].y() + b;
      tags.push_back(c + 5);
    }
    auto f = fit_fisher(X, tags);
    CHECK(f.predict(X) == gaussian_oracle(X, tags));
  }
}

TEST_CASE("separated clusters score zero") {
  auto c = blobs({{-200, 0}, {200, 0}}, 100, 2.0, 4);
  auto s = spatial_organization(c.X, c.tags);
  CHECK(s.ratio == 0.0);
  CHECK(s.n_points == 200);
  REQUIRE(s.per_mode.size() == 2);
  CHECK(s.per_mode[0].n == 100);
  CHECK(s.per_mode[1].errors == 0);
}

TEST_CASE("shuffled tags on one cloud sit near two thirds") {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const Eigen::Index N = 600;
    Points2 X(N, 2);
    std::vector<int> tags;
    for (Eigen::Index i = 0; i < N; ++i) {
      double a = rng.normal(), b = rng.normal();
      X.row(i) << 10 * a, 10 * b;
      tags.push_back(static_cast<int>(i % 3));
    }
    for (std::size_t i = tags.size() - 1; i > 0; --i) std::swap(tags[i], tags[rng.below(i + 1)]);
    auto s = spatial_organization(X, tags);
    CHECK(s.ratio >= 0.0);
    CHECK(s.ratio <= 1.0);
    std::size_t errs = 0;
    for (const auto& e : s.per_mode) errs += e.errors;
    CHECK(errs == s.misclassified);
    CHECK(s.ratio == static_cast<double>(s.misclassified) / static_cast<double>(s.n_points));
    sum += s.ratio;
  }
  // resubstitution on 600 points fits a little noise, so allow a few percent below chance
  CHECK(sum / 10 == doctest::Approx(2.0 / 3.0).epsilon(0.08));
}

TEST_CASE("leave-one-out on identical subjects") {
  auto c = blobs({{0, 0}, {12, 3}, {4, 15}}, 40, 5.0, 6);
  std::vector<SubjectPoints> subj(4, SubjectPoints{c.X, c.tags});
  auto loo = loo_spatial_organization(subj);
  REQUIRE(loo.ratios.size() == 4);
  CHECK(loo.std == 0.0);
  CHECK(loo.mean == doctest::Approx(spatial_organization(c.X, c.tags).ratio).epsilon(1e-12));
}

TEST_CASE("leave-one-out with two subjects is each subject on its own") {
  auto a = blobs({{0, 0}, {8, 0}}, 30, 4.0, 7), b = blobs({{0, 0}, {3, 6}}, 25, 4.0, 8);
  std::vector<SubjectPoints> subj{{a.X, a.tags}, {b.X, b.tags}};
  auto loo = loo_spatial_organization(subj);
  REQUIRE(loo.ratios.size() == 2);
  const double ra = spatial_organization(b.X, b.tags).ratio, rb = spatial_organization(a.X, a.tags).ratio;
  CHECK(loo.ratios[0] == ra);
  CHECK(loo.ratios[1] == rb);
  CHECK(loo.mean == doctest::Approx((ra + rb) / 2));
  CHECK(loo.std == doctest::Approx(std::abs(ra - rb) / 2));
}

TEST_CASE("rigid motion and point order leave the ratio unchanged") {
  auto c = blobs({{0, 0}, {6, 2}, {2, 7}}, 60, 4.0, 9);
  auto base = spatial_organization(c.X, c.tags);
  auto pred = fit_fisher(c.X, c.tags).predict(c.X);

  const double th = 0.7;
  Eigen::Matrix2d R;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Points2 Y = (c.X * R.transpose()).rowwise() + Eigen::RowVector2d(250.0, -40.0);
  CHECK(fit_fisher(Y, c.tags).predict(Y) == pred);
  CHECK(spatial_organization(Y, c.tags).ratio == base.ratio);

  Rng rng(10);
  std::vector<std::size_t> perm(c.tags.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Points2 P(c.X.rows(), 2);
  std::vector<int> pt;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    P.row(static_cast<Eigen::Index>(i)) = c.X.row(static_cast<Eigen::Index>(perm[i]));
    pt.push_back(c.tags[perm[i]]);
  }
  CHECK(spatial_organization(P, pt).misclassified == base.misclassified);
}

TEST_CASE("planning errors") {
  Points2 same(6, 2);
  same.setConstant(3.0);
  CHECK_THROWS_AS(fit_fisher(same, {0, 0, 0, 1, 1, 1}), AnalysisError);
  try {
    fit_fisher(same, {0, 0, 0, 1, 1, 1});
  } catch (const AnalysisError& e) {
    CHECK(e.kind() == ErrorKind::SingularScatter);
  }

  auto c = blobs({{0, 0}}, 10, 1.0, 12);
  try {
    fit_fisher(c.X, c.tags);
    FAIL("expected InsufficientClasses");
  } catch (const AnalysisError& e) {
    CHECK(e.kind() == ErrorKind::InsufficientClasses);
  }
  std::vector<int> two(10, 0);
  two[0] = two[1] = 1;
  try {
    fit_fisher(c.X, two);
    FAIL("expected InsufficientClasses");
  } catch (const AnalysisError& e) {
    CHECK(e.kind() == ErrorKind::InsufficientClasses);
  }

  std::vector<SubjectPoints> one{{c.X, c.tags}};
  try {
    loo_spatial_organization(one);
    FAIL("expected InsufficientSubjects");
  } catch (const AnalysisError& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSubjects);
  }
}
