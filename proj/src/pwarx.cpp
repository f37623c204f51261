#include "surgskill/pwarx.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "kmeans.hpp"
#include "surgskill/error.hpp"

namespace surgskill {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Starting: return "Starting";
    case Phase::Maneuvering: return "Maneuvering";
    case Phase::Interception: return "Interception";
  }
  return "Unknown";
}

std::vector<RegressionPair> build_regression_dataset(const KinematicProfile& p) {
  if (p.interior() < 2) throw AnalysisError(ErrorKind::TooShort, p.source + ": fewer than 2 interior samples");
  std::vector<RegressionPair> out;
  out.reserve(p.interior() - 1);
  for (std::size_t k = p.begin(); k + 1 < p.end(); ++k)
    out.push_back({Eigen::Vector4d(p.x[k], p.y[k], p.vx[k], p.vy[k]),
                   Eigen::Vector4d(p.x[k + 1], p.y[k + 1], p.vx[k + 1], p.vy[k + 1])});
  return out;
}

namespace {

// Least squares of target ~ [pos, vel, 1] on one axis. Returns false when
// the numerical rank is below 2.
bool solve_axis(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b, Eigen::Vector3d& theta) {
  Eigen::Vector3d scale = A.colwise().norm().transpose();
  for (int j = 0; j < 3; ++j)
    if (!(scale[j] > 0)) scale[j] = 1.0;
  Eigen::MatrixX3d As = A * scale.cwiseInverse().asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-12);
  cod.compute(As);
  if (cod.rank() < 2) return false;
  theta = cod.solve(b).cwiseQuotient(scale);
  return theta.allFinite();
}

}  // namespace

double velocity_residual(const PwarxMode& m, const RegressionPair& pr) {
  double ex = pr.s1[2] - (m.a31 * pr.s0[0] + m.a33 * pr.s0[2] + m.b3);
  double ey = pr.s1[3] - (m.a42 * pr.s0[1] + m.a44 * pr.s0[3] + m.b4);
  return ex * ex + ey * ey;
}

FitResult fit_mode_ls(const std::vector<RegressionPair>& pairs, const std::vector<std::size_t>& subset, double dt) {
  const auto n = static_cast<Eigen::Index>(subset.size());
  if (n < 3) throw AnalysisError(ErrorKind::RankDeficient, "need at least 3 pairs, got " + std::to_string(n));
  Eigen::MatrixX3d Ax(n, 3), Ay(n, 3);
  Eigen::VectorXd bx(n), by(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pr = pairs[subset[static_cast<std::size_t>(i)]];
    Ax.row(i) << pr.s0[0], pr.s0[2], 1.0;
    Ay.row(i) << pr.s0[1], pr.s0[3], 1.0;
    bx[i] = pr.s1[2];
    by[i] = pr.s1[3];
  }
  Eigen::Vector3d tx, ty;
  if (!solve_axis(Ax, bx, tx) || !solve_axis(Ay, by, ty))
    throw AnalysisError(ErrorKind::RankDeficient, "collinear regressors (degenerate motion)");
  FitResult r;
  r.mode.a31 = tx[0];
  r.mode.a33 = tx[1];
  r.mode.b3 = tx[2];
  r.mode.a42 = ty[0];
  r.mode.a44 = ty[1];
  r.mode.b4 = ty[2];
  r.mode.dt = dt;
  r.residual = (Ax * tx - bx).squaredNorm() + (Ay * ty - by).squaredNorm();
  return r;
}

FitResult fit_mode_ls(const std::vector<RegressionPair>& pairs, double dt) {
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_mode_ls(pairs, all, dt);
}

Eigen::Vector4d one_step_predict(const PwarxMode& m, const Eigen::Vector4d& s) {
  return {s[0] + m.dt * s[2], s[1] + m.dt * s[3], m.a31 * s[0] + m.a33 * s[2] + m.b3,
          m.a42 * s[1] + m.a44 * s[3] + m.b4};
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Index-ordered total so that acceptance tests compare like with like.
double total_objective(const std::vector<RegressionPair>& pairs, const std::vector<PwarxMode>& modes,
                       const std::vector<int>& assign) {
  double s = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) s += velocity_residual(modes[static_cast<std::size_t>(assign[k])], pairs[k]);
  return s;
}

bool reassign(const std::vector<RegressionPair>& pairs, const std::vector<PwarxMode>& modes, std::vector<int>& assign) {
  bool changed = false;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    int best = 0;
    double bd = velocity_residual(modes[0], pairs[k]);
    for (std::size_t m = 1; m < modes.size(); ++m) {
      double d = velocity_residual(modes[m], pairs[k]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(m);
      }
    }
    if (assign[k] != best) {
      assign[k] = best;
      changed = true;
    }
  }
  return changed;
}

struct Refined {
  std::vector<PwarxMode> modes;
  std::vector<int> assign;
  std::vector<double> objective_history;
  std::vector<std::string> warnings;
  int iterations = 0;
  bool converged = false;
};

// Labels renumbered by first appearance, so relabelled clusterings compare equal.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::vector<int> map, out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto l = static_cast<std::size_t>(labels[i]);
    if (l >= map.size()) map.resize(l + 1, -1);
    if (map[l] < 0) map[l] = *std::max_element(map.begin(), map.end()) + 1;
    out[i] = map[l];
  }
  return out;
}

// Alternate reassignment and refits. A refit is kept only if the
// index-ordered total does not grow, so the history is non-increasing.
void refine(const std::vector<RegressionPair>& pairs, double dt, int max_iter, Refined& r) {
  auto& modes = r.modes;
  r.assign.assign(pairs.size(), -1);
  reassign(pairs, modes, r.assign);
  double obj = total_objective(pairs, modes, r.assign);
  r.objective_history.push_back(obj);
  for (int it = 1; it <= max_iter; ++it) {
    for (std::size_t m = 0; m < modes.size(); ++m) {
      std::vector<std::size_t> members;
      for (std::size_t k = 0; k < pairs.size(); ++k)
        if (r.assign[k] == static_cast<int>(m)) members.push_back(k);
      if (members.size() < 3) continue;
      PwarxMode cand;
      try {
        cand = fit_mode_ls(pairs, members, dt).mode;
      } catch (const AnalysisError&) {
        continue;
      }
      PwarxMode old = modes[m];
      modes[m] = cand;
      double o = total_objective(pairs, modes, r.assign);
      if (o <= obj) obj = o;
      else modes[m] = old;
    }
    r.objective_history.push_back(obj);
    bool changed = reassign(pairs, modes, r.assign);
    obj = total_objective(pairs, modes, r.assign);
    r.objective_history.push_back(obj);
    r.iterations = it;
    if (!changed) {
      r.converged = true;
      break;
    }
  }
}

ModeSet identify_impl(const std::vector<RegressionPair>& pairs, const std::vector<std::size_t>& offsets, double dt,
                      int K, const IdentOptions& opts) {
  if (K < 1) throw AnalysisError(ErrorKind::BadConfig, "K must be at least 1");
  if (pairs.size() < static_cast<std::size_t>(10 * K))
    throw AnalysisError(ErrorKind::TooShort, std::to_string(pairs.size()) + " transitions, need " +
                                                 std::to_string(10 * K));
  ModeSet ms;
  ms.offsets = offsets;
  ms.dt = dt;
  ms.options = opts;

  // local fits over temporal windows that stay inside one source
  const int c = std::max(4, opts.neighbors);
  std::vector<std::array<double, 6>> feats;
  std::vector<double> resid;
  std::vector<std::size_t> owner;
  for (std::size_t src = 0; src + 1 < offsets.size(); ++src) {
    const std::size_t off = offsets[src], n = offsets[src + 1] - off;
    const std::size_t ce = std::min<std::size_t>(static_cast<std::size_t>(c), n);
    if (ce < 4) continue;
    const std::size_t h = static_cast<std::size_t>(c / 2);
    std::vector<std::size_t> win(ce);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t s = std::min(n - ce, k > h ? k - h : 0);
      std::iota(win.begin(), win.end(), off + s);
      try {
        auto f = fit_mode_ls(pairs, win, dt);
        feats.push_back(f.mode.coeffs());
        resid.push_back(f.residual);
        owner.push_back(off + k);
      } catch (const AnalysisError&) {
      }
    }
  }
  ms.local_fits = feats.size();
  if (feats.empty()) throw AnalysisError(ErrorKind::DegenerateCluster, "no well-posed local fits");

  std::vector<std::size_t> keep;
  if (opts.residual_filter) {
    const double dof = 2.0 * (c - 3);
    boost::math::chi_squared chi(dof);
    double s2 = quantile(resid, opts.filter_quantile) / boost::math::quantile(chi, opts.filter_quantile);
    double thr = std::max(s2 * boost::math::quantile(chi, opts.filter_level), 1e-12 * quantile(resid, 0.5));
    for (std::size_t i = 0; i < feats.size(); ++i)
      if (resid[i] <= thr) keep.push_back(i);
  }
  if (keep.size() < static_cast<std::size_t>(K)) {
    keep.resize(feats.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
  }
  ms.kept_fits = keep.size();

  Eigen::MatrixXd Z(static_cast<Eigen::Index>(keep.size()), 6);
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (int j = 0; j < 6; ++j) Z(static_cast<Eigen::Index>(i), j) = feats[keep[i]][static_cast<std::size_t>(j)];
  Eigen::RowVectorXd mu = Z.colwise().mean();
  Z.rowwise() -= mu;
  Eigen::RowVectorXd sd = (Z.colwise().squaredNorm() / static_cast<double>(Z.rows())).cwiseSqrt();
  for (int j = 0; j < 6; ++j)
    if (sd[j] > 0) Z.col(j) /= sd[j];

  // Refinement starts from the best-inertia distinct clusterings; the one
  // reaching the lowest objective is kept.
  auto runs = detail::kmeans_restarts(Z, K, opts.seed, opts.restarts);
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return runs[a].inertia < runs[b].inertia; });
  std::vector<std::vector<int>> seen;
  std::vector<Refined> results;
  for (std::size_t r : order) {
    if (static_cast<int>(results.size()) >= std::max(1, opts.refine_starts)) break;
    auto canon = canonical(runs[r].labels);
    if (std::find(seen.begin(), seen.end(), canon) != seen.end()) continue;
    seen.push_back(std::move(canon));

    Refined cand;
    const int kc = static_cast<int>(runs[r].centers.rows());
    for (int cl = 0; cl < kc; ++cl) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < keep.size(); ++i)
        if (runs[r].labels[i] == cl) members.push_back(owner[keep[i]]);
      try {
        cand.modes.push_back(fit_mode_ls(pairs, members, dt).mode);
      } catch (const AnalysisError&) {
        cand.warnings.push_back("DegenerateCluster: cluster " + std::to_string(cl) + " with " +
                                std::to_string(members.size()) + " transitions dropped");
      }
    }
    if (cand.modes.empty()) continue;
    refine(pairs, dt, opts.max_iter, cand);
    results.push_back(std::move(cand));
  }
  if (results.empty()) throw AnalysisError(ErrorKind::DegenerateCluster, "every cluster was degenerate");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].objective_history.back() < results[best].objective_history.back()) best = i;
  Refined& chosen = results[best];
  ms.refine_starts = results.size();
  ms.warnings = chosen.warnings;
  ms.objective_history = chosen.objective_history;
  ms.iterations = chosen.iterations;
  ms.converged = chosen.converged;
  std::vector<PwarxMode> modes = std::move(chosen.modes);
  std::vector<int> assign = std::move(chosen.assign);

  // drop empty modes and renumber
  std::vector<int> remap(modes.size(), -1);
  for (int a : assign) remap[static_cast<std::size_t>(a)] = 0;
  int next = 0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (remap[m] < 0) {
      ms.warnings.push_back("empty mode " + std::to_string(m) + " removed");
      continue;
    }
    remap[m] = next;
    modes[m].index = next++;
    ms.modes.push_back(modes[m]);
  }
  for (auto& a : assign) a = remap[static_cast<std::size_t>(a)];
  ms.assignments = std::move(assign);
  ms.objective = total_objective(pairs, ms.modes, ms.assignments);
  return ms;
}

}  // namespace

ModeSet identify_pwarx(const KinematicProfile& profile, int K, const IdentOptions& opts) {
  return identify_pwarx_pooled({&profile}, K, opts);
}

ModeSet identify_pwarx_pooled(const std::vector<const KinematicProfile*>& profiles, int K, const IdentOptions& opts) {
  if (profiles.empty()) throw AnalysisError(ErrorKind::EmptyInput, "no profiles");
  std::vector<RegressionPair> pairs;
  std::vector<std::size_t> offsets{0};
  for (const auto* p : profiles) {
    auto part = build_regression_dataset(*p);
    pairs.insert(pairs.end(), part.begin(), part.end());
    offsets.push_back(pairs.size());
  }
  return identify_impl(pairs, offsets, profiles.front()->dt, K, opts);
}

std::vector<ModeSummary> mode_kinematic_summary(const ModeSet& ms, const std::vector<const KinematicProfile*>& profiles) {
  if (profiles.size() + 1 != ms.offsets.size())
    throw AnalysisError(ErrorKind::EmptyInput, "mode set and profiles are not aligned");
  const std::size_t K = ms.modes.size();
  std::vector<std::vector<Eigen::Vector3d>> samples(K);
  for (std::size_t src = 0; src < profiles.size(); ++src) {
    const auto& p = *profiles[src];
    for (std::size_t j = ms.offsets[src]; j < ms.offsets[src + 1]; ++j) {
      std::size_t k = p.begin() + (j - ms.offsets[src]);
      samples[static_cast<std::size_t>(ms.assignments[j])].emplace_back(p.v[k], p.a_t[k], p.a_n[k]);
    }
  }
  std::vector<ModeSummary> out;
  const double total = static_cast<double>(ms.assignments.size());
  for (std::size_t m = 0; m < K; ++m) {
    ModeSummary s;
    s.mode = static_cast<int>(m);
    s.count = samples[m].size();
    s.occupancy = total > 0 ? static_cast<double>(s.count) / total : 0.0;
    if (s.count > 0) {
      for (const auto& v : samples[m]) s.mean += v;
      s.mean /= static_cast<double>(s.count);
      for (const auto& v : samples[m]) s.cov += (v - s.mean) * (v - s.mean).transpose();
      s.cov /= static_cast<double>(s.count);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s.cov);
      s.eigenvalues = es.eigenvalues().cwiseMax(0.0);
      s.axes = es.eigenvectors() * s.eigenvalues.cwiseSqrt().asDiagonal();
    }
    const auto& md = ms.modes[m];
    if (md.a31 != 0.0) {
      s.has_fixed_point_x = true;
      s.fixed_point_x = -md.b3 / md.a31;
    }
    if (md.a42 != 0.0) {
      s.has_fixed_point_y = true;
      s.fixed_point_y = -md.b4 / md.a42;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ModeSummary> mode_kinematic_summary(const ModeSet& ms, const KinematicProfile& profile) {
  return mode_kinematic_summary(ms, std::vector<const KinematicProfile*>{&profile});
}

std::map<int, Phase> phase_correspondence(const std::vector<ModeSummary>& s) {
  if (s.size() != 3)
    throw AnalysisError(ErrorKind::WrongModeCount, "phase correspondence needs exactly 3 modes, got " +
                                                       std::to_string(s.size()));
  std::size_t man = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (s[i].mean[0] > s[man].mean[0]) man = i;
  std::size_t a = man == 0 ? 1 : 0, b = 3 - man - a;
  std::size_t icp = s[b].mean[2] > s[a].mean[2] ? b : a;
  std::size_t st = icp == a ? b : a;
  return {{s[man].mode, Phase::Maneuvering}, {s[icp].mode, Phase::Interception}, {s[st].mode, Phase::Starting}};
}

}  // namespace surgskill
