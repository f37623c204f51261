// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "surgskill/cli.hpp"
#include "surgskill/ingest.hpp"
#include "surgskill/planning.hpp"
#include "surgskill/primitives.hpp"
#include "surgskill/pwarx.hpp"
#include "surgskill/rng.hpp"
#include "surgskill/stats.hpp"
#include "surgskill/synth.hpp"

using namespace surgskill;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %s :: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Every identification run is recorded for the structural and monotonicity checks.
struct Recorded {
  ModeSet ms;
  std::vector<std::vector<RegressionPair>> pairs;
};
std::vector<Recorded> recorded;

void record(const ModeSet& ms, const std::vector<const KinematicProfile*>& ps) {
  Recorded r{ms, {}};
  for (const auto* p : ps) r.pairs.push_back(build_regression_dataset(*p));
  recorded.push_back(std::move(r));
}

struct Match {
  double accuracy = 0.0;
  double max_rel_error = 0.0;
};

Match match_modes(const ModeSet& ms, const std::vector<int>& truth, const std::vector<PwarxMode>& modes) {
  Match best{-1.0, 0.0};
  std::vector<int> perm(modes.size());
  std::iota(perm.begin(), perm.end(), 0);
  if (ms.k() != modes.size()) return {0.0, 1e300};
  do {
    std::size_t hit = 0;
    for (std::size_t k = 0; k < truth.size(); ++k)
      if (perm[static_cast<std::size_t>(ms.assignments[k])] == truth[k]) ++hit;
    double acc = static_cast<double>(hit) / static_cast<double>(truth.size());
    if (acc > best.accuracy) {
      double err = 0.0;
      for (std::size_t m = 0; m < ms.k(); ++m) {
        auto est = ms.modes[m].coeffs();
        auto tru = modes[static_cast<std::size_t>(perm[m])].coeffs();
        for (int c = 0; c < 6; ++c) err = std::max(err, std::abs(est[c] - tru[c]) / std::abs(tru[c]));
      }
      best = {acc, err};
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void criterion_pwarx_recovery() {
  PwaScenario sc = PwaScenario::three_band();
  auto clean = generate_pwa_sequence(sc, 0);
  double vmax = 0.0;
  for (std::size_t k = 0; k < clean.vx.size(); ++k) vmax = std::max(vmax, std::hypot(clean.vx[k], clean.vy[k]));

  auto prof0 = profile_from_states(clean.traj, clean.vx, clean.vy);
  auto t0 = std::chrono::steady_clock::now();
  auto ms0 = identify_pwarx(prof0, 3, {});
  double time0 = seconds_since(t0);
  record(ms0, {&prof0});
  auto m0 = match_modes(ms0, clean.labels, sc.modes);

  sc.sigma = 0.01 * vmax;
  auto noisy = generate_pwa_sequence(sc, 1);
  auto prof1 = profile_from_states(noisy.traj, noisy.vx, noisy.vy);
  t0 = std::chrono::steady_clock::now();
  auto ms1 = identify_pwarx(prof1, 3, {});
  double time1 = seconds_since(t0);
  record(ms1, {&prof1});
  auto m1 = match_modes(ms1, noisy.labels, sc.modes);

  bool ok = m0.accuracy == 1.0 && m0.max_rel_error < 1e-6 && m1.accuracy >= 0.90 && m1.max_rel_error < 0.05 &&
            time0 < 10.0 && time1 < 10.0;
  std::ostringstream d;
  d << "noiseless acc=" << m0.accuracy << " err=" << m0.max_rel_error << "; noisy(sigma=" << sc.sigma
    << ") acc=" << m1.accuracy << " err=" << m1.max_rel_error << "; time " << time0 << "s/" << time1 << "s";
  report(1, ok, "PWARX recovery on 3-mode piecewise-affine data", d.str());
}

// Synthetic corpus: 3 skill groups x 6 subjects.
GroupSet corpus(int draw) {
  GroupSet gs;
  const SkillParams params[] = {SkillParams::expert(), SkillParams::intermediate(), SkillParams::novice()};
  const Group labels[] = {Group::Expert, Group::Intermediate, Group::Novice};
  for (int g = 0; g < 3; ++g) {
    GroupSubjects sub;
    sub.label = labels[g];
    for (int s = 0; s < 6; ++s) {
      auto run = generate_peg_transfer(params[g], PegLayout::standard(), static_cast<std::uint64_t>(draw * 100 + g * 10 + s));
      sub.subjects.push_back({differentiate(run.traj)});
    }
    gs.push_back(std::move(sub));
  }
  return gs;
}

void criterion_divergence_table(const GroupSet& gs) {
  auto t0 = std::chrono::steady_clock::now();
  auto t = loo_permutation_table(gs);
  double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  for (Eigen::Index m = 0; m < 3; ++m)
    for (Eigen::Index n = 0; n < 3; ++n)
      if (n != m && !(t.mean(m, m) < t.mean(m, n))) ok = false;
  std::ostringstream d;
  d.precision(3);
  for (Eigen::Index m = 0; m < 3; ++m) {
    d << "[";
    for (Eigen::Index n = 0; n < 3; ++n) d << (n ? " " : "") << t.mean(m, n);
    d << "] ";
  }
  d << "time " << secs << "s";
  report(2, ok, "divergence table diagonal below same-row off-diagonal", d.str());
}

struct Planning {
  std::array<double, 3> complete{};
  std::array<double, 3> loo{};
};

Planning planning_scores(const GroupSet& gs) {
  Planning out;
  for (std::size_t g = 0; g < gs.size(); ++g) {
    std::vector<const KinematicProfile*> ps;
    for (const auto& s : gs[g].subjects) ps.push_back(&s.front());
    auto ms = identify_pwarx_pooled(ps, 3, {});
    record(ms, ps);
    std::vector<SubjectPoints> subj(ps.size());
    Points2 all(static_cast<Eigen::Index>(ms.assignments.size()), 2);
    std::vector<int> tags;
    Eigen::Index row = 0;
    for (std::size_t s = 0; s < ps.size(); ++s) {
      const auto& p = *ps[s];
      const std::size_t n = ms.offsets[s + 1] - ms.offsets[s];
      subj[s].points.resize(static_cast<Eigen::Index>(n), 2);
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t k = p.begin() + j;
        subj[s].points.row(static_cast<Eigen::Index>(j)) << p.x[k], p.y[k];
        all.row(row++) << p.x[k], p.y[k];
        subj[s].tags.push_back(ms.assignments[ms.offsets[s] + j]);
      }
      tags.insert(tags.end(), subj[s].tags.begin(), subj[s].tags.end());
    }
    out.complete[g] = spatial_organization(all, tags).ratio;
    out.loo[g] = loo_spatial_organization(subj).mean;
  }
  return out;
}

void criterion_spatial_ordering(const GroupSet& draw0, int draws) {
  int complete_ok = 0, loo_ok = 0;
  std::ostringstream d;
  d.precision(3);
  for (int draw = 0; draw < draws; ++draw) {
    auto pl = planning_scores(draw == 0 ? draw0 : corpus(draw));
    bool c = pl.complete[0] < pl.complete[1] && pl.complete[1] < pl.complete[2];
    bool l = pl.loo[0] < pl.loo[1] && pl.loo[1] < pl.loo[2];
    complete_ok += c;
    loo_ok += l;
    if (draw < 3)
      d << "draw" << draw << " E/I/N=" << pl.complete[0] << "/" << pl.complete[1] << "/" << pl.complete[2] << " ";
  }
  d << "complete ordered " << complete_ok << "/" << draws << ", leave-one-out ordered " << loo_ok << "/" << draws;
  report(3, complete_ok >= 18 && loo_ok >= 18, "spatial organization ordering expert < intermediate < novice", d.str());
}

double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  long double a = 0, b = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    a += static_cast<long double>(p[i]) * (std::log(static_cast<long double>(p[i])) - std::log(static_cast<long double>(q[i])));
    b += static_cast<long double>(q[i]) * (std::log(static_cast<long double>(q[i])) - std::log(static_cast<long double>(p[i])));
  }
  return static_cast<double>((a + b) / 2);
}

void criterion_kl_oracle() {
  Rng rng(42);
  double worst = 0.0, self = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = 2 + rng.below(2549);
    std::vector<double> p(B), q(B);
    for (auto* v : {&p, &q}) {
      double s = 0;
      for (auto& x : *v) {
        x = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
        s += x;
      }
      if (s == 0) (*v)[0] = s = 1.0;
      double t = 0;
      for (auto& x : *v) t += (x = x / s + 1e-6);
      for (auto& x : *v) x /= t;
    }
    Eigen::ArrayXd P = Eigen::Map<Eigen::ArrayXd>(p.data(), static_cast<Eigen::Index>(B));
    Eigen::ArrayXd Q = Eigen::Map<Eigen::ArrayXd>(q.data(), static_cast<Eigen::Index>(B));
    worst = std::max(worst, std::abs(symmetric_kl(P, Q) - kl_oracle(p, q)));
    self = std::max(self, std::abs(symmetric_kl(P, P)));
  }
  report(4, worst <= 1e-12 && self <= 1e-15, "symmetric KL matches direct summation",
         "max |diff|=" + fmt("%.3g", worst) + ", max |D(p,p)|=" + fmt("%.3g", self));
}

void criterion_fisher_oracle() {
  Rng rng(7);
  std::size_t mismatches = 0, total = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto N = static_cast<Eigen::Index>(30 + rng.below(171));
    Points2 X(N, 2);
    std::vector<int> tags(static_cast<std::size_t>(N));
    Eigen::Vector2d centers[3];
    for (auto& c : centers) c = Eigen::Vector2d(rng.normal() * 20, rng.normal() * 20);
    Eigen::Matrix2d L;
    L << 1 + 5 * rng.uniform(), 0, rng.normal() * 3, 1 + 5 * rng.uniform();
    for (Eigen::Index i = 0; i < N; ++i) {
      int c = static_cast<int>(i % 3);
      tags[static_cast<std::size_t>(i)] = c;
      double a = rng.normal(), b = rng.normal();
      X.row(i) = (centers[c] + L * Eigen::Vector2d(a, b)).transpose();
    }
    auto f = fit_fisher(X, tags);
    // brute force shared-covariance Gaussian rule, written independently
    Eigen::Vector2d mu[3] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
    double cnt[3] = {0, 0, 0};
    for (Eigen::Index i = 0; i < N; ++i) {
      mu[tags[static_cast<std::size_t>(i)]] += X.row(i).transpose();
      cnt[tags[static_cast<std::size_t>(i)]] += 1;
    }
    for (int c = 0; c < 3; ++c) mu[c] /= cnt[c];
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (Eigen::Index i = 0; i < N; ++i) {
      Eigen::Vector2d d = X.row(i).transpose() - mu[tags[static_cast<std::size_t>(i)]];
      S += d * d.transpose();
    }
    S /= static_cast<double>(N - 3);
    S += 1e-6 * S.trace() / 2 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d Si = S.inverse();
    for (Eigen::Index i = 0; i < N; ++i) {
      Eigen::Vector2d x = X.row(i).transpose();
      int best = 0;
      double bl = -1e300;
      for (int c = 0; c < 3; ++c) {
        double ll = -0.5 * (x - mu[c]).dot(Si * (x - mu[c])) + std::log(cnt[c] / static_cast<double>(N));
        if (ll > bl) {
          bl = ll;
          best = c;
        }
      }
      ++total;
      if (f.predict(x) != best) ++mismatches;
    }
  }
  report(5, mismatches == 0, "Fisher predictions match brute-force Gaussian oracle",
         std::to_string(mismatches) + " mismatches over " + std::to_string(total) + " points in 50 instances");
}

void criterion_segmentation() {
  const double dt = 1.0 / 30.0, v0 = 10.0, acc = 60.0, R = 10.0;
  const double v1 = v0 + acc * 1.0;
  Trajectory tr;
  tr.dt = dt;
  tr.id = "segmentation";
  const int n = 180;
  const double x_acc = v0 * 2.0, x_arc = x_acc + v0 * 1.0 + 0.5 * acc;
  for (int k = 0; k < n; ++k) {
    double t = k * dt, x = 0, y = 0;
    if (t <= 1.0) {
      x = 0;
    } else if (t <= 3.0) {
      x = v0 * (t - 1.0);
    } else if (t <= 4.0) {
      double s = t - 3.0;
      x = x_acc + v0 * s + 0.5 * acc * s * s;
    } else {
      double th = v1 * (t - 4.0) / R;
      x = x_arc + R * std::sin(th);
      y = R * (1.0 - std::cos(th));
    }
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.y.push_back(y);
  }
  auto prof = differentiate(tr);
  auto seg = segment(classify_samples(prof), dt, 0.2);
  // expected interior index ranges: dwell [0,25), uniform [25,85), accel [85,115), arc [115,170)
  const Primitive want[] = {Primitive::Dwell, Primitive::StraightUniform, Primitive::StraightAccel, Primitive::CurvedUniform};
  const std::size_t len[] = {25, 60, 30, 55};
  bool ok = seg.segments.size() == 4;
  std::ostringstream d;
  for (std::size_t i = 0; i < seg.segments.size(); ++i) {
    const auto& s = seg.segments[i];
    std::size_t count = s.end - s.start + 1;
    d << to_string(s.label) << "(" << count << ") ";
    if (i < 4 && (s.label != want[i] || std::abs(static_cast<long>(count) - static_cast<long>(len[i])) > 2)) ok = false;
  }
  d << "expected Dwell(25) StraightUniform(60) StraightAccel(30) CurvedUniform(55)";
  report(6, ok, "segmentation of hand-built four-primitive trajectory", d.str());
}

void criterion_structure() {
  std::size_t checked = 0, bad = 0;
  for (const auto& r : recorded) {
    for (std::size_t src = 0; src < r.pairs.size(); ++src) {
      for (std::size_t j = 0; j < r.pairs[src].size(); ++j) {
        const auto& pr = r.pairs[src][j];
        const auto& mode = r.ms.modes[static_cast<std::size_t>(r.ms.assignments[r.ms.offsets[src] + j])];
        Eigen::Vector4d next = one_step_predict(mode, pr.s0);
        ++checked;
        if (next[0] != pr.s0[0] + r.ms.dt * pr.s0[2] || next[1] != pr.s0[1] + r.ms.dt * pr.s0[3] || mode.dt != r.ms.dt)
          ++bad;
      }
    }
  }
  report(7, bad == 0 && checked > 0, "position rows follow x' = x + dt*vx exactly",
         std::to_string(checked) + " transitions over " + std::to_string(recorded.size()) + " runs, " +
             std::to_string(bad) + " violations");
}

void criterion_monotone() {
  std::size_t steps = 0, increases = 0;
  for (const auto& r : recorded)
    for (std::size_t i = 1; i < r.ms.objective_history.size(); ++i) {
      ++steps;
      if (r.ms.objective_history[i] > r.ms.objective_history[i - 1]) ++increases;
    }
  report(8, increases == 0 && steps > 0, "refinement objective never increases",
         std::to_string(steps) + " recorded steps over " + std::to_string(recorded.size()) + " runs, " +
             std::to_string(increases) + " increases");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / "surgskill_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  cli::Config cfg;
  std::ofstream manifest(dir / "manifest.csv");
  manifest << "path,subject,group\n";
  std::vector<std::string> files;
  const char* skills[] = {"expert", "intermediate", "novice"};
  const char* groups[] = {"Expert", "Intermediate", "Novice"};
  for (int g = 0; g < 3; ++g) {
    cfg.synth_skill = skills[g];
    auto out = cli::cmd_synth(cli::SynthKind::Peg, cfg, static_cast<std::uint64_t>(g * 10), 3, (dir / skills[g]).string());
    for (std::size_t s = 0; s < out.size(); ++s) {
      manifest << out[s] << "," << skills[g] << s << "," << groups[g] << "\n";
      files.push_back(out[s]);
    }
  }
  manifest.close();
  cfg = cli::Config{};
  const std::vector<std::string> subset(files.begin(), files.begin() + 4);
  auto a1 = cli::cmd_analyze(subset, cfg, (dir / "a1.json").string());
  auto a2 = cli::cmd_analyze(subset, cfg, (dir / "a2.json").string(), {2, ""});
  auto g1 = cli::cmd_group((dir / "manifest.csv").string(), cfg, (dir / "g1.json").string());
  auto g2 = cli::cmd_group((dir / "manifest.csv").string(), cfg, (dir / "g2.json").string(), {2, ""});
  bool ok = a1 == a2 && g1 == g2 && slurp((dir / "a1.json").string()) == slurp((dir / "a2.json").string()) &&
            slurp((dir / "g1.json").string()) == slurp((dir / "g2.json").string()) && !a1.empty() && !g1.empty();
  report(9, ok, "analyze and group reruns are byte-identical",
         "analyze " + std::to_string(a1.size()) + " bytes, group " + std::to_string(g1.size()) + " bytes");
  fs::remove_all(dir);
}

void criterion_classifier(const GroupSet& gs) {
  auto cm = loo_confusion(gs);
  const int correct = cm.counts.trace(), total = cm.counts.sum();
  std::ostringstream d;
  d << correct << "/" << total << " correct; rows";
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r)
    d << " (" << cm.counts(r, 0) << "," << cm.counts(r, 1) << "," << cm.counts(r, 2) << ")";
  report(10, total == 18 && correct >= 0.9 * total, "leave-one-out subject classification", d.str());
}

}  // namespace

int main() {
  criterion_pwarx_recovery();
  const GroupSet draw0 = corpus(0);
  criterion_divergence_table(draw0);
  criterion_spatial_ordering(draw0, 20);
  criterion_kl_oracle();
  criterion_fisher_oracle();
  criterion_segmentation();
  criterion_structure();
  criterion_monotone();
  criterion_determinism();
  criterion_classifier(draw0);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
