#include "surgskill/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surgskill/error.hpp"
#include "surgskill/rng.hpp"

namespace surgskill {

SkillParams SkillParams::expert() { return SkillParams{}; }

SkillParams SkillParams::intermediate() {
  SkillParams p;
  p.kp = 100.0;
  p.kd = 18.0;
  p.sigma = 4.0;
  p.v_start = 18.0;
  p.v_transport = 32.0;
  p.v_intercept = 12.0;
  p.jitter = 2.5;
  p.overshoot = 0.05;
  p.retry = 0.15;
  p.speed_cv = 0.2;
  p.slowdown = 0.2;
  return p;
}

SkillParams SkillParams::novice() {
  SkillParams p;
  p.kp = 50.0;
  p.kd = 10.0;
  p.sigma = 8.0;
  p.v_start = 15.0;
  p.v_transport = 25.0;
  p.v_intercept = 10.0;
  p.jitter = 4.0;
  p.overshoot = 0.1;
  p.retry = 0.3;
  p.speed_cv = 0.4;
  p.slowdown = 0.5;
  return p;
}

double SkillParams::spectral_radius() const {
  // per-axis tracking error map [[1, dt], [-dt*kp, 1 - dt*kd]]
  const double tr = 2.0 - dt * kd;
  const double det = 1.0 - dt * kd + dt * dt * kp;
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0) {
    double r = std::sqrt(disc);
    return std::max(std::abs(tr / 2 + r), std::abs(tr / 2 - r));
  }
  return std::sqrt(det);
}

void SkillParams::validate() const {
  if (!(sigma >= 0) || !(dt > 0))
    throw AnalysisError(ErrorKind::BadConfig, "noise must be non-negative and dt positive");
  if (!(v_start > 0) || !(v_transport > 0) || !(v_intercept > 0))
    throw AnalysisError(ErrorKind::BadConfig, "speed setpoints must be positive");
  if (!(retry >= 0 && retry < 1) || !(slowdown >= 0 && slowdown <= 1))
    throw AnalysisError(ErrorKind::BadConfig, "probabilities must lie in [0,1) for retry and [0,1] for slowdown");
  if (arc_legs < 1) throw AnalysisError(ErrorKind::BadConfig, "arc_legs must be at least 1");
  double rho = spectral_radius();
  if (!(rho < 1.0))
    throw AnalysisError(ErrorKind::UnstableGains, "closed-loop spectral radius " + std::to_string(rho) + " >= 1");
}

PegLayout PegLayout::standard() {
  PegLayout l;
  l.pegs = {{-90, -30}, {-100, -10}, {-90, 10}, {-100, 30}, {-80, 0}, {-80, 20}};
  return l;
}

namespace {

class PegSimulator {
 public:
  PegSimulator(const SkillParams& p, const PegLayout& l, std::uint64_t seed)
      : p_(p), rng_(seed), pos_(l.start), vel_(Eigen::Vector2d::Zero()) {}

  // via: hand over to the next leg as soon as the reference arrives, without settling
  void track(const Eigen::Vector2d& goal, double speed, Phase phase, double dwell = 0.0, bool via = false) {
    const Eigen::Vector2d start = pos_, d = goal - start;
    const double L = d.norm();
    const double T = L / std::max(speed, 1e-6);
    const Eigen::Vector2d u = L > 0 ? Eigen::Vector2d(d / L) : Eigen::Vector2d::Zero();
    int settle = 0;
    for (long k = 0;; ++k) {
      const double t = static_cast<double>(k) * p_.dt;
      Eigen::Vector2d ref = goal, vref = Eigen::Vector2d::Zero();
      if (t < T) {
        ref = start + u * speed * t;
        vref = u * speed;
      }
      Eigen::Vector2d acc = p_.kp * (ref - pos_) + p_.kd * (vref - vel_);
      Eigen::Vector2d next = pos_ + p_.dt * vel_;
      double nx = rng_.normal(), ny = rng_.normal();
      vel_ += p_.dt * acc + p_.sigma * Eigen::Vector2d(nx, ny);
      pos_ = next;
      xs_.push_back(pos_.x());
      ys_.push_back(pos_.y());
      vxs_.push_back(vel_.x());
      vys_.push_back(vel_.y());
      phases_.push_back(phase);
      if (t >= T) {
        if (via) break;
        if ((pos_ - goal).norm() < p_.settle_tol || static_cast<double>(k + 1) * p_.dt > T + p_.settle_timeout) {
          ++settle;
          if (settle * p_.dt >= dwell) break;
        }
      }
    }
  }

  Eigen::Vector2d jitter(const Eigen::Vector2d& c) {
    double a = rng_.normal(), b = rng_.normal();
    return c + p_.jitter * Eigen::Vector2d(a, b);
  }
  double vary(double v) { return v * std::max(0.3, 1.0 + p_.speed_cv * rng_.normal()); }
  double uniform() { return rng_.uniform(); }
  const Eigen::Vector2d& pos() const { return pos_; }

  PegTransferRun finish(std::uint64_t seed) {
    PegTransferRun run;
    const std::size_t n = xs_.size();
    run.traj.dt = p_.dt;
    run.traj.id = "peg-" + std::to_string(seed);
    run.traj.t.resize(n);
    for (std::size_t k = 0; k < n; ++k) run.traj.t[k] = static_cast<double>(k) * p_.dt;
    run.traj.x = std::move(xs_);
    run.traj.y = std::move(ys_);
    run.vx = std::move(vxs_);
    run.vy = std::move(vys_);
    run.phases = std::move(phases_);
    return run;
  }

 private:
  SkillParams p_;
  Rng rng_;
  Eigen::Vector2d pos_, vel_;
  std::vector<double> xs_, ys_, vxs_, vys_;
  std::vector<Phase> phases_;
};

}  // namespace

PegTransferRun generate_peg_transfer(const SkillParams& p, const PegLayout& layout, std::uint64_t seed, int blocks) {
  p.validate();
  if (layout.pegs.size() < 2) throw AnalysisError(ErrorKind::BadConfig, "layout needs at least 2 pegs");
  PegSimulator sim(p, layout, seed);
  for (int b = 0; b < blocks; ++b) {
    const Eigen::Vector2d pick = sim.jitter(layout.pegs[static_cast<std::size_t>(b) % layout.pegs.size()]);
    const Eigen::Vector2d to_pick = pick - sim.pos();
    if (to_pick.norm() > p.approach) {
      // empty-handed travel back to the pegs is unrestricted gross motion
      sim.track(pick - p.approach * to_pick.normalized(), sim.vary(p.v_transport), Phase::Maneuvering, 0.0, true);
    }
    const double vs = sim.vary(p.v_start);
    sim.track(pick, vs, Phase::Starting, p.dwell_pick);
    while (sim.uniform() < p.retry) {
      sim.track(pick + Eigen::Vector2d(0, p.lift), vs, Phase::Starting);
      sim.track(pick, vs, Phase::Starting, p.dwell_retry);
    }
    const double vt = sim.vary(p.v_transport);
    const Eigen::Vector2d center = sim.jitter(layout.center);
    // ease the block off its peg towards the centre before speeding up
    if ((center - pick).norm() > p.lift)
      sim.track(pick + p.lift * (center - pick).normalized(), vs, Phase::Starting, 0.0, true);
    const Eigen::Vector2d from = sim.pos();
    Eigen::Vector2d goal = center + p.overshoot * (center - from);
    if (sim.uniform() < p.slowdown) {
      sim.track(from + (goal - from) / 3.0, vt, Phase::Maneuvering);
      sim.track(from + 2.0 * (goal - from) / 3.0, p.slowdown_factor * vt, Phase::Maneuvering);
    }
    sim.track(goal, vt, Phase::Maneuvering);
    if (p.overshoot > 0) sim.track(center, p.v_intercept, Phase::Maneuvering);

    // hand-over: hold at the centre, then carry the block over the peg in an arc to the release
    const Eigen::Vector2d release = sim.jitter(layout.release);
    sim.track(center, p.v_intercept, Phase::Interception, p.dwell_center);
    const Eigen::Vector2d mid = 0.5 * (center + release), half = 0.5 * (center - release);
    const Eigen::Vector2d up = half.norm() > 0 ? Eigen::Vector2d(-half.y(), half.x()).normalized() : Eigen::Vector2d(0, 1);
    const double side = up.y() < 0 ? -1.0 : 1.0;
    for (int i = 1; i < p.arc_legs; ++i) {
      const double th = std::numbers::pi * i / p.arc_legs;
      sim.track(mid + std::cos(th) * half + side * p.rise * std::sin(th) * up, p.v_intercept, Phase::Interception, 0.0, true);
    }
    sim.track(release, p.v_intercept, Phase::Interception, p.dwell_release);
  }
  return sim.finish(seed);
}

PwarxMode oscillator_mode(double wx, double zx, double cx, double wy, double zy, double cy, double dt) {
  PwarxMode m;
  m.dt = dt;
  m.a31 = -dt * wx * wx;
  m.a33 = 1.0 - dt * 2.0 * zx * wx;
  m.b3 = dt * wx * wx * cx;
  m.a42 = -dt * wy * wy;
  m.a44 = 1.0 - dt * 2.0 * zy * wy;
  m.b4 = dt * wy * wy * cy;
  return m;
}

PwaScenario PwaScenario::three_band() {
  const double dt = 1.0 / 30.0, w = 17.8;
  PwaScenario s;
  s.modes = {oscillator_mode(4.98, 0.13, -18.6, 5.62, 0.2, 5.08, dt),
             oscillator_mode(2.07, -0.11, 6.81, 4.54, 0.45, 13.13, dt),
             oscillator_mode(3.49, 0.25, 18.14, 3.1, 0.3, 25.15, dt)};
  for (int i = 0; i < 3; ++i) s.modes[static_cast<std::size_t>(i)].index = i;
  Region left, mid, right;
  left.xmax = -w;
  left.mode = 0;
  mid.xmin = -w;
  mid.xmax = w;
  mid.mode = 1;
  right.xmin = w;
  right.mode = 2;
  s.partition = {left, mid, right};
  s.x0 = Eigen::Vector4d(-19.8, 3.0, 0.0, 0.0);
  return s;
}

PwaRun generate_pwa_sequence(const PwaScenario& sc, std::uint64_t seed) {
  if (sc.modes.empty() || sc.partition.empty() || sc.horizon < 2)
    throw AnalysisError(ErrorKind::BadConfig, "scenario needs modes, a partition and at least 2 samples");
  Rng rng(seed);
  PwaRun run;
  const double dt = sc.modes.front().dt;
  run.traj.dt = dt;
  run.traj.id = "pwa-" + std::to_string(seed);
  Eigen::Vector4d s = sc.x0;
  for (std::size_t k = 0; k < sc.horizon; ++k) {
    run.traj.t.push_back(static_cast<double>(k) * dt);
    run.traj.x.push_back(s[0]);
    run.traj.y.push_back(s[1]);
    run.vx.push_back(s[2]);
    run.vy.push_back(s[3]);
    if (k + 1 == sc.horizon) break;
    const Region* reg = nullptr;
    for (const auto& r : sc.partition)
      if (r.contains(s[0], s[1])) {
        reg = &r;
        break;
      }
    if (!reg) throw AnalysisError(ErrorKind::Divergence, "state left the partition at step " + std::to_string(k));
    run.labels.push_back(reg->mode);
    s = one_step_predict(sc.modes[static_cast<std::size_t>(reg->mode)], s);
    double nx = rng.normal(), ny = rng.normal();
    s[2] += sc.sigma * nx;
    s[3] += sc.sigma * ny;
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > sc.bound)
      throw AnalysisError(ErrorKind::Divergence, "state left the bounding box at step " + std::to_string(k));
  }
  return run;
}

}  // namespace surgskill
