#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <vector>

#include "surgskill/ingest.hpp"
#include "surgskill/pwarx.hpp"

namespace surgskill {

struct SkillParams {
  double kp = 400.0;  // 1/s^2
  double kd = 40.0;   // 1/s
  double sigma = 1.0;  // mm/s per step
  double v_start = 20.0;
  double v_transport = 40.0;
  double v_intercept = 15.0;
  double jitter = 1.0;      // mm
  double overshoot = 0.0;   // fraction of the transport distance
  double retry = 0.0;       // probability of another pick attempt
  double speed_cv = 0.05;   // setpoint coefficient of variation
  double slowdown = 0.0;    // probability of a slowed transport middle third
  double slowdown_factor = 0.4;
  double dwell_pick = 0.4, dwell_retry = 0.3, dwell_center = 0.5, dwell_release = 0.3;  // s
  double approach = 15.0;   // final approach to a pick at v_start, mm
  double lift = 6.0;        // retry lift height, mm
  double rise = 5.0;        // hand-over arc height over the centre peg, mm
  int arc_legs = 8;         // straight legs approximating the arc
  double settle_tol = 1.0;  // mm
  double settle_timeout = 1.0;  // s
  double dt = 1.0 / 30.0;

  static SkillParams expert();
  static SkillParams intermediate();
  static SkillParams novice();

  double spectral_radius() const;
  void validate() const;  // throws UnstableGains
};

struct PegLayout {
  std::vector<Eigen::Vector2d> pegs;
  Eigen::Vector2d center{0.0, 0.0};
  Eigen::Vector2d release{10.0, 0.0};
  Eigen::Vector2d start{5.0, 0.0};

  static PegLayout standard();
};

struct PegTransferRun {
  Trajectory traj;
  std::vector<double> vx, vy;  // true velocity states
  std::vector<Phase> phases;   // per sample
};

PegTransferRun generate_peg_transfer(const SkillParams& params, const PegLayout& layout, std::uint64_t seed,
                                     int blocks = 6);

struct Region {
  double xmin = -std::numeric_limits<double>::infinity(), xmax = std::numeric_limits<double>::infinity();
  double ymin = -std::numeric_limits<double>::infinity(), ymax = std::numeric_limits<double>::infinity();
  int mode = 0;

  bool contains(double x, double y) const { return x >= xmin && x < xmax && y >= ymin && y < ymax; }
};

struct PwaScenario {
  std::vector<PwarxMode> modes;
  std::vector<Region> partition;
  double sigma = 0.0;
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero();
  std::size_t horizon = 10000;  // samples
  double bound = 1e4;

  // Three x-bands with a sustained limit cycle visiting all of them.
  static PwaScenario three_band();
};

// Mode from per-axis natural frequency, damping and centre.
PwarxMode oscillator_mode(double wx, double zx, double cx, double wy, double zy, double cy, double dt);

struct PwaRun {
  Trajectory traj;
  std::vector<double> vx, vy;  // true velocity states
  std::vector<int> labels;     // per transition
};

PwaRun generate_pwa_sequence(const PwaScenario& scenario, std::uint64_t seed);

}  // namespace surgskill
