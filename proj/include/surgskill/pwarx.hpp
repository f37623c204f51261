#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "surgskill/ingest.hpp"

namespace surgskill {

// One affine submodel of the state [x, y, vx, vy]:
//   x' = x + dt*vx            y' = y + dt*vy
//   vx' = a31*x + a33*vx + b3 vy' = a42*y + a44*vy + b4
struct PwarxMode {
  double a31 = 0.0, a33 = 1.0, b3 = 0.0;
  double a42 = 0.0, a44 = 1.0, b4 = 0.0;
  double dt = 1.0 / 30.0;
  int index = 0;

  std::array<double, 6> coeffs() const { return {a31, a33, b3, a42, a44, b4}; }
};

struct RegressionPair {
  Eigen::Vector4d s0, s1;
};

struct FitResult {
  PwarxMode mode;
  double residual = 0.0;  // velocity rows, summed over pairs
};

struct IdentOptions {
  int neighbors = 15;
  std::uint64_t seed = 0;
  int restarts = 20;
  int refine_starts = 20;  // distinct best-inertia clusterings refined; lowest objective kept
  int max_iter = 100;
  bool residual_filter = true;
  double filter_quantile = 0.1;
  double filter_level = 0.99;
};

struct ModeSet {
  std::vector<PwarxMode> modes;
  std::vector<int> assignments;  // one per transition, concatenated over sources
  std::vector<std::size_t> offsets;  // transition offsets per source profile, size = sources + 1
  double objective = 0.0;
  std::vector<double> objective_history;
  std::vector<std::string> warnings;
  int iterations = 0;
  bool converged = false;
  std::size_t local_fits = 0;
  std::size_t kept_fits = 0;
  std::size_t refine_starts = 0;
  double dt = 1.0 / 30.0;
  IdentOptions options;

  std::size_t k() const { return modes.size(); }
};

struct ModeSummary {
  int mode = 0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // (v, a_t, a_n)
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Zero();  // columns: eigenvectors scaled by sqrt(eigenvalue)
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  double occupancy = 0.0;
  std::size_t count = 0;
  bool has_fixed_point_x = false, has_fixed_point_y = false;
  double fixed_point_x = 0.0, fixed_point_y = 0.0;
};

enum class Phase { Starting, Maneuvering, Interception };
const char* to_string(Phase p);

std::vector<RegressionPair> build_regression_dataset(const KinematicProfile& profile);

FitResult fit_mode_ls(const std::vector<RegressionPair>& pairs, double dt);
FitResult fit_mode_ls(const std::vector<RegressionPair>& pairs, const std::vector<std::size_t>& subset, double dt);

// Squared velocity-row residual of one pair.
double velocity_residual(const PwarxMode& mode, const RegressionPair& pair);

Eigen::Vector4d one_step_predict(const PwarxMode& mode, const Eigen::Vector4d& state);

ModeSet identify_pwarx(const KinematicProfile& profile, int K = 3, const IdentOptions& opts = {});
ModeSet identify_pwarx_pooled(const std::vector<const KinematicProfile*>& profiles, int K = 3,
                              const IdentOptions& opts = {});

std::vector<ModeSummary> mode_kinematic_summary(const ModeSet& ms, const KinematicProfile& profile);
std::vector<ModeSummary> mode_kinematic_summary(const ModeSet& ms, const std::vector<const KinematicProfile*>& profiles);

// mode index -> phase; throws WrongModeCount unless exactly 3 summaries.
std::map<int, Phase> phase_correspondence(const std::vector<ModeSummary>& summaries);

}  // namespace surgskill
