#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "surgskill/ingest.hpp"

namespace surgskill {

struct Binning {
  int speed_bins = 50;
  int kappa_bins = 50;
  double v_max = 0.0;  // <= 0: take the maximum interior speed of the data
  double kappa_min = 1e-3;
  double kappa_max = 10.0;
  double alpha = 1e-6;
};

struct SpeedCurvatureHistogram {
  std::vector<double> speed_edges;  // speed_bins + 1
  std::vector<double> kappa_edges;  // kappa_bins + 2, first column is the underflow bin
  Eigen::MatrixXd p;                // speed_bins x (kappa_bins + 1)
  std::size_t n_samples = 0;

  Eigen::Index bins() const { return p.size(); }
};

using ProfileSet = std::vector<KinematicProfile>;

struct GroupSubjects {
  Group label = Group::Unknown;
  std::vector<ProfileSet> subjects;
};
using GroupSet = std::vector<GroupSubjects>;

struct DivergenceTable {
  std::vector<Group> groups;
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std;
  Eigen::MatrixXi pairs;
};

struct ConfusionMatrix {
  std::vector<Group> labels;
  Eigen::MatrixXi counts;  // row = true, column = predicted
};

struct Classification {
  Group predicted = Group::Unknown;
  std::size_t predicted_index = 0;
  std::vector<double> divergences;
};

double max_interior_speed(const std::vector<const KinematicProfile*>& profiles);
double max_interior_speed(const GroupSet& groups);

// Raw counts with the histogram's shape. `b.v_max` must be positive.
Eigen::MatrixXd histogram_counts(const std::vector<const KinematicProfile*>& profiles, const Binning& b);
SpeedCurvatureHistogram histogram_from_counts(const Eigen::MatrixXd& counts, const Binning& b);

SpeedCurvatureHistogram build_histogram(const std::vector<const KinematicProfile*>& profiles,
                                        const Binning& b = {});
SpeedCurvatureHistogram build_histogram(const ProfileSet& profiles, const Binning& b = {});

std::vector<std::pair<int, int>> dominant_states(const SpeedCurvatureHistogram& h, double mass = 0.5);

double symmetric_kl(const SpeedCurvatureHistogram& p, const SpeedCurvatureHistogram& q);
double symmetric_kl(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q);

DivergenceTable loo_permutation_table(const GroupSet& groups, const Binning& b = {});

// `held_out` names (group index, subject index) of `subject` inside `groups`
// so that it is removed from its own group's reference histogram.
Classification classify_subject(const ProfileSet& subject, const GroupSet& groups, const Binning& b = {},
                                std::optional<std::pair<std::size_t, std::size_t>> held_out = std::nullopt);

// Every subject classified against the leave-one-out group references.
// Groups with a single subject keep their full reference; their own rows
// are counted only if `include_singletons` is set.
ConfusionMatrix loo_confusion(const GroupSet& groups, const Binning& b = {}, bool include_singletons = false);

}  // namespace surgskill
