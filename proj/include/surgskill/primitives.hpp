#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "surgskill/ingest.hpp"

namespace surgskill {

// Listed in increasing attention load.
enum class Primitive { Dwell, StraightUniform, StraightAccel, CurvedUniform, CurvedAccel };
inline constexpr std::size_t kPrimitiveCount = 5;

const char* to_string(Primitive p);

struct PrimitiveLibrary {
  double v_min = 2.0;
  double kappa_thresh = 0.05;
  double a_thresh = 20.0;
  double min_duration = 0.2;

  void validate(double dt) const;
};

struct Segment {
  Primitive label;
  std::size_t start;  // index into the label array
  std::size_t end;    // inclusive
  double duration;
};

struct Segmentation {
  std::vector<Segment> segments;
  double dt = 1.0 / 30.0;
};

struct PrimitiveStats {
  std::size_t frequency = 0;
  double time_fraction = 0.0;
  double mean_duration = 0.0;
};

// One label per interior sample of the profile.
std::vector<Primitive> classify_samples(const KinematicProfile& profile, const PrimitiveLibrary& lib = {});

Segmentation segment(const std::vector<Primitive>& labels, double dt, double min_duration);

std::array<PrimitiveStats, kPrimitiveCount> primitive_metrics(const Segmentation& seg);

// CSV `start_t,end_t,label` using the profile's interior timestamps.
std::string segments_csv(const Segmentation& seg, const KinematicProfile& profile);

}  // namespace surgskill
