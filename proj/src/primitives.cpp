#include "surgskill/primitives.hpp"

#include <cmath>
#include <list>

#include "surgskill/error.hpp"

namespace surgskill {

const char* to_string(Primitive p) {
  switch (p) {
    case Primitive::Dwell: return "Dwell";
    case Primitive::StraightUniform: return "StraightUniform";
    case Primitive::StraightAccel: return "StraightAccel";
    case Primitive::CurvedUniform: return "CurvedUniform";
    case Primitive::CurvedAccel: return "CurvedAccel";
  }
  return "Unknown";
}

void PrimitiveLibrary::validate(double dt) const {
  if (!(v_min > 0) || !(kappa_thresh > 0) || !(a_thresh > 0) || !(min_duration >= dt - 1e-12))
    throw AnalysisError(ErrorKind::BadConfig, "primitive thresholds must be positive and min_duration >= dt");
}

std::vector<Primitive> classify_samples(const KinematicProfile& profile, const PrimitiveLibrary& lib) {
  std::vector<Primitive> out;
  out.reserve(profile.interior());
  for (std::size_t k = profile.begin(); k < profile.end(); ++k) {
    if (profile.v[k] <= lib.v_min) {
      out.push_back(Primitive::Dwell);
      continue;
    }
    bool curved = profile.kappa[k] > lib.kappa_thresh;
    bool accel = std::abs(profile.a_t[k]) > lib.a_thresh;
    if (curved) out.push_back(accel ? Primitive::CurvedAccel : Primitive::CurvedUniform);
    else out.push_back(accel ? Primitive::StraightAccel : Primitive::StraightUniform);
  }
  return out;
}

namespace {

struct Run {
  Primitive label;
  std::size_t start, count;
};

}  // namespace

Segmentation segment(const std::vector<Primitive>& labels, double dt, double min_duration) {
  Segmentation seg;
  seg.dt = dt;
  if (labels.empty()) return seg;

  std::list<Run> runs;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!runs.empty() && runs.back().label == labels[k]) ++runs.back().count;
    else runs.push_back({labels[k], k, 1});
  }

  const double min_count = min_duration / dt - 1e-9;
  auto coalesce = [&](std::list<Run>::iterator it) {
    if (it != runs.begin()) {
      auto prev = std::prev(it);
      if (prev->label == it->label) {
        prev->count += it->count;
        runs.erase(it);
        it = prev;
      }
    }
    auto next = std::next(it);
    if (next != runs.end() && next->label == it->label) {
      it->count += next->count;
      runs.erase(next);
    }
  };

  while (runs.size() > 1) {
    auto shortest = runs.end();
    for (auto it = runs.begin(); it != runs.end(); ++it)
      if (static_cast<double>(it->count) < min_count && (shortest == runs.end() || it->count < shortest->count))
        shortest = it;
    if (shortest == runs.end()) break;

    auto prev = shortest == runs.begin() ? runs.end() : std::prev(shortest);
    auto next = std::next(shortest);
    auto target = prev;
    if (prev == runs.end() || (next != runs.end() && next->count > prev->count)) target = next;
    if (target == prev) {
      prev->count += shortest->count;
    } else {
      next->start = shortest->start;
      next->count += shortest->count;
    }
    runs.erase(shortest);
    coalesce(target);
  }

  for (const auto& r : runs)
    seg.segments.push_back({r.label, r.start, r.start + r.count - 1, static_cast<double>(r.count) * dt});
  return seg;
}

std::array<PrimitiveStats, kPrimitiveCount> primitive_metrics(const Segmentation& seg) {
  std::array<PrimitiveStats, kPrimitiveCount> out{};
  std::array<double, kPrimitiveCount> time{};
  double total = 0.0;
  for (const auto& s : seg.segments) {
    auto i = static_cast<std::size_t>(s.label);
    out[i].frequency += 1;
    time[i] += s.duration;
    total += s.duration;
  }
  for (std::size_t i = 0; i < kPrimitiveCount; ++i) {
    out[i].time_fraction = total > 0 ? time[i] / total : 0.0;
    out[i].mean_duration = out[i].frequency ? time[i] / static_cast<double>(out[i].frequency) : 0.0;
  }
  return out;
}

std::string segments_csv(const Segmentation& seg, const KinematicProfile& profile) {
  std::string out = "start_t,end_t,label\n";
  for (const auto& s : seg.segments) {
    double t0 = profile.t[profile.begin() + s.start];
    out += format_double(t0) + "," + format_double(t0 + s.duration) + "," + to_string(s.label) + "\n";
  }
  return out;
}

}  // namespace surgskill
