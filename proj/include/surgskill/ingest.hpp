#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace surgskill {

enum class Hand { Left, Right };
enum class Group { Expert, Intermediate, Novice, Unknown };

const char* to_string(Hand h);
const char* to_string(Group g);
std::optional<Group> parse_group(const std::string& s);

struct AuxChannel {
  std::string name;  // z, grasp_angle or grasp_force
  std::vector<double> values;
};

struct Trajectory {
  std::vector<double> t, x, y;
  double dt = 1.0 / 30.0;
  Hand hand = Hand::Right;
  std::vector<AuxChannel> aux;
  std::string id;
  Group group = Group::Unknown;

  std::size_t size() const { return t.size(); }
  const AuxChannel* channel(const std::string& name) const;
};

// Per-sample kinematics. Samples in [begin(), end()) are interior; the
// `margin` samples at each end come from one-sided fits and are not used
// by any downstream statistic.
struct KinematicProfile {
  std::string source;
  double dt = 1.0 / 30.0;
  std::size_t margin = 0;
  std::vector<double> t, x, y;
  std::vector<double> vx, vy, ax, ay;
  std::vector<double> v, a_t, a_n, kappa;

  std::size_t size() const { return t.size(); }
  std::size_t begin() const { return margin; }
  std::size_t end() const { return t.size() > margin ? t.size() - margin : margin; }
  std::size_t interior() const { return end() - begin(); }
};

enum class Format { Csv };

struct LoadOptions {
  std::size_t min_samples = 2;
};

Trajectory load_trajectory(const std::string& path, Format format = Format::Csv,
                           const LoadOptions& opts = {});
Trajectory parse_trajectory(std::istream& in, const std::string& name = "<stream>",
                            const LoadOptions& opts = {});
void save_trajectory(const Trajectory& traj, const std::string& path);
void write_trajectory(std::ostream& out, const Trajectory& traj);

// Shortest round-trip decimal form.
std::string format_double(double v);

Trajectory resample_uniform(const Trajectory& traj, double rate);

struct DiffOptions {
  int window = 11;
  int order = 3;
  double v_floor = 1.0;
};

// Savitzky-Golay weights for derivative `deriv` of a window of `window`
// samples, evaluated at `offset` samples from the window centre. Returned
// weights act on positions and still need the 1/dt^deriv scale.
std::vector<double> savgol_weights(int window, int order, int deriv, int offset = 0);

KinematicProfile differentiate(const Trajectory& traj, const DiffOptions& opts = {});

std::vector<double> compute_curvature(const std::vector<double>& vx, const std::vector<double>& vy,
                                      const std::vector<double>& ax, const std::vector<double>& ay,
                                      double v_floor);

// Profile from known states (positions plus true velocities). Accelerations
// are forward differences; no margin.
KinematicProfile profile_from_states(const Trajectory& traj, const std::vector<double>& vx,
                                     const std::vector<double>& vy, double v_floor = 1.0);

}  // namespace surgskill
