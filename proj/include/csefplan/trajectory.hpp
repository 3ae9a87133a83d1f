#pragma once

// Time-stamped sample sequences in joint or task space, shared by the
// planners, the execution simulators, and the file formats.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace csefplan {

enum class TrajectorySpace { Joint, Task };

struct TrajectorySample {
  double t = 0.0;  // seconds
  Eigen::VectorXd x;
};

struct Trajectory {
  TrajectorySpace space = TrajectorySpace::Joint;
  std::vector<TrajectorySample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().x.size()); }

  /// Linear interpolation at time t, clamped to the first/last sample.
  Eigen::VectorXd value_at(double t) const {
    if (samples.empty()) throw std::invalid_argument("trajectory is empty");
    if (t <= samples.front().t) return samples.front().x;
    if (t >= samples.back().t) return samples.back().x;
    std::size_t hi = 1;
    while (samples[hi].t < t) ++hi;
    const TrajectorySample& a = samples[hi - 1];
    const TrajectorySample& b = samples[hi];
    const double u = (t - a.t) / (b.t - a.t);
    return a.x + u * (b.x - a.x);
  }
};

/// Throws unless times start at 0, strictly increase, and dimensions agree.
inline void validate_trajectory(const Trajectory& traj) {
  if (traj.samples.empty()) throw std::invalid_argument("trajectory is empty");
  if (traj.samples.front().t != 0.0)
    throw std::invalid_argument("trajectory must start at time 0");
  const int d = traj.dim();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    if (traj.samples[i].x.size() != d)
      throw std::invalid_argument("trajectory sample " + std::to_string(i) +
                                  ": dimension mismatch");
    if (i > 0 && !(traj.samples[i].t > traj.samples[i - 1].t))
      throw std::invalid_argument("trajectory sample " + std::to_string(i) +
                                  ": times must be strictly increasing");
  }
}

}  // namespace csefplan
