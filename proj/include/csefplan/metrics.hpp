#pragma once

// Per-trajectory benchmark metrics: field statistics, path lengths, timing.

#include <algorithm>
#include <stdexcept>

#include "csefplan/ergo_field.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/trajectory.hpp"

namespace csefplan {

struct MetricsRecord {
  double avg_csef = 0.0;
  double max_csef = 0.0;
  double cartesian_path_length = 0.0;  // m
  double joint_path_length = 0.0;      // rad
  double compute_time = 0.0;           // s
  bool success = false;
};

/// Field and path-length statistics of a joint-space trajectory. Path
/// lengths are unweighted Euclidean sums over consecutive samples.
inline MetricsRecord compute_metrics(const ErgoSpec& spec, const KinematicChain& chain,
                                     const Trajectory& traj, double wall_time, bool success) {
  if (traj.empty()) throw std::invalid_argument("compute_metrics: empty trajectory");
  if (traj.space != TrajectorySpace::Joint)
    throw std::invalid_argument("compute_metrics: joint-space trajectory required");

  MetricsRecord m;
  m.compute_time = wall_time;
  m.success = success;

  double sum = 0.0;
  TaskPoint prev_p;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const JointConfig& q = traj.samples[i].x;
    const double v = csef_value(spec, q);
    sum += v;
    m.max_csef = std::max(m.max_csef, v);
    const TaskPoint p = forward_kinematics(chain, q);
    if (i > 0) {
      m.joint_path_length += (q - traj.samples[i - 1].x).norm();
      m.cartesian_path_length += (p - prev_p).norm();
    }
    prev_p = p;
  }
  m.avg_csef = sum / static_cast<double>(traj.samples.size());
  return m;
}

}  // namespace csefplan
