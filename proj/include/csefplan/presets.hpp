#pragma once

// Canonical benchmark instances shared by tests, demos, and the CLI:
// a planar two-link arm benchmark, its mirrored two-arm variant, and a
// 4-DoF upper-limb model with anatomical joint limits.

#include <Eigen/Dense>

#include "csefplan/ergo_field.hpp"
#include "csefplan/kinematics.hpp"

namespace csefplan::presets {

/// Two-link planar arm: l1 = 1.0 m, l2 = 0.8 m, limits [-pi, pi] per joint.
inline KinematicChain planar_arm(const Eigen::Vector2d& base = Eigen::Vector2d::Zero()) {
  return make_chain(ChainModel::Planar2, {1.0, 0.8}, TaskPoint(base),
                    make_limits({-kPi, -kPi}, {kPi, kPi}));
}

/// Planar benchmark field: q_opt = (pi/4, -pi/3), unit weights, radius 0.5.
inline ErgoSpec planar_ergo() {
  JointConfig q_opt(2);
  q_opt << kPi / 4.0, -kPi / 3.0;
  return make_ergo_spec(q_opt, Eigen::Vector2d::Ones(), 0.5,
                        make_limits({-kPi, -kPi}, {kPi, kPi}));
}

/// Mirror image of the planar benchmark about a vertical plane: the
/// configuration (q1, q2) maps to (pi - q1, -q2), so the mirrored optimum
/// is (3pi/4, pi/3).
inline ErgoSpec planar_ergo_mirrored() {
  JointConfig q_opt(2);
  q_opt << 3.0 * kPi / 4.0, kPi / 3.0;
  return make_ergo_spec(q_opt, Eigen::Vector2d::Ones(), 0.5,
                        make_limits({-kPi, -kPi}, {kPi, kPi}));
}

inline JointLimits upper_limb_limits() {
  return make_limits({-kPi / 18.0, -kPi / 3.0, -kPi / 3.0, -kPi / 2.0},
                     {17.0 * kPi / 18.0, 17.0 * kPi / 18.0, kPi / 2.0, kPi / 3.0});
}

/// 4-DoF upper limb (3 shoulder axes + elbow) with anatomical limits.
/// Segment lengths 0.30 / 0.25 m are adult averages; declared defaults.
inline KinematicChain upper_limb_arm(const Eigen::Vector3d& base = Eigen::Vector3d::Zero()) {
  return make_chain(ChainModel::UpperLimb4, {0.30, 0.25}, TaskPoint(base), upper_limb_limits());
}

/// Upper-limb field: q_opt = (0, 0, 0, pi/6), weights (1, 1, 1, 2), the
/// elbow weighted double. Region radius 0.5 (weighted radians), a declared
/// default matching the planar benchmark.
inline ErgoSpec upper_limb_ergo() {
  JointConfig q_opt(4);
  q_opt << 0.0, 0.0, 0.0, kPi / 6.0;
  Eigen::VectorXd w(4);
  w << 1.0, 1.0, 1.0, 2.0;
  return make_ergo_spec(q_opt, w, 0.5, upper_limb_limits());
}

/// Default task-space grid bounds for the planar arm: the reach square.
inline void planar_grid_bounds(const KinematicChain& chain, Eigen::VectorXd& lo,
                               Eigen::VectorXd& hi) {
  const double r = chain.max_reach();
  lo = chain.base_pose.array() - r;
  hi = chain.base_pose.array() + r;
}

}  // namespace csefplan::presets
