#pragma once

// Chain models and kinematics for the two arm models used throughout the
// library: a 2-DoF planar arm and a 4-DoF upper limb (three shoulder axes
// plus one elbow axis).
//
// UpperLimb4 frame convention (right arm, torso-fixed frame):
//   X anterior, Y lateral, Z up. At q = 0 the arm hangs along -Z with the
//   elbow extended.
//
//   Shoulder rotation:  R_s(q) = Rot_x(q1) * Rot_y(-q2) * Rot_z(-q3)
//     q1  abduction/adduction      (+q1 raises the arm toward +Y)
//     q2  flexion/extension        (+q2 raises the arm toward +X)
//     q3  internal/external rotation about the humerus long axis
//         (+q3 swings the elbow-flexion plane toward -Y)
//   Elbow rotation:     R_e(q4) = Rot_y(-q4)
//     q4  elbow flexion            (+q4 brings the hand toward local +X)
//
//   elbow = base + R_s * (0, 0, -l_ua)
//   wrist = elbow + R_s * R_e * (0, 0, -l_fa)
//
// All joint angles are radians, all lengths meters.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace csefplan {

using JointConfig = Eigen::VectorXd;
using TaskPoint = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct JointLimits {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dof() const { return static_cast<int>(lower.size()); }

  bool contains(const JointConfig& q, double slack = 0.0) const {
    if (q.size() != lower.size()) return false;
    for (int i = 0; i < q.size(); ++i) {
      if (q[i] < lower[i] - slack || q[i] > upper[i] + slack) return false;
    }
    return true;
  }
};

inline JointLimits make_limits(std::initializer_list<double> lo,
                               std::initializer_list<double> hi) {
  JointLimits lim;
  lim.lower = Eigen::Map<const Eigen::VectorXd>(std::data(lo), static_cast<int>(lo.size()));
  lim.upper = Eigen::Map<const Eigen::VectorXd>(std::data(hi), static_cast<int>(hi.size()));
  if (lim.lower.size() != lim.upper.size())
    throw std::invalid_argument("joint limits: lower/upper size mismatch");
  for (int i = 0; i < lim.lower.size(); ++i) {
    if (!(lim.lower[i] < lim.upper[i]))
      throw std::invalid_argument("joint limits: lower must be < upper");
  }
  return lim;
}

inline JointConfig clamp_to_limits(const JointConfig& q, const JointLimits& lim) {
  JointConfig out = q;
  for (int i = 0; i < out.size(); ++i)
    out[i] = std::clamp(out[i], lim.lower[i], lim.upper[i]);
  return out;
}

enum class ChainModel { Planar2, UpperLimb4 };

struct KinematicChain {
  ChainModel model = ChainModel::Planar2;
  std::vector<double> link_lengths;  // {l1, l2} or {l_upper_arm, l_forearm}
  TaskPoint base_pose;               // task-space position of the chain origin
  JointLimits limits;

  int dof() const { return model == ChainModel::Planar2 ? 2 : 4; }
  int task_dim() const { return model == ChainModel::Planar2 ? 2 : 3; }
  double max_reach() const { return link_lengths[0] + link_lengths[1]; }
  double min_reach() const { return std::abs(link_lengths[0] - link_lengths[1]); }
};

inline KinematicChain make_chain(ChainModel model, std::vector<double> lengths,
                                 TaskPoint base, JointLimits limits) {
  KinematicChain c{model, std::move(lengths), std::move(base), std::move(limits)};
  if (c.link_lengths.size() != 2)
    throw std::invalid_argument("chain: expected 2 link lengths");
  for (double l : c.link_lengths)
    if (!(l > 0.0)) throw std::invalid_argument("chain: link lengths must be > 0");
  if (c.base_pose.size() != c.task_dim())
    throw std::invalid_argument("chain: base pose dimension mismatch");
  if (c.limits.dof() != c.dof())
    throw std::invalid_argument("chain: joint limits dimension mismatch");
  return c;
}

namespace detail {

inline void check_dof(const KinematicChain& chain, const JointConfig& q) {
  if (q.size() != chain.dof())
    throw std::invalid_argument("joint configuration dimension does not match chain");
  if (!q.allFinite())
    throw std::invalid_argument("joint configuration has non-finite entries");
}

inline void check_task_dim(const KinematicChain& chain, const TaskPoint& p) {
  if (p.size() != chain.task_dim())
    throw std::invalid_argument("task point dimension does not match chain");
}

inline Eigen::Matrix3d rot_x(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

inline Eigen::Matrix3d rot_y(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

inline Eigen::Matrix3d rot_z(double t) {
  const double c = std::cos(t), s = std::sin(t);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

inline Eigen::Matrix3d shoulder_rotation(const JointConfig& q) {
  return rot_x(q[0]) * rot_y(-q[1]) * rot_z(-q[2]);
}

}  // namespace detail

/// End-effector position for the given configuration, base offset included.
inline TaskPoint forward_kinematics(const KinematicChain& chain, const JointConfig& q) {
  detail::check_dof(chain, q);
  const double l1 = chain.link_lengths[0], l2 = chain.link_lengths[1];
  if (chain.model == ChainModel::Planar2) {
    TaskPoint p(2);
    p[0] = l1 * std::cos(q[0]) + l2 * std::cos(q[0] + q[1]);
    p[1] = l1 * std::sin(q[0]) + l2 * std::sin(q[0] + q[1]);
    return p + chain.base_pose;
  }
  const Eigen::Matrix3d rs = detail::shoulder_rotation(q);
  const Eigen::Vector3d elbow = rs * Eigen::Vector3d(0, 0, -l1);
  const Eigen::Vector3d wrist =
      elbow + rs * detail::rot_y(-q[3]) * Eigen::Vector3d(0, 0, -l2);
  return TaskPoint(wrist + Eigen::Vector3d(chain.base_pose));
}

/// Position Jacobian dFK/dq, task_dim x dof.
inline Eigen::MatrixXd jacobian(const KinematicChain& chain, const JointConfig& q) {
  detail::check_dof(chain, q);
  const double l1 = chain.link_lengths[0], l2 = chain.link_lengths[1];
  if (chain.model == ChainModel::Planar2) {
    const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
    const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
    Eigen::MatrixXd j(2, 2);
    j << -l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12;
    return j;
  }
  // Geometric Jacobian: column i is a_i x (p - c_i) with a_i the world-frame
  // joint axis and c_i a point on that axis. Shoulder axes intersect at the
  // base, the elbow axis passes through the elbow.
  const Eigen::Matrix3d r1 = detail::rot_x(q[0]);
  const Eigen::Matrix3d r12 = r1 * detail::rot_y(-q[1]);
  const Eigen::Matrix3d rs = r12 * detail::rot_z(-q[2]);
  const Eigen::Vector3d base = Eigen::Vector3d(chain.base_pose);
  const Eigen::Vector3d elbow = base + rs * Eigen::Vector3d(0, 0, -l1);
  const Eigen::Vector3d wrist =
      elbow + rs * detail::rot_y(-q[3]) * Eigen::Vector3d(0, 0, -l2);

  const Eigen::Vector3d a1(1, 0, 0);
  const Eigen::Vector3d a2 = r1 * Eigen::Vector3d(0, -1, 0);
  const Eigen::Vector3d a3 = r12 * Eigen::Vector3d(0, 0, -1);
  const Eigen::Vector3d a4 = rs * Eigen::Vector3d(0, -1, 0);

  Eigen::MatrixXd j(3, 4);
  j.col(0) = a1.cross(wrist - base);
  j.col(1) = a2.cross(wrist - base);
  j.col(2) = a3.cross(wrist - base);
  j.col(3) = a4.cross(wrist - elbow);
  return j;
}

/// One analytic inverse-kinematics branch. Out-of-limit solutions are
/// returned with within_limits = false so callers can distinguish
/// unreachability from infeasibility.
struct IkSolution {
  JointConfig q;
  bool within_limits = false;
};

/// Analytic IK for the planar chain. Returns 0, 1 or 2 branches with all
/// angles normalized to (-pi, pi]. Empty when p lies outside the workspace
/// annulus.
inline std::vector<IkSolution> ik_planar(const KinematicChain& chain, const TaskPoint& p) {
  if (chain.model != ChainModel::Planar2)
    throw std::invalid_argument("ik_planar requires a Planar2 chain");
  detail::check_task_dim(chain, p);
  const double l1 = chain.link_lengths[0], l2 = chain.link_lengths[1];
  const Eigen::Vector2d v = Eigen::Vector2d(p) - Eigen::Vector2d(chain.base_pose);
  const double d = (v.squaredNorm() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);

  // Tolerance on the cosine keeps workspace-boundary targets solvable; the
  // induced FK error stays below 1e-9 m.
  constexpr double kBoundaryEps = 1e-9;
  if (d > 1.0 + kBoundaryEps || d < -1.0 - kBoundaryEps) return {};
  const double dc = std::clamp(d, -1.0, 1.0);
  const double elbow = std::acos(dc);  // in [0, pi]

  std::vector<double> branches;
  if (elbow < 1e-9 || kPi - elbow < 1e-9) {
    branches.push_back(normalize_angle(elbow));
  } else {
    branches.push_back(elbow);
    branches.push_back(-elbow);
  }

  std::vector<IkSolution> out;
  for (double q2 : branches) {
    const double q1 = std::atan2(v.y(), v.x()) -
                      std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    JointConfig q(2);
    q << normalize_angle(q1), normalize_angle(q2);
    out.push_back({q, chain.limits.contains(q)});
  }
  return out;
}

struct IkOptions {
  int max_iters = 200;
  double damping = 0.05;     // damped-least-squares lambda
  double step_clamp = 0.2;   // max joint-space step norm per iteration, rad
};

/// Numeric IK result; converged = false is an explicit failure, the returned
/// configuration is then merely the last iterate.
struct IkResult {
  JointConfig q;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped-least-squares IK from a seed, limit-clamped at every step.
inline IkResult ik_numeric(const KinematicChain& chain, const TaskPoint& p,
                           const JointConfig& seed, double tol,
                           const IkOptions& opts = {}) {
  detail::check_dof(chain, seed);
  detail::check_task_dim(chain, p);
  JointConfig q = clamp_to_limits(seed, chain.limits);
  const double lambda2 = opts.damping * opts.damping;
  const int m = chain.task_dim();
  for (int it = 0; it <= opts.max_iters; ++it) {
    const Eigen::VectorXd err = Eigen::VectorXd(p) - forward_kinematics(chain, q);
    const double r = err.norm();
    if (r <= tol) return {q, true, it, r};
    if (it == opts.max_iters) return {q, false, it, r};
    const Eigen::MatrixXd j = jacobian(chain, q);
    // Damping shrinks with the residual so near-singular targets (hand close
    // to the reach shell) still converge instead of stalling at ~lambda^2.
    const double lam2 = std::min(lambda2, r * r);
    const Eigen::MatrixXd a =
        j * j.transpose() + lam2 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd dq = j.transpose() * a.ldlt().solve(err);
    const double n = dq.norm();
    if (n > opts.step_clamp) dq *= opts.step_clamp / n;
    q = clamp_to_limits(q + dq, chain.limits);
  }
  return {q, false, opts.max_iters, (Eigen::VectorXd(p) - forward_kinematics(chain, q)).norm()};
}

}  // namespace csefplan
