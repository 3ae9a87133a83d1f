#pragma once

// Reference mapping from human paths to robot end-effector paths (direct
// coupling and the bimanual shared-object frame) plus task-space execution
// simulators: a mass-spring-damper impedance model and a first-order human
// follower used to close the guidance loop at desk scale.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csefplan/ergo_field.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/trajectory.hpp"

namespace csefplan {

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

inline Pose make_pose(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation) {
  if (std::abs(orientation.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("pose: orientation quaternion must be normalized");
  return {position, orientation};
}

struct TimedPose {
  double t = 0.0;
  Pose pose;
};

struct PoseSequence {
  std::vector<TimedPose> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Position-only view as a task trajectory.
  Trajectory positions() const {
    Trajectory out;
    out.space = TrajectorySpace::Task;
    out.samples.reserve(samples.size());
    for (const TimedPose& s : samples) out.samples.push_back({s.t, s.pose.position});
    return out;
  }
};

/// Fixed rigid transform from the human hand frame to the robot reference.
struct CouplingTransform {
  Eigen::MatrixXd rotation;     // task_dim x task_dim, orthonormal
  Eigen::VectorXd translation;  // task_dim
};

inline CouplingTransform make_coupling_transform(Eigen::MatrixXd rotation,
                                                 Eigen::VectorXd translation) {
  if (rotation.rows() != rotation.cols() || rotation.rows() != translation.size())
    throw std::invalid_argument("coupling transform: dimension mismatch");
  const Eigen::MatrixXd gram = rotation.transpose() * rotation;
  if ((gram - Eigen::MatrixXd::Identity(rotation.rows(), rotation.cols())).cwiseAbs().maxCoeff() >
      1e-9)
    throw std::invalid_argument("coupling transform: rotation must be orthonormal");
  return {std::move(rotation), std::move(translation)};
}

inline CouplingTransform identity_coupling(int dim) {
  return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

/// Applies the fixed transform to every sample of a task trajectory.
inline Trajectory map_unimanual_reference(const CouplingTransform& t, const Trajectory& human) {
  if (human.space != TrajectorySpace::Task)
    throw std::invalid_argument("map_unimanual_reference: task trajectory required");
  if (!human.empty() && human.dim() != t.translation.size())
    throw std::invalid_argument("map_unimanual_reference: dimension mismatch");
  Trajectory out = human;
  for (TrajectorySample& s : out.samples) s.x = t.rotation * s.x + t.translation;
  return out;
}

/// Shared-object frame between the two human wrists: origin at their
/// midpoint, Y along left-to-right wrist, X the in-plane direction through
/// the robot end effectors (signed toward them), Z = X x Y.
inline Pose build_bimanual_frame(const Eigen::Vector3d& wrist_left,
                                 const Eigen::Vector3d& wrist_right, const Pose& ee_left,
                                 const Pose& ee_right) {
  const Eigen::Vector3d span = wrist_right - wrist_left;
  const double sn = span.norm();
  if (sn <= 1e-6) throw std::domain_error("bimanual frame: wrists coincide");

  const Eigen::Vector3d origin = 0.5 * (wrist_left + wrist_right);
  const Eigen::Vector3d y = span / sn;

  // X solves (in the plane spanned by the EE offsets) x . y = 0.
  const Eigen::Vector3d u1 = ee_left.position - origin;
  const Eigen::Vector3d u2 = ee_right.position - origin;
  Eigen::Vector3d x = u2.dot(y) * u1 - u1.dot(y) * u2;
  const double xn = x.norm();
  if (xn <= 1e-9)
    throw std::domain_error("bimanual frame: end effectors collinear with the wrist axis");
  x /= xn;
  if (x.dot(u1 + u2) < 0.0) x = -x;

  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = x.cross(y);
  return {origin, Eigen::Quaterniond(r).normalized()};
}

/// Rigidly carries the initial robot EE poses along a moving object frame:
/// per sample, R = R(W_k) R(W_0)^T rotates the initial origin-to-EE offsets
/// and the initial orientations; positions follow the frame origin.
inline std::pair<PoseSequence, PoseSequence> map_bimanual_references(const PoseSequence& frames,
                                                                     const Pose& ee_left0,
                                                                     const Pose& ee_right0) {
  if (frames.empty()) throw std::invalid_argument("map_bimanual_references: no frames");
  for (std::size_t k = 0; k < frames.samples.size(); ++k) {
    if (std::abs(frames.samples[k].pose.orientation.norm() - 1.0) > 1e-9)
      throw std::domain_error("map_bimanual_references: degenerate frame at sample " +
                              std::to_string(k));
  }
  const Pose& w0 = frames.samples.front().pose;
  const Eigen::Matrix3d r0t = w0.orientation.toRotationMatrix().transpose();
  const Eigen::Vector3d v_l = ee_left0.position - w0.position;
  const Eigen::Vector3d v_r = ee_right0.position - w0.position;

  PoseSequence left, right;
  left.samples.reserve(frames.size());
  right.samples.reserve(frames.size());
  for (const TimedPose& f : frames.samples) {
    const Eigen::Matrix3d rel = f.pose.orientation.toRotationMatrix() * r0t;
    const Eigen::Quaterniond relq(rel);
    left.samples.push_back(
        {f.t, {f.pose.position + rel * v_l, (relq * ee_left0.orientation).normalized()}});
    right.samples.push_back(
        {f.t, {f.pose.position + rel * v_r, (relq * ee_right0.orientation).normalized()}});
  }
  return {std::move(left), std::move(right)};
}

/// Diagonal task-space impedance: M xdd = K (x_d - x) + D (xd_d - xd) + F.
struct ImpedanceParams {
  Eigen::VectorXd mass;       // kg, diagonal of M_d
  Eigen::VectorXd stiffness;  // N/m, diagonal of K_d
  Eigen::VectorXd damping;    // N s/m, diagonal of D_d
  double dt = 1e-3;           // s
};

/// Critically damped defaults: M = 2 kg, K = 300 N/m, D = 2 sqrt(K M).
inline ImpedanceParams make_impedance_params(int dim) {
  ImpedanceParams p;
  p.mass = Eigen::VectorXd::Constant(dim, 2.0);
  p.stiffness = Eigen::VectorXd::Constant(dim, 300.0);
  p.damping = Eigen::VectorXd::Constant(dim, 2.0 * std::sqrt(300.0 * 2.0));
  return p;
}

inline void validate_impedance(const ImpedanceParams& p) {
  if (p.mass.size() != p.stiffness.size() || p.mass.size() != p.damping.size())
    throw std::invalid_argument("impedance params: dimension mismatch");
  if ((p.mass.array() <= 0.0).any() || (p.stiffness.array() <= 0.0).any() ||
      (p.damping.array() <= 0.0).any())
    throw std::invalid_argument("impedance params: diagonals must be > 0");
  if (!(p.dt > 0.0)) throw std::invalid_argument("impedance params: dt must be > 0");
}

/// Integrates the impedance dynamics with semi-implicit Euler (damping
/// handled implicitly, so the passive system dissipates at any dt). The
/// reference is interpolated linearly; its velocity is the segment slope.
/// external_force may be empty (zero force) or a task trajectory sampled
/// by interpolation.
inline Trajectory simulate_impedance(const ImpedanceParams& params, const Eigen::VectorXd& x0,
                                     const Trajectory& ref,
                                     const Trajectory& external_force = {}) {
  validate_impedance(params);
  if (ref.empty()) throw std::invalid_argument("simulate_impedance: empty reference");
  if (ref.space != TrajectorySpace::Task)
    throw std::invalid_argument("simulate_impedance: task-space reference required");
  const int d = ref.dim();
  if (x0.size() != d || params.mass.size() != d)
    throw std::invalid_argument("simulate_impedance: dimension mismatch");
  for (const TrajectorySample& s : external_force.samples) {
    if (!s.x.allFinite())
      throw std::invalid_argument("simulate_impedance: non-finite external force");
    if (s.x.size() != d)
      throw std::invalid_argument("simulate_impedance: force dimension mismatch");
  }

  const double dt = params.dt;
  const int steps = static_cast<int>(std::ceil(ref.duration() / dt - 1e-12));
  Eigen::VectorXd x = x0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);

  Trajectory out;
  out.space = TrajectorySpace::Task;
  out.samples.reserve(steps + 1);
  out.samples.push_back({0.0, x});

  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Eigen::VectorXd xd = ref.value_at(t);
    const Eigen::VectorXd xd_next = ref.value_at(t + dt);
    const Eigen::VectorXd vd = (xd_next - xd) / dt;
    const Eigen::VectorXd f =
        external_force.empty() ? Eigen::VectorXd::Zero(d) : external_force.value_at(t);

    // v+ = [v + dt/M (K e + D vd + F)] / (1 + dt D / M), per axis.
    const Eigen::ArrayXd num =
        v.array() + dt * (params.stiffness.array() * (xd - x).array() +
                          params.damping.array() * vd.array() + f.array()) /
                        params.mass.array();
    v = (num / (1.0 + dt * params.damping.array() / params.mass.array())).matrix();
    x += dt * v;
    out.samples.push_back({(k + 1) * dt, x});
  }
  return out;
}

namespace detail {
// Self-motion relaxation speed of the comfort-biased follower, rad/s.
inline constexpr double kSelfMotionRate = 2.0;
}  // namespace detail

/// First-order human follower: the hand moves toward the guided point with
/// lag time-constant `compliance` (0 = rigid coupling), and joint motion is
/// recovered by branch-continuous IK. The optional q0 fixes the starting
/// branch; otherwise the minimum-norm in-limit branch of the first sample
/// is used. Guidance up to 5 cm outside the attainable workspace is tracked
/// at the nearest attainable posture; farther than that throws.
///
/// With `comfort` set, a redundant follower also relaxes its self-motion
/// toward lower field values at the same lag constant (a person holding the
/// end effector settles the free elbow into a comfortable pose; the hand
/// constraint alone cannot steer that null direction).
inline Trajectory simulate_human_follower(const KinematicChain& chain, const Trajectory& guidance,
                                          double compliance,
                                          const std::optional<JointConfig>& q0 = std::nullopt,
                                          const ErgoSpec* comfort = nullptr) {
  if (guidance.empty()) throw std::invalid_argument("simulate_human_follower: empty guidance");
  if (guidance.space != TrajectorySpace::Task)
    throw std::invalid_argument("simulate_human_follower: task-space guidance required");
  if (!(compliance >= 0.0) || !std::isfinite(compliance))
    throw std::invalid_argument("simulate_human_follower: compliance must be >= 0");
  detail::check_task_dim(chain, guidance.samples.front().x);

  // A DLS iterate pinned against a joint limit can stall a few 1e-9 short of
  // the target even when it is reachable; anything under 1e-7 is tracked.
  // Guidance the limited arm cannot exactly reach at all (straight-line hand
  // references may exit the joint-limited workspace near a fold) is followed
  // to the nearest attainable posture; only a gap beyond kLostTol counts as
  // the guidance actually leaving the follower behind.
  constexpr double kIkTol = 1e-7;
  constexpr double kLostTol = 5e-2;
  const auto solve_at = [&](const TaskPoint& p, const std::optional<JointConfig>& prev,
                            std::size_t sample) -> JointConfig {
    if (chain.model == ChainModel::Planar2) {
      const auto pick = [&](const TaskPoint& target) -> std::optional<JointConfig> {
        std::optional<JointConfig> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const IkSolution& s : ik_planar(chain, target)) {
          if (!s.within_limits) continue;
          const double dd = prev ? (s.q - *prev).norm() : s.q.norm();
          if (dd < best_d) {
            best_d = dd;
            best = s.q;
          }
        }
        return best;
      };
      if (auto q = pick(p)) return *q;
      const Eigen::VectorXd rel = Eigen::VectorXd(p) - chain.base_pose;
      const double r = rel.norm();
      const double rc = std::clamp(r, chain.min_reach() + 1e-12, chain.max_reach() - 1e-12);
      if (r > 0.0 && std::abs(r - rc) <= kLostTol) {
        const TaskPoint clamped = chain.base_pose + (rc / r) * rel;
        if (auto q = pick(clamped)) return *q;
      }
      throw std::domain_error("simulate_human_follower: guidance unreachable at sample " +
                              std::to_string(sample));
    }
    const JointConfig seed =
        prev ? *prev : JointConfig(0.5 * (chain.limits.lower + chain.limits.upper));
    const IkResult r = ik_numeric(chain, p, seed, kIkTol);
    if ((r.converged || r.residual <= kLostTol) && chain.limits.contains(r.q, 1e-12)) return r.q;
    // Cornered against a workspace fold: reconfigure with the smallest jump
    // that regains tracking (a person flips the elbow through rather than
    // losing the handle).
    std::optional<JointConfig> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const JointConfig& s : detail::stratified_seeds(chain.limits)) {
      const IkResult m = ik_numeric(chain, p, s, kIkTol);
      if (!m.converged && m.residual > kLostTol) continue;
      if (!chain.limits.contains(m.q, 1e-12)) continue;
      const double dd = prev ? (m.q - *prev).norm() : m.q.norm();
      if (dd < best_d) {
        best_d = dd;
        best = m.q;
      }
    }
    if (best) return *best;
    throw std::domain_error("simulate_human_follower: guidance unreachable at sample " +
                            std::to_string(sample));
  };

  Trajectory out;
  out.space = TrajectorySpace::Joint;
  out.samples.reserve(guidance.size());

  JointConfig q = q0 ? *q0 : solve_at(guidance.samples.front().x, std::nullopt, 0);
  detail::check_dof(chain, q);
  out.samples.push_back({guidance.samples.front().t, q});

  const bool redundant = chain.dof() > chain.task_dim();
  for (std::size_t k = 1; k < guidance.samples.size(); ++k) {
    const double dt = guidance.samples[k].t - guidance.samples[k - 1].t;
    const double alpha = compliance <= 0.0 ? 1.0 : 1.0 - std::exp(-dt / compliance);
    const TaskPoint hand = forward_kinematics(chain, q);
    const TaskPoint target = hand + alpha * (guidance.samples[k].x - hand);
    q = solve_at(target, q, k);
    if (comfort && redundant) {
      // Nullspace comfort step: descend the field along self-motion only,
      // capped at kSelfMotionRate. The next tracking step absorbs the
      // second-order hand drift this introduces.
      const Eigen::MatrixXd j = jacobian(chain, q);
      const Eigen::MatrixXd a =
          j * j.transpose() +
          1e-12 * Eigen::MatrixXd::Identity(chain.task_dim(), chain.task_dim());
      const Eigen::VectorXd grad = csef_gradient(*comfort, q);
      const Eigen::VectorXd dq = grad - j.transpose() * a.ldlt().solve(j * grad);
      const double n = dq.norm();
      if (n > 1e-12) {
        const double mag = std::min(alpha * n, detail::kSelfMotionRate * dt);
        q = clamp_to_limits(q - (mag / n) * dq, chain.limits);
      }
    }
    out.samples.push_back({guidance.samples[k].t, q});
  }
  return out;
}

}  // namespace csefplan
