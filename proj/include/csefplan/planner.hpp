#pragma once

// Trajectory generation.
//
//   plan_csef_descent   gradient descent of the joint-space field (Case 1)
//   plan_csef_to_goal   goal attraction blended with field descent (Case 2)
//   plan_bimanual       coupled two-arm descent with constraint projection
//   plan_tsef_baseline  grid search over the task-space field (baseline)
//   plan_min_jerk       quintic point-to-point reference (baseline)
//
// All planners are deterministic for fixed inputs and rng_seed, emit only
// in-limit samples, and time-stamp steps at a fixed 0.01 s interval.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csefplan/ergo_field.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/metrics.hpp"
#include "csefplan/rng.hpp"
#include "csefplan/target_opt.hpp"
#include "csefplan/trajectory.hpp"

namespace csefplan {

struct PlannerParams {
  double step_size = 0.01;     // a, rad per step
  double goal_weight = 1.0;    // attraction toward the goal
  double ergo_weight = 0.5;    // descent of the ergonomic field
  double perturb_scale = 0.02; // stall-escape perturbation amplitude, rad
  int max_steps = 5000;
  double goal_tol = 0.01;      // rad (joint-space goals) or m (task-space)
  std::uint64_t rng_seed = 0;
};

inline void validate_params(const PlannerParams& p) {
  if (!(p.step_size > 0.0)) throw std::invalid_argument("planner params: step_size must be > 0");
  if (p.max_steps < 1) throw std::invalid_argument("planner params: max_steps must be >= 1");
  if (p.goal_weight < 0.0 || p.ergo_weight < 0.0 || p.perturb_scale < 0.0)
    throw std::invalid_argument("planner params: weights must be >= 0");
  if (!(p.goal_weight + p.ergo_weight > 0.0))
    throw std::invalid_argument("planner params: goal_weight + ergo_weight must be > 0");
  if (!(p.goal_tol > 0.0)) throw std::invalid_argument("planner params: goal_tol must be > 0");
}

enum class PlanStatus { Success, MaxStepsExceeded, Infeasible };

struct PlanResult {
  Trajectory trajectory;
  PlanStatus status = PlanStatus::Infeasible;
  MetricsRecord metrics;
  double wall_time = 0.0;  // s, planning only
};

namespace detail {

inline constexpr double kDt = 0.01;        // s per planner step
inline constexpr double kValueEps = 1e-12; // field value treated as zero
inline constexpr int kStallWindow = 10;    // steps
inline constexpr double kStallProgress = 1e-4;  // rad per window

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// Metrics without a chain: path length in joint space only.
inline MetricsRecord joint_only_metrics(const ErgoSpec& spec, const Trajectory& traj,
                                        double wall_time, bool success) {
  MetricsRecord m;
  m.compute_time = wall_time;
  m.success = success;
  if (traj.empty()) return m;
  double sum = 0.0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double v = csef_value(spec, traj.samples[i].x);
    sum += v;
    m.max_csef = std::max(m.max_csef, v);
    if (i > 0) m.joint_path_length += (traj.samples[i].x - traj.samples[i - 1].x).norm();
  }
  m.avg_csef = sum / static_cast<double>(traj.samples.size());
  return m;
}

inline MetricsRecord finish_metrics(const ErgoSpec& spec, const KinematicChain* chain,
                                    const Trajectory& traj, double wall_time, bool success) {
  if (chain && !traj.empty()) return compute_metrics(spec, *chain, traj, wall_time, success);
  return joint_only_metrics(spec, traj, wall_time, success);
}

}  // namespace detail

/// Case 1: pure field descent until the ergonomic region is entered. The
/// field value is non-increasing along the returned trajectory. The
/// optional chain only enriches metrics with the Cartesian path length.
inline PlanResult plan_csef_descent(const ErgoSpec& spec, const JointConfig& q0,
                                    const PlannerParams& params = {},
                                    const KinematicChain* chain = nullptr) {
  validate_params(params);
  if (!spec.limits.contains(q0))
    throw std::invalid_argument("plan_csef_descent: start outside joint limits");
  const detail::Stopwatch sw;

  Trajectory traj;
  traj.space = TrajectorySpace::Joint;
  JointConfig q = q0;
  traj.samples.push_back({0.0, q});

  PlanStatus status = PlanStatus::MaxStepsExceeded;
  if (csef_value(spec, q) <= detail::kValueEps) {
    status = PlanStatus::Success;
  } else {
    for (int k = 1; k <= params.max_steps; ++k) {
      q = gradient_projection_step(spec, q, params.step_size, /*unit_step=*/true);
      traj.samples.push_back({k * detail::kDt, q});
      if (csef_value(spec, q) <= detail::kValueEps) {
        status = PlanStatus::Success;
        break;
      }
    }
  }

  PlanResult r;
  r.trajectory = std::move(traj);
  r.status = status;
  r.wall_time = sw.seconds();
  r.metrics = detail::finish_metrics(spec, chain, r.trajectory, r.wall_time,
                                     status == PlanStatus::Success);
  return r;
}

/// Case 2: per step the direction blends goal_weight * unit(q_goal - q)
/// with ergo_weight * (-grad f). A uniform perturbation in
/// [-perturb_scale, perturb_scale] per joint is added only while
/// goal-distance progress over the last 10 steps falls below 1e-4 rad.
inline PlanResult plan_csef_to_goal(const ErgoSpec& spec, const JointConfig& q0,
                                    const JointConfig& q_goal, const PlannerParams& params = {},
                                    const KinematicChain* chain = nullptr) {
  validate_params(params);
  if (!spec.limits.contains(q0))
    throw std::invalid_argument("plan_csef_to_goal: start outside joint limits");
  if (!spec.limits.contains(q_goal))
    throw std::invalid_argument("plan_csef_to_goal: goal outside joint limits");
  const detail::Stopwatch sw;
  Rng rng(params.rng_seed);

  Trajectory traj;
  traj.space = TrajectorySpace::Joint;
  traj.samples.reserve(static_cast<std::size_t>(params.max_steps) + 1);
  JointConfig q = q0;
  traj.samples.push_back({0.0, q});

  PlanStatus status = PlanStatus::MaxStepsExceeded;
  std::vector<double> dist_hist{(q_goal - q).norm()};
  dist_hist.reserve(static_cast<std::size_t>(params.max_steps) + 1);
  if (dist_hist[0] <= params.goal_tol) {
    status = PlanStatus::Success;
  } else {
    Eigen::VectorXd grad(q.size()), dir(q.size());
    for (int k = 1; k <= params.max_steps; ++k) {
      const double dist = dist_hist.back();
      csef_eval(spec, q, grad);
      dir = params.goal_weight * (q_goal - q) / dist;
      dir -= params.ergo_weight * grad;
      const double dn = dir.norm();
      if (dn > 1e-12)
        dir /= dn;
      else
        dir.setZero();

      const bool stalled =
          dist_hist.size() > detail::kStallWindow &&
          dist_hist[dist_hist.size() - 1 - detail::kStallWindow] - dist < detail::kStallProgress;
      if (stalled && params.perturb_scale > 0.0) {
        for (int i = 0; i < dir.size(); ++i)
          dir[i] += rng.uniform(-params.perturb_scale, params.perturb_scale);
      }

      q += std::min(params.step_size, dist) * dir;
      for (int i = 0; i < q.size(); ++i)
        q[i] = std::clamp(q[i], spec.limits.lower[i], spec.limits.upper[i]);
      traj.samples.push_back({k * detail::kDt, q});
      dist_hist.push_back((q_goal - q).norm());
      if (dist_hist.back() <= params.goal_tol) {
        status = PlanStatus::Success;
        break;
      }
    }
  }

  PlanResult r;
  r.trajectory = std::move(traj);
  r.status = status;
  r.wall_time = sw.seconds();
  r.metrics = detail::finish_metrics(spec, chain, r.trajectory, r.wall_time,
                                     status == PlanStatus::Success);
  return r;
}

/// Coupled two-arm planning toward the solve_bimanual optimum. Every
/// emitted sample pair satisfies the inter-hand distance constraint within
/// eps_task: each blended step is projected back onto the constraint by at
/// most 5 Gauss-Newton corrections and retried at half length whenever the
/// projected step breaks the per-joint step bound.
inline std::pair<PlanResult, PlanResult> plan_bimanual(const BimanualTarget& t,
                                                       const JointConfig& q0_l,
                                                       const JointConfig& q0_r,
                                                       const PlannerParams& params = {},
                                                       const BimanualSolverParams& solver = {}) {
  validate_params(params);
  if (!(t.eps_task > 0.0))
    throw std::invalid_argument("plan_bimanual: eps_task must be > 0");
  if (!t.chain_left.limits.contains(q0_l) || !t.chain_right.limits.contains(q0_r))
    throw std::invalid_argument("plan_bimanual: start outside joint limits");
  const detail::Stopwatch sw;

  const int nl = t.chain_left.dof();
  const int nr = t.chain_right.dof();
  Eigen::VectorXd z(nl + nr);
  z << q0_l, q0_r;

  Trajectory tl, tr;
  tl.space = tr.space = TrajectorySpace::Joint;
  tl.samples.push_back({0.0, q0_l});
  tr.samples.push_back({0.0, q0_r});

  auto finish = [&](PlanStatus status) {
    const double wall = sw.seconds();
    PlanResult left, right;
    left.trajectory = std::move(tl);
    right.trajectory = std::move(tr);
    left.status = right.status = status;
    left.wall_time = right.wall_time = wall;
    const bool ok = status == PlanStatus::Success;
    left.metrics = compute_metrics(t.spec_left, t.chain_left, left.trajectory, wall, ok);
    right.metrics = compute_metrics(t.spec_right, t.chain_right, right.trajectory, wall, ok);
    return std::make_pair(std::move(left), std::move(right));
  };

  if (std::abs(detail::bimanual_eval(t, z).g) >= t.eps_task) return finish(PlanStatus::Infeasible);

  BimanualSolverParams sp = solver;
  sp.rng_seed = derive_seed(params.rng_seed, 0x62696d61);  // decouple from step noise
  const BimanualSolution target = solve_bimanual(t, sp);
  if (!target.feasible) return finish(PlanStatus::Infeasible);

  Eigen::VectorXd z_goal(nl + nr);
  z_goal << target.q_left, target.q_right;
  Eigen::VectorXd winv(nl + nr);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();
  const double repair_tol = std::min(1e-10, 0.01 * t.eps_task);
  const double step_bound = params.step_size * (1.0 + params.perturb_scale);

  if ((z_goal - z).norm() <= params.goal_tol) return finish(PlanStatus::Success);

  for (int k = 1; k <= params.max_steps; ++k) {
    const detail::BimanualEval e = detail::bimanual_eval(t, z);
    const double dist = (z_goal - z).norm();
    Eigen::VectorXd dir = params.goal_weight * (z_goal - z) / dist - params.ergo_weight * e.grad_f;
    const double dn = dir.norm();
    if (dn < 1e-12) break;
    dir /= dn;

    bool moved = false;
    double s = std::min(params.step_size, dist);
    for (int h = 0; h < 8 && !moved; ++h, s *= 0.5) {
      Eigen::VectorXd zc = detail::clamp_stacked(t, z + s * dir);
      if (!detail::repair_coupling(t, winv, zc, repair_tol, 5)) continue;
      if (std::abs(detail::bimanual_eval(t, zc).g) >= t.eps_task) continue;
      if (((zc - z).cwiseAbs().maxCoeff()) > step_bound) continue;
      z = zc;
      moved = true;
    }
    if (!moved) break;  // cannot advance while holding the constraint

    tl.samples.push_back({k * detail::kDt, z.head(nl)});
    tr.samples.push_back({k * detail::kDt, z.tail(nr)});
    if ((z_goal - z).norm() <= params.goal_tol) return finish(PlanStatus::Success);
  }
  return finish(PlanStatus::MaxStepsExceeded);
}

/// Grid-search baseline over the task-space field: A* on the 8-connected
/// lattice with edge cost = step length * (1 + field value at the target
/// node), penalty nodes excluded. Endpoints snap to their nearest lattice
/// nodes, so the plan connects those nodes (quantization <= half a cell
/// diagonal). The joint path is recovered by walking the smoothed task
/// path at sub-cell pitch, taking the in-limit branch nearest the previous
/// sample, and densified so per-joint steps stay within step_size; a jump
/// above 0.5 rad between consecutive sub-waypoints aborts as Infeasible,
/// which is exactly the near-singularity failure mode this baseline is
/// known for. q0_branch anchors the starting branch to a known posture;
/// without it the lowest-field branch starts the walk (the field is a min
/// over branches, so the walked branch can be far costlier than the grid
/// values promised).
inline PlanResult plan_tsef_baseline(const ErgoSpec& spec, const KinematicChain& chain,
                                     const TaskPoint& p0, const TaskPoint& p_goal,
                                     const FieldGrid& grid, const PlannerParams& params = {},
                                     const JointConfig* q0_branch = nullptr) {
  validate_params(params);
  if (chain.model != ChainModel::Planar2 || grid.dim() != 2)
    throw std::invalid_argument("plan_tsef_baseline: requires a planar chain and 2-D grid");
  detail::check_task_dim(chain, p0);
  detail::check_task_dim(chain, p_goal);
  if (!grid.in_bounds(p0) || !grid.in_bounds(p_goal))
    throw std::invalid_argument("plan_tsef_baseline: endpoint outside grid bounds");
  const detail::Stopwatch sw;

  PlanResult r;
  r.trajectory.space = TrajectorySpace::Joint;
  auto finish = [&](PlanStatus status) {
    r.status = status;
    r.wall_time = sw.seconds();
    r.metrics = detail::finish_metrics(spec, &chain, r.trajectory, r.wall_time,
                                       status == PlanStatus::Success);
    return std::move(r);
  };

  const std::size_t start = grid.flat_index(grid.nearest_index(p0));
  const std::size_t goal = grid.flat_index(grid.nearest_index(p_goal));
  if (!grid.reachable[start] || !grid.reachable[goal]) return finish(PlanStatus::Infeasible);

  const int rx = grid.resolution[0], ry = grid.resolution[1];
  const double hx = grid.spacing(0), hy = grid.spacing(1);
  const auto node_pt = [&](std::size_t f) {
    return Eigen::Vector2d(grid.lo[0] + static_cast<double>(f % rx) * hx,
                           grid.lo[1] + static_cast<double>(f / rx) * hy);
  };
  const Eigen::Vector2d goal_pt = node_pt(goal);

  constexpr std::size_t kNodeBudget = 1000000;
  const std::size_t n = grid.size();
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<std::uint8_t> closed(n, 0);

  using Entry = std::pair<double, std::size_t>;  // (f, node), min-heap
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  cost[start] = 0.0;
  open.push({(node_pt(start) - goal_pt).norm(), start});

  std::size_t expanded = 0;
  bool found = false;
  while (!open.empty()) {
    const std::size_t u = open.top().second;
    open.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == goal) {
      found = true;
      break;
    }
    if (++expanded > kNodeBudget) return finish(PlanStatus::MaxStepsExceeded);

    const int ux = static_cast<int>(u % rx), uy = static_cast<int>(u / rx);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int vx = ux + dx, vy = uy + dy;
        if (vx < 0 || vx >= rx || vy < 0 || vy >= ry) continue;
        const std::size_t v = static_cast<std::size_t>(vy) * rx + vx;
        if (closed[v] || !grid.reachable[v]) continue;
        const double len = std::hypot(dx * hx, dy * hy);
        const double c = cost[u] + len * (1.0 + grid.values[v]);
        if (c < cost[v]) {
          cost[v] = c;
          parent[v] = u;
          open.push({c + (node_pt(v) - goal_pt).norm(), v});
        }
      }
    }
  }
  if (!found) return finish(PlanStatus::Infeasible);

  std::vector<std::size_t> path;
  for (std::size_t u = goal; u != n; u = parent[u]) {
    path.push_back(u);
    if (u == start) break;
  }
  std::reverse(path.begin(), path.end());

  // Smooth by merging collinear runs in index space.
  std::vector<Eigen::Vector2d> waypoints{node_pt(path.front())};
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const auto [ax, ay] = std::pair(path[i - 1] % rx, path[i - 1] / rx);
    const auto [bx, by] = std::pair(path[i] % rx, path[i] / rx);
    const auto [cx, cy] = std::pair(path[i + 1] % rx, path[i + 1] / rx);
    const long d1x = static_cast<long>(bx) - static_cast<long>(ax);
    const long d1y = static_cast<long>(by) - static_cast<long>(ay);
    const long d2x = static_cast<long>(cx) - static_cast<long>(bx);
    const long d2y = static_cast<long>(cy) - static_cast<long>(by);
    if (d1x != d2x || d1y != d2y) waypoints.push_back(node_pt(path[i]));
  }
  if (path.size() > 1) waypoints.push_back(node_pt(path.back()));

  // Walk the smoothed path densely enough that the nearest-branch rule only
  // jumps at a genuine branch discontinuity.
  std::vector<TaskPoint> walk{TaskPoint(waypoints.front())};
  const double pitch = 0.5 * std::min(hx, hy);
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Eigen::Vector2d a = waypoints[i - 1], b = waypoints[i];
    const int sub = std::max(1, static_cast<int>(std::ceil((b - a).norm() / pitch)));
    for (int j = 1; j <= sub; ++j)
      walk.push_back(TaskPoint(a + (static_cast<double>(j) / sub) * (b - a)));
  }

  std::vector<JointConfig> joint_path;
  if (q0_branch) {
    JointConfig best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const IkSolution& s : ik_planar(chain, walk.front())) {
      if (!s.within_limits) continue;
      const double d = (s.q - *q0_branch).norm();
      if (d < best_d) {
        best_d = d;
        best = s.q;
      }
    }
    if (!std::isfinite(best_d)) return finish(PlanStatus::Infeasible);
    joint_path.push_back(best);
  } else {
    const TsefProjection p_start = tsef_project(spec, chain, walk.front());
    if (!p_start.feasible) return finish(PlanStatus::Infeasible);
    joint_path.push_back(p_start.q);
  }
  for (std::size_t i = 1; i < walk.size(); ++i) {
    const JointConfig& prev = joint_path.back();
    JointConfig best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const IkSolution& s : ik_planar(chain, walk[i])) {
      if (!s.within_limits) continue;
      const double d = (s.q - prev).norm();
      if (d < best_d) {
        best_d = d;
        best = s.q;
      }
    }
    constexpr double kBranchJump = 0.5;  // rad
    if (!std::isfinite(best_d) || best_d > kBranchJump) return finish(PlanStatus::Infeasible);
    joint_path.push_back(best);
  }

  // Densify so consecutive samples respect the per-joint step bound.
  int k = 0;
  r.trajectory.samples.push_back({0.0, joint_path.front()});
  for (std::size_t i = 1; i < joint_path.size(); ++i) {
    const JointConfig& a = joint_path[i - 1];
    const JointConfig& b = joint_path[i];
    const int sub = std::max(
        1, static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff() / params.step_size)));
    for (int j = 1; j <= sub; ++j)
      r.trajectory.samples.push_back(
          {++k * detail::kDt, a + (static_cast<double>(j) / sub) * (b - a)});
  }
  return finish(PlanStatus::Success);
}

/// Quintic point-to-point reference: straight segment with time scaling
/// s(u) = 10u^3 - 15u^4 + 6u^5, zero velocity and acceleration at both ends.
inline Trajectory plan_min_jerk(const TaskPoint& x0, const TaskPoint& x_goal, double duration,
                                int n_samples) {
  if (!(duration > 0.0)) throw std::invalid_argument("plan_min_jerk: duration must be > 0");
  if (n_samples < 2) throw std::invalid_argument("plan_min_jerk: need at least 2 samples");
  if (x0.size() != x_goal.size()) throw std::invalid_argument("plan_min_jerk: dimension mismatch");

  Trajectory traj;
  traj.space = TrajectorySpace::Task;
  traj.samples.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    const double u = static_cast<double>(k) / (n_samples - 1);
    const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    traj.samples.push_back({u * duration, x0 + s * (x_goal - x0)});
  }
  return traj;
}

}  // namespace csefplan
