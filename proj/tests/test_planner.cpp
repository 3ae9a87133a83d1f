#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csefplan/bench.hpp"
#include "csefplan/planner.hpp"
#include "csefplan/presets.hpp"
#include "csefplan/rng.hpp"

using namespace csefplan;

namespace {

void check_trajectory_contract(const Trajectory& traj, const JointLimits& lim,
                               const PlannerParams& params) {
  validate_trajectory(traj);
  const double bound = params.step_size * (1.0 + params.perturb_scale) + 1e-12;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    REQUIRE(lim.contains(traj.samples[i].x, 1e-12));
    if (i > 0) {
      REQUIRE(traj.samples[i].t ==
              Catch::Approx(traj.samples[i - 1].t + 0.01).margin(1e-12));
      REQUIRE((traj.samples[i].x - traj.samples[i - 1].x).cwiseAbs().maxCoeff() <= bound);
    }
  }
}

}  // namespace

TEST_CASE("planner parameter validation") {
  PlannerParams p;
  p.step_size = 0.0;
  REQUIRE_THROWS_AS(validate_params(p), std::invalid_argument);
  p = {};
  p.max_steps = 0;
  REQUIRE_THROWS_AS(validate_params(p), std::invalid_argument);
  p = {};
  p.goal_weight = -1.0;
  REQUIRE_THROWS_AS(validate_params(p), std::invalid_argument);
  p = {};
  p.goal_weight = 0.0;
  p.ergo_weight = 0.0;
  REQUIRE_THROWS_AS(validate_params(p), std::invalid_argument);
  p = {};
  p.goal_tol = 0.0;
  REQUIRE_THROWS_AS(validate_params(p), std::invalid_argument);
  REQUIRE_NOTHROW(validate_params(PlannerParams{}));
}

TEST_CASE("field descent reaches the region monotonically") {
  const ErgoSpec spec = presets::planar_ergo();
  const KinematicChain chain = presets::planar_arm();
  const PlannerParams params;

  JointConfig q0(2);
  q0 << -2.0, 2.0;
  const PlanResult r = plan_csef_descent(spec, q0, params, &chain);
  REQUIRE(r.status == PlanStatus::Success);
  check_trajectory_contract(r.trajectory, spec.limits, params);
  REQUIRE((r.trajectory.samples.front().x - q0).norm() == 0.0);

  double prev = std::numeric_limits<double>::infinity();
  for (const TrajectorySample& s : r.trajectory.samples) {
    const double v = csef_value(spec, s.x);
    REQUIRE(v <= prev + 1e-12);
    prev = v;
  }
  REQUIRE(prev <= 1e-12);

  REQUIRE(r.metrics.success);
  REQUIRE(r.metrics.cartesian_path_length > 0.0);
  REQUIRE(r.metrics.joint_path_length > 0.0);
  REQUIRE(r.metrics.max_csef == Catch::Approx(csef_value(spec, q0)).margin(1e-12));

  // Without a chain the Cartesian length is left at zero.
  const PlanResult bare = plan_csef_descent(spec, q0, params);
  REQUIRE(bare.metrics.cartesian_path_length == 0.0);
  REQUIRE(bare.metrics.joint_path_length ==
          Catch::Approx(r.metrics.joint_path_length).margin(1e-12));

  // Starting inside the region is an immediate single-sample success.
  const PlanResult at_opt = plan_csef_descent(spec, spec.q_opt, params);
  REQUIRE(at_opt.status == PlanStatus::Success);
  REQUIRE(at_opt.trajectory.size() == 1);

  JointConfig out(2);
  out << 4.0, 0.0;
  REQUIRE_THROWS_AS(plan_csef_descent(spec, out, params), std::invalid_argument);
}

TEST_CASE("field descent succeeds from every corner of the limit box") {
  const ErgoSpec spec = presets::planar_ergo();
  for (int mask = 0; mask < 4; ++mask) {
    JointConfig q0(2);
    q0 << (mask & 1 ? spec.limits.upper[0] : spec.limits.lower[0]),
        (mask & 2 ? spec.limits.upper[1] : spec.limits.lower[1]);
    const PlanResult r = plan_csef_descent(spec, q0);
    REQUIRE(r.status == PlanStatus::Success);
    REQUIRE(csef_value(spec, r.trajectory.samples.back().x) <= 1e-12);
  }
}

TEST_CASE("goal-directed planning reaches the goal and respects step bounds") {
  const ErgoSpec spec = presets::planar_ergo();
  const KinematicChain chain = presets::planar_arm();
  PlannerParams params;
  params.rng_seed = 99;

  Rng rng(71);
  for (int k = 0; k < 20; ++k) {
    JointConfig q0(2), qg(2);
    q0 << rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi);
    qg << rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi);
    const PlanResult r = plan_csef_to_goal(spec, q0, qg, params, &chain);
    REQUIRE(r.status == PlanStatus::Success);
    check_trajectory_contract(r.trajectory, spec.limits, params);
    REQUIRE((r.trajectory.samples.back().x - qg).norm() <= params.goal_tol);
  }

  // Deterministic for a fixed seed.
  JointConfig q0(2), qg(2);
  q0 << -2.0, 2.0;
  qg << spec.q_opt;
  const PlanResult a = plan_csef_to_goal(spec, q0, qg, params);
  const PlanResult b = plan_csef_to_goal(spec, q0, qg, params);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i)
    REQUIRE((a.trajectory.samples[i].x - b.trajectory.samples[i].x).norm() == 0.0);

  // Start at the goal: immediate success.
  const PlanResult at_goal = plan_csef_to_goal(spec, qg, qg, params);
  REQUIRE(at_goal.status == PlanStatus::Success);
  REQUIRE(at_goal.trajectory.size() == 1);

  JointConfig out(2);
  out << 4.0, 0.0;
  REQUIRE_THROWS_AS(plan_csef_to_goal(spec, out, qg, params), std::invalid_argument);
  REQUIRE_THROWS_AS(plan_csef_to_goal(spec, qg, out, params), std::invalid_argument);
}

TEST_CASE("goal-directed planning without field influence runs straight") {
  const ErgoSpec spec = presets::planar_ergo();
  PlannerParams params;
  params.ergo_weight = 0.0;
  params.rng_seed = 1;

  JointConfig q0(2), qg(2);
  q0 << -1.0, -1.0;
  qg << 1.0, 0.5;
  const PlanResult r = plan_csef_to_goal(spec, q0, qg, params);
  REQUIRE(r.status == PlanStatus::Success);
  const Eigen::Vector2d dir = (qg - q0).normalized();
  for (const TrajectorySample& s : r.trajectory.samples) {
    const Eigen::Vector2d off = s.x - q0;
    REQUIRE(std::abs(off[0] * dir[1] - off[1] * dir[0]) < 1e-9);  // collinear
  }
}

TEST_CASE("coupled planning holds the constraint at every emitted sample") {
  const BimanualTarget t = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), 0.5, 0.01);
  PlannerParams params;
  params.rng_seed = 5;

  // A coupled start: projected onto the constraint from a neutral pair.
  Eigen::VectorXd winv(4);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();
  Eigen::VectorXd z(4);
  z << 0.9, -0.4, 2.2, 0.5;
  REQUIRE(detail::repair_coupling(t, winv, z, 1e-12));

  const auto [left, right] = plan_bimanual(t, z.head(2), z.tail(2), params);
  REQUIRE(left.status == PlanStatus::Success);
  REQUIRE(right.status == left.status);
  REQUIRE(left.trajectory.size() == right.trajectory.size());
  check_trajectory_contract(left.trajectory, t.chain_left.limits, params);
  check_trajectory_contract(right.trajectory, t.chain_right.limits, params);

  for (std::size_t k = 0; k < left.trajectory.size(); ++k) {
    const TaskPoint pl = forward_kinematics(t.chain_left, left.trajectory.samples[k].x);
    const TaskPoint pr = forward_kinematics(t.chain_right, right.trajectory.samples[k].x);
    REQUIRE(std::abs((pr - pl).norm() - t.d_task) < t.eps_task);
  }

  // The run ends at the coupled optimum.
  const BimanualSolverParams sp_used = [&] {
    BimanualSolverParams sp;
    sp.rng_seed = derive_seed(params.rng_seed, 0x62696d61);
    return sp;
  }();
  const BimanualSolution target = solve_bimanual(t, sp_used);
  Eigen::VectorXd zg(4), ze(4);
  zg << target.q_left, target.q_right;
  ze << left.trajectory.samples.back().x, right.trajectory.samples.back().x;
  REQUIRE((zg - ze).norm() <= params.goal_tol);

  // A start violating the coupling is refused as infeasible, not an error.
  Eigen::VectorXd bad(4);
  bad << 0.0, 0.0, 0.0, 0.0;  // hands 2 m apart, violation 1.5 > eps
  const auto [il, ir] = plan_bimanual(t, bad.head(2), bad.tail(2), params);
  REQUIRE(il.status == PlanStatus::Infeasible);
  REQUIRE(ir.status == PlanStatus::Infeasible);
  REQUIRE(il.trajectory.size() == 1);
}

TEST_CASE("grid baseline plans through the field and fails near the boundary") {
  const ErgoSpec spec = presets::planar_ergo();
  const KinematicChain chain = presets::planar_arm();
  Eigen::VectorXd lo, hi;
  presets::planar_grid_bounds(chain, lo, hi);
  const FieldGrid grid = sample_tsef_grid(spec, chain, lo, hi, {100, 100});
  const PlannerParams params;

  JointConfig q0(2);
  q0 << 0.3, 0.5;
  const TaskPoint p0 = forward_kinematics(chain, q0);
  const TaskPoint pg = forward_kinematics(chain, spec.q_opt);

  const PlanResult r = plan_tsef_baseline(spec, chain, p0, pg, grid, params);
  REQUIRE(r.status == PlanStatus::Success);
  check_trajectory_contract(r.trajectory, spec.limits, params);

  // Terminal sample reaches the goal's snapped lattice node.
  const TaskPoint end = forward_kinematics(chain, r.trajectory.samples.back().x);
  const Eigen::VectorXd goal_node = grid.point_at(grid.nearest_index(pg));
  REQUIRE((end - goal_node).norm() < 1e-9);
  // Snapping keeps the endpoints within half a cell diagonal.
  const double half_diag = 0.5 * std::hypot(grid.spacing(0), grid.spacing(1));
  REQUIRE((goal_node - pg).norm() <= half_diag + 1e-12);

  // A goal hugging the workspace boundary snaps to a penalty node.
  const TaskPoint near_sing = bench::near_singularity_goal(chain, lo, hi, {100, 100});
  const PlanResult fail = plan_tsef_baseline(spec, chain, p0, near_sing, grid, params);
  REQUIRE(fail.status == PlanStatus::Infeasible);

  TaskPoint outside(2);
  outside << 5.0, 0.0;
  REQUIRE_THROWS_AS(plan_tsef_baseline(spec, chain, p0, outside, grid, params),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(plan_tsef_baseline(presets::upper_limb_ergo(), presets::upper_limb_arm(),
                                       TaskPoint::Zero(3), TaskPoint::Zero(3), grid, params),
                    std::invalid_argument);
}

TEST_CASE("minimum-jerk reference matches the quintic boundary contract") {
  TaskPoint x0(2), xg(2);
  x0 << 0.0, 1.0;
  xg << 2.0, -1.0;
  const double T = 2.0;
  const Trajectory traj = plan_min_jerk(x0, xg, T, 201);

  REQUIRE(traj.space == TrajectorySpace::Task);
  REQUIRE(traj.size() == 201);
  REQUIRE(traj.duration() == Catch::Approx(T));
  validate_trajectory(traj);
  REQUIRE((traj.samples.front().x - x0).norm() == 0.0);
  REQUIRE((traj.samples.back().x - xg).norm() == 0.0);
  REQUIRE((traj.value_at(T / 2.0) - 0.5 * (x0 + xg)).norm() < 1e-12);

  // Independent check: fit the quintic through the six boundary conditions
  // by solving the linear system, then compare the curve.
  Eigen::MatrixXd m(6, 6);
  Eigen::VectorXd rhs(6);
  auto row = [&](int r, double u, int deriv) {
    for (int c = 0; c < 6; ++c) {
      double coef = 1.0;
      for (int d = 0; d < deriv; ++d) coef *= (c - d);
      m(r, c) = c - deriv >= 0 ? coef * std::pow(u, c - deriv) : 0.0;
    }
  };
  row(0, 0.0, 0);
  row(1, 1.0, 0);
  row(2, 0.0, 1);
  row(3, 1.0, 1);
  row(4, 0.0, 2);
  row(5, 1.0, 2);
  rhs << 0.0, 1.0, 0.0, 0.0, 0.0, 0.0;
  const Eigen::VectorXd coef = m.fullPivLu().solve(rhs);
  for (const double u : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    double s = 0.0;
    for (int c = 0; c < 6; ++c) s += coef[c] * std::pow(u, c);
    const Eigen::VectorXd expect = x0 + s * (xg - x0);
    REQUIRE((traj.value_at(u * T) - expect).norm() < 1e-12);
  }

  // Boundary speed: the sampled trajectory's first and last secant slopes
  // must equal the quintic's own secants exactly, and refining the sampling
  // tenfold cuts them ~100x (the boundary velocity vanishes quadratically
  // in the sample spacing).
  const auto edge_slopes = [](const Trajectory& tr) {
    const auto& s = tr.samples;
    return std::pair{((s[1].x - s[0].x) / (s[1].t - s[0].t)).norm(),
                     ((s[s.size() - 1].x - s[s.size() - 2].x) /
                      (s[s.size() - 1].t - s[s.size() - 2].t))
                         .norm()};
  };
  const double dt = T / 200.0;
  double s_first = 0.0;
  for (int c = 0; c < 6; ++c) s_first += coef[c] * std::pow(dt / T, c);
  const double expect_slope = s_first * (xg - x0).norm() / dt;
  const auto [head_slope, tail_slope] = edge_slopes(traj);
  REQUIRE(head_slope == Catch::Approx(expect_slope).epsilon(1e-8));
  REQUIRE(tail_slope == Catch::Approx(expect_slope).epsilon(1e-8));
  const auto [fine_head, fine_tail] = edge_slopes(plan_min_jerk(x0, xg, T, 2001));
  REQUIRE(fine_head < head_slope / 50.0);
  REQUIRE(fine_tail < tail_slope / 50.0);

  REQUIRE_THROWS_AS(plan_min_jerk(x0, xg, 0.0, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(plan_min_jerk(x0, xg, 1.0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(plan_min_jerk(x0, TaskPoint::Zero(3), 1.0, 10), std::invalid_argument);
}

TEST_CASE("metrics summarize field exposure and path lengths") {
  const ErgoSpec spec = presets::planar_ergo();
  const KinematicChain chain = presets::planar_arm();

  Trajectory traj;
  traj.space = TrajectorySpace::Joint;
  JointConfig a(2), b(2), c(2);
  a << 0.0, 0.0;
  b << 0.5, 0.0;
  c << 0.5, 0.5;
  traj.samples = {{0.0, a}, {0.01, b}, {0.02, c}};

  const MetricsRecord m = compute_metrics(spec, chain, traj, 0.25, true);
  REQUIRE(m.compute_time == 0.25);
  REQUIRE(m.success);
  REQUIRE(m.joint_path_length == Catch::Approx(1.0).margin(1e-15));
  const double expect_cart = (forward_kinematics(chain, b) - forward_kinematics(chain, a)).norm() +
                             (forward_kinematics(chain, c) - forward_kinematics(chain, b)).norm();
  REQUIRE(m.cartesian_path_length == Catch::Approx(expect_cart).margin(1e-15));
  const double v0 = csef_value(spec, a), v1 = csef_value(spec, b), v2 = csef_value(spec, c);
  REQUIRE(m.avg_csef == Catch::Approx((v0 + v1 + v2) / 3.0).margin(1e-15));
  REQUIRE(m.max_csef == Catch::Approx(std::max({v0, v1, v2})).margin(1e-15));

  REQUIRE_THROWS_AS(compute_metrics(spec, chain, Trajectory{}, 0.0, false),
                    std::invalid_argument);
  Trajectory task;
  task.space = TrajectorySpace::Task;
  task.samples = {{0.0, a}};
  REQUIRE_THROWS_AS(compute_metrics(spec, chain, task, 0.0, false), std::invalid_argument);
}
