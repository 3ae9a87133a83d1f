#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csefplan/presets.hpp"
#include "csefplan/rng.hpp"
#include "csefplan/target_opt.hpp"

using namespace csefplan;

TEST_CASE("unimanual target construction and tolerance defaults") {
  const KinematicChain chain = presets::planar_arm();
  const ErgoSpec spec = presets::planar_ergo();
  TaskPoint goal(2);
  goal << 1.0, 0.5;

  const UnimanualTarget t = make_unimanual_target(goal, spec, chain);
  REQUIRE(t.tol_fk == 1e-6);
  const UnimanualTarget t4 = make_unimanual_target(
      forward_kinematics(presets::upper_limb_arm(), presets::upper_limb_ergo().q_opt),
      presets::upper_limb_ergo(), presets::upper_limb_arm());
  REQUIRE(t4.tol_fk == 1e-4);
  REQUIRE(make_unimanual_target(goal, spec, chain, 1e-3).tol_fk == 1e-3);
  REQUIRE_THROWS_AS(make_unimanual_target(goal, spec, chain, -1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(make_unimanual_target(TaskPoint::Zero(3), spec, chain),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_unimanual_target(goal, presets::upper_limb_ergo(), chain),
                    std::invalid_argument);
}

TEST_CASE("unimanual solve recovers the optimum at its own hand point") {
  const KinematicChain chain = presets::planar_arm();
  const ErgoSpec spec = presets::planar_ergo();

  // Frozen hand position of the optimal posture.
  const TaskPoint p_opt = forward_kinematics(chain, spec.q_opt);
  REQUIRE(p_opt[0] == Catch::Approx(1.4798474422178023).margin(1e-14));
  REQUIRE(p_opt[1] == Catch::Approx(0.5000515451045309).margin(1e-14));

  const UnimanualSolution s = solve_unimanual(make_unimanual_target(p_opt, spec, chain));
  REQUIRE(s.feasible);
  REQUIRE(s.value == 0.0);
  REQUIRE((s.q - spec.q_opt).norm() < 1e-12);
}

TEST_CASE("unimanual solve picks the branch of least field value") {
  const KinematicChain chain = presets::planar_arm();
  const ErgoSpec spec = presets::planar_ergo();
  Rng rng(61);
  for (int k = 0; k < 200; ++k) {
    TaskPoint p(2);
    do {
      p << rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8);
    } while (p.norm() < 0.2 || p.norm() > 1.8);
    const UnimanualSolution s = solve_unimanual(make_unimanual_target(p, spec, chain));
    REQUIRE(s.feasible);
    for (const IkSolution& b : ik_planar(chain, p)) {
      if (!b.within_limits) continue;
      REQUIRE(s.value <= csef_value(spec, b.q) + 1e-12);
    }
    REQUIRE((forward_kinematics(chain, s.q) - p).norm() <= 1e-6);
  }
}

TEST_CASE("unimanual solve reports unreachable and out-of-limit goals") {
  const KinematicChain chain = presets::planar_arm();
  const ErgoSpec spec = presets::planar_ergo();

  TaskPoint far(2);
  far << 3.0, 0.0;
  const UnimanualSolution s = solve_unimanual(make_unimanual_target(far, spec, chain));
  REQUIRE_FALSE(s.feasible);
  REQUIRE(s.message.find("workspace") != std::string::npos);

  // Both branches of this target need q2 != 0; forbid them via limits.
  const JointLimits tight = make_limits({-kPi, -0.01}, {kPi, 0.01});
  const KinematicChain locked = make_chain(ChainModel::Planar2, {1.0, 0.8},
                                           TaskPoint::Zero(2), tight);
  const ErgoSpec locked_spec =
      make_ergo_spec(JointConfig::Zero(2), Eigen::Vector2d(1.0, 1.0), 0.1, tight);
  TaskPoint bent(2);
  bent << 1.0, 0.8;
  const UnimanualSolution s2 = solve_unimanual(make_unimanual_target(bent, locked_spec, locked));
  REQUIRE_FALSE(s2.feasible);
  REQUIRE(s2.message.find("limit") != std::string::npos);
}

TEST_CASE("cost ties break toward q_current, else lexicographically") {
  // A field symmetric in the elbow sign gives both branches the same value.
  const JointLimits lim = make_limits({-kPi, -kPi}, {kPi, kPi});
  const KinematicChain chain = presets::planar_arm();
  JointConfig q_opt(2);
  q_opt << 0.6747409422235526, 0.0;  // midway between the q1 of both branches
  const ErgoSpec spec = make_ergo_spec(q_opt, Eigen::Vector2d(1.0, 1.0), 0.0, lim);

  TaskPoint p(2);
  p << 1.0, 0.8;
  JointConfig up(2), down(2);
  up << 0.0, kPi / 2.0;
  down << 1.3494818844471053, -kPi / 2.0;
  REQUIRE(std::abs(csef_value(spec, up) - csef_value(spec, down)) < 1e-12);

  // No posture context: lexicographically smaller joint vector wins.
  const UnimanualSolution neutral = solve_unimanual(make_unimanual_target(p, spec, chain));
  REQUIRE((neutral.q - up).norm() < 1e-12);

  // Near the other branch: that branch wins.
  const UnimanualSolution biased =
      solve_unimanual(make_unimanual_target(p, spec, chain), down);
  REQUIRE((biased.q - down).norm() < 1e-12);
}

TEST_CASE("redundant unimanual solve hits the optimum hand point") {
  const KinematicChain chain = presets::upper_limb_arm();
  const ErgoSpec spec = presets::upper_limb_ergo();
  const TaskPoint p_opt = forward_kinematics(chain, spec.q_opt);

  const UnimanualSolution s = solve_unimanual(make_unimanual_target(p_opt, spec, chain));
  REQUIRE(s.feasible);
  REQUIRE(s.value <= 1e-8);
  REQUIRE((forward_kinematics(chain, s.q) - p_opt).norm() <= 1e-4);

  TaskPoint far(3);
  far << 1.0, 0.0, 0.0;
  REQUIRE_FALSE(solve_unimanual(make_unimanual_target(far, spec, chain)).feasible);
}

TEST_CASE("bimanual target validation") {
  const KinematicChain left = presets::planar_arm(Eigen::Vector2d(0.0, 0.0));
  const KinematicChain right = presets::planar_arm(Eigen::Vector2d(2.0, 0.0));
  const ErgoSpec sl = presets::planar_ergo();
  const ErgoSpec sr = presets::planar_ergo_mirrored();

  REQUIRE_THROWS_AS(make_bimanual_target(left, sl, right, sr, 0.0, 0.01),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_bimanual_target(left, sl, right, sr, 0.5, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_bimanual_target(left, presets::upper_limb_ergo(), right, sr, 0.5, 0.01),
                    std::invalid_argument);
  REQUIRE_NOTHROW(make_bimanual_target(left, sl, right, sr, 0.5, 0.01));
}

TEST_CASE("bimanual reach bounds certify infeasible couplings") {
  const KinematicChain left = presets::planar_arm(Eigen::Vector2d(0.0, 0.0));
  const KinematicChain far_right = presets::planar_arm(Eigen::Vector2d(10.0, 0.0));
  const ErgoSpec sl = presets::planar_ergo();
  const ErgoSpec sr = presets::planar_ergo_mirrored();

  // Hands can never be closer than 10 - 3.6 = 6.4 m.
  const BimanualSolution too_close =
      solve_bimanual(make_bimanual_target(left, sl, far_right, sr, 0.5, 0.01));
  REQUIRE_FALSE(too_close.feasible);
  REQUIRE(too_close.message.find("range") != std::string::npos);

  // Nor farther than 10 + 3.6 m.
  const BimanualSolution too_far =
      solve_bimanual(make_bimanual_target(left, sl, far_right, sr, 20.0, 0.01));
  REQUIRE_FALSE(too_far.feasible);
}

TEST_CASE("pinned bimanual goals reduce to two unimanual solves") {
  const KinematicChain left = presets::planar_arm(Eigen::Vector2d(0.0, 0.0));
  const KinematicChain right = presets::planar_arm(Eigen::Vector2d(2.0, 0.0));
  const ErgoSpec sl = presets::planar_ergo();
  const ErgoSpec sr = presets::planar_ergo_mirrored();

  TaskPoint gl(2), gr(2);
  gl << 0.8, 0.4;
  gr << 1.3, 0.4;  // distance 0.5 exactly

  const BimanualSolution s =
      solve_bimanual(make_bimanual_target(left, sl, right, sr, 0.5, 0.01, gl, gr));
  REQUIRE(s.feasible);
  const UnimanualSolution ul = solve_unimanual(make_unimanual_target(gl, sl, left));
  const UnimanualSolution ur = solve_unimanual(make_unimanual_target(gr, sr, right));
  REQUIRE(s.value == Catch::Approx(ul.value + ur.value).margin(1e-12));
  REQUIRE((s.q_left - ul.q).norm() < 1e-12);
  REQUIRE((s.q_right - ur.q).norm() < 1e-12);
  REQUIRE(s.coupling_error == Catch::Approx(0.0).margin(1e-12));

  // Goals violating the coupling distance are rejected up front.
  TaskPoint gr_bad(2);
  gr_bad << 1.6, 0.4;
  const BimanualSolution bad =
      solve_bimanual(make_bimanual_target(left, sl, right, sr, 0.5, 0.01, gl, gr_bad));
  REQUIRE_FALSE(bad.feasible);
  REQUIRE(bad.message.find("coupling") != std::string::npos);

  // Pinning exactly one goal is a contract violation.
  REQUIRE_THROWS_AS(
      solve_bimanual(make_bimanual_target(left, sl, right, sr, 0.5, 0.01, gl, std::nullopt)),
      std::invalid_argument);
}

TEST_CASE("coupling repair drives the residual to tolerance, weighted") {
  const BimanualTarget t = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), 0.5, 0.01);

  Eigen::VectorXd winv(4);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();

  Rng rng(67);
  int repaired = 0;
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd z(4);
    for (int i = 0; i < 4; ++i) z[i] = rng.uniform(-kPi, kPi);
    Eigen::VectorXd zr = z;
    if (!detail::repair_coupling(t, winv, zr, 1e-12)) continue;
    ++repaired;
    REQUIRE(std::abs(detail::bimanual_eval(t, zr).g) <= 1e-12);
  }
  REQUIRE(repaired > 40);

  // Heavier weights pin their joints: repairing with a very heavy left arm
  // moves the left joints less than the uniform repair does.
  Eigen::VectorXd z0(4);
  z0 << 0.9, -0.7, 2.3, 0.6;
  Eigen::VectorXd uniform = z0, pinned = z0;
  Eigen::VectorXd winv_pinned(4);
  winv_pinned << 1e-4, 1e-4, 1.0, 1.0;  // left weights 100x
  REQUIRE(detail::repair_coupling(t, winv, uniform, 1e-12));
  REQUIRE(detail::repair_coupling(t, winv_pinned, pinned, 1e-12));
  REQUIRE((pinned.head(2) - z0.head(2)).norm() < (uniform.head(2) - z0.head(2)).norm());
}

TEST_CASE("penalty homotopy: growing the weight shrinks the violation") {
  // d = 3.2 keeps the coupling constraint active at the optimum (positive
  // multiplier), so the penalty bias follows the classic ~1/rho decay. A
  // slack separation would satisfy the constraint exactly at every rho and
  // leave nothing to measure.
  const BimanualTarget t = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), 3.2, 0.01);

  Eigen::VectorXd winv(4);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();
  Eigen::VectorXd z0(4);
  z0 << t.spec_left.q_opt, t.spec_right.q_opt;

  double prev = std::numeric_limits<double>::infinity();
  double last = prev;
  for (const double rho : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    BimanualSolverParams p;
    p.rho0 = rho;
    p.rounds = 1;
    p.repair = false;
    const Eigen::VectorXd z = detail::bimanual_local_solve(t, p, winv, z0, 1e-10);
    const double g = std::abs(detail::bimanual_eval(t, z).g);
    REQUIRE(g <= 0.5 * prev);
    prev = g;
    last = g;
  }
  REQUIRE(last < 1e-4);
}

TEST_CASE("free bimanual solve lands on the constraint at low cost") {
  const BimanualTarget t = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), 0.5, 0.01);

  const BimanualSolution s = solve_bimanual(t);
  REQUIRE(s.feasible);
  REQUIRE(s.coupling_error <= 1e-10);
  REQUIRE(t.chain_left.limits.contains(s.q_left, 1e-12));
  REQUIRE(t.chain_right.limits.contains(s.q_right, 1e-12));

  // The uncoupled optimum hands sit 0.96 m apart and each region ball leaves
  // the hand roughly +-0.6 m of slack, so a 0.5 m separation is satisfiable
  // with both arms still inside their regions: the optimum cost is zero.
  REQUIRE(s.value <= 1e-12);
  REQUIRE(s.value == Catch::Approx(csef_value(t.spec_left, s.q_left) +
                                   csef_value(t.spec_right, s.q_right))
                         .margin(1e-12));

  // Determinism: the same parameters reproduce the same solution.
  const BimanualSolution again = solve_bimanual(t);
  REQUIRE((again.q_left - s.q_left).norm() == 0.0);
  REQUIRE((again.q_right - s.q_right).norm() == 0.0);
}

TEST_CASE("bimanual solve pays the unavoidable cost when the constraint binds") {
  // Hands forced 3.2 m apart while the optimum hands are only 0.96 m apart:
  // at least one arm must leave its region, so the optimum cost is positive.
  const BimanualTarget t = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), 3.2, 0.01);

  const BimanualSolution s = solve_bimanual(t);
  REQUIRE(s.feasible);
  REQUIRE(s.coupling_error <= 1e-10);
  REQUIRE(t.chain_left.limits.contains(s.q_left, 1e-12));
  REQUIRE(t.chain_right.limits.contains(s.q_right, 1e-12));
  REQUIRE(s.value > 0.5);
  REQUIRE(s.value == Catch::Approx(csef_value(t.spec_left, s.q_left) +
                                   csef_value(t.spec_right, s.q_right))
                         .margin(1e-12));

  // Optimality sanity: no worse than the feasible comparison point built by
  // repairing the uncoupled optimum pair onto the constraint.
  Eigen::VectorXd winv(4);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();
  Eigen::VectorXd z(4);
  z << t.spec_left.q_opt, t.spec_right.q_opt;
  REQUIRE(detail::repair_coupling(t, winv, z, 1e-10));
  REQUIRE(s.value <= detail::bimanual_eval(t, z).f + 1e-9);
}
