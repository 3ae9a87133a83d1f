#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csefplan/kinematics.hpp"
#include "csefplan/presets.hpp"
#include "csefplan/rng.hpp"

using namespace csefplan;

namespace {

Eigen::MatrixXd fd_jacobian(const KinematicChain& chain, const JointConfig& q, double h = 1e-7) {
  Eigen::MatrixXd j(chain.task_dim(), chain.dof());
  for (int i = 0; i < chain.dof(); ++i) {
    JointConfig qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    j.col(i) = (forward_kinematics(chain, qp) - forward_kinematics(chain, qm)) / (2.0 * h);
  }
  return j;
}

JointConfig sample_limits(Rng& rng, const JointLimits& lim) {
  JointConfig q(lim.dof());
  for (int i = 0; i < lim.dof(); ++i) q[i] = rng.uniform(lim.lower[i], lim.upper[i]);
  return q;
}

}  // namespace

TEST_CASE("normalize_angle wraps into (-pi, pi]") {
  REQUIRE(normalize_angle(0.3) == Catch::Approx(0.3));
  REQUIRE(normalize_angle(kPi) == Catch::Approx(kPi));
  REQUIRE(normalize_angle(-kPi) == Catch::Approx(kPi));
  REQUIRE(normalize_angle(3.0 * kPi) == Catch::Approx(kPi));
  REQUIRE(normalize_angle(2.0 * kPi + 0.1) == Catch::Approx(0.1));
  REQUIRE(normalize_angle(-2.0 * kPi - 0.1) == Catch::Approx(-0.1));
}

TEST_CASE("joint limits: construction, membership, clamping") {
  REQUIRE_THROWS_AS(make_limits({0.0, 0.0}, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(make_limits({1.0}, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(make_limits({2.0}, {1.0}), std::invalid_argument);

  const JointLimits lim = make_limits({-1.0, 0.0}, {1.0, 2.0});
  JointConfig q(2);
  q << 0.5, 1.5;
  REQUIRE(lim.contains(q));
  q << 1.0 + 1e-6, 1.0;
  REQUIRE_FALSE(lim.contains(q));
  REQUIRE(lim.contains(q, 1e-5));
  REQUIRE_FALSE(lim.contains(JointConfig::Zero(3)));

  q << 5.0, -5.0;
  const JointConfig c = clamp_to_limits(q, lim);
  REQUIRE(c[0] == 1.0);
  REQUIRE(c[1] == 0.0);
}

TEST_CASE("make_chain validates its inputs") {
  const JointLimits lim2 = make_limits({-kPi, -kPi}, {kPi, kPi});
  REQUIRE_THROWS_AS(make_chain(ChainModel::Planar2, {1.0}, TaskPoint::Zero(2), lim2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_chain(ChainModel::Planar2, {1.0, -0.5}, TaskPoint::Zero(2), lim2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_chain(ChainModel::Planar2, {1.0, 0.8}, TaskPoint::Zero(3), lim2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_chain(ChainModel::UpperLimb4, {0.3, 0.25}, TaskPoint::Zero(3), lim2),
                    std::invalid_argument);

  const KinematicChain c = presets::planar_arm();
  REQUIRE(c.dof() == 2);
  REQUIRE(c.task_dim() == 2);
  REQUIRE(c.max_reach() == Catch::Approx(1.8));
  REQUIRE(c.min_reach() == Catch::Approx(0.2));
}

TEST_CASE("planar forward kinematics matches hand-computed poses") {
  const KinematicChain c = presets::planar_arm();
  JointConfig q(2);

  q << 0.0, 0.0;
  TaskPoint p = forward_kinematics(c, q);
  REQUIRE(p[0] == Catch::Approx(1.8).margin(1e-15));
  REQUIRE(p[1] == Catch::Approx(0.0).margin(1e-15));

  q << 0.0, kPi / 2.0;
  p = forward_kinematics(c, q);
  REQUIRE(p[0] == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(p[1] == Catch::Approx(0.8).margin(1e-12));

  q << kPi / 2.0, 0.0;
  p = forward_kinematics(c, q);
  REQUIRE(p[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(p[1] == Catch::Approx(1.8).margin(1e-12));

  const KinematicChain shifted = presets::planar_arm(Eigen::Vector2d(2.0, -1.0));
  q << 0.0, 0.0;
  p = forward_kinematics(shifted, q);
  REQUIRE(p[0] == Catch::Approx(3.8).margin(1e-15));
  REQUIRE(p[1] == Catch::Approx(-1.0).margin(1e-15));

  REQUIRE_THROWS_AS(forward_kinematics(c, JointConfig::Zero(3)), std::invalid_argument);
}

TEST_CASE("upper-limb forward kinematics matches frozen reference poses") {
  const KinematicChain c = presets::upper_limb_arm();
  const auto check = [&](std::initializer_list<double> qv, double x, double y, double z) {
    JointConfig q(4);
    int i = 0;
    for (double v : qv) q[i++] = v;
    const TaskPoint p = forward_kinematics(c, q);
    REQUIRE(p[0] == Catch::Approx(x).margin(1e-12));
    REQUIRE(p[1] == Catch::Approx(y).margin(1e-12));
    REQUIRE(p[2] == Catch::Approx(z).margin(1e-12));
  };

  check({0.0, 0.0, 0.0, 0.0}, 0.0, 0.0, -0.55);
  check({0.0, 0.0, 0.0, kPi / 6.0}, 0.12499999999999999, 0.0, -0.5165063509461096);
  check({0.3, 0.5, -0.2, 0.4}, 0.3379563434458383, 0.14248005295271604, -0.39515072255500505);
  check({kPi / 2.0, 0.0, 0.0, 0.0}, 0.0, 0.55, 0.0);
  check({0.0, kPi / 2.0, 0.0, 0.0}, 0.55, 0.0, 0.0);
  check({0.0, 0.0, 0.0, kPi / 2.0}, 0.25, 0.0, -0.3);
}

TEST_CASE("analytic Jacobians agree with central differences") {
  Rng rng(7);
  const KinematicChain planar = presets::planar_arm();
  for (int k = 0; k < 200; ++k) {
    const JointConfig q = sample_limits(rng, planar.limits);
    const Eigen::MatrixXd err = jacobian(planar, q) - fd_jacobian(planar, q);
    REQUIRE(err.cwiseAbs().maxCoeff() < 1e-7);
  }

  const KinematicChain limb = presets::upper_limb_arm();
  for (int k = 0; k < 200; ++k) {
    const JointConfig q = sample_limits(rng, limb.limits);
    const Eigen::MatrixXd err = jacobian(limb, q) - fd_jacobian(limb, q);
    REQUIRE(err.cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("planar IK: frozen branches, round trips, boundary handling") {
  const KinematicChain c = presets::planar_arm();

  SECTION("both branches of (1.0, 0.8)") {
    TaskPoint p(2);
    p << 1.0, 0.8;
    const auto sols = ik_planar(c, p);
    REQUIRE(sols.size() == 2);
    bool saw_up = false, saw_down = false;
    for (const IkSolution& s : sols) {
      REQUIRE(s.within_limits);
      if (std::abs(s.q[1] - kPi / 2.0) < 1e-12) {
        saw_up = true;
        REQUIRE(s.q[0] == Catch::Approx(0.0).margin(1e-12));
      }
      if (std::abs(s.q[1] + kPi / 2.0) < 1e-12) {
        saw_down = true;
        REQUIRE(s.q[0] == Catch::Approx(1.3494818844471053).margin(1e-12));
      }
    }
    REQUIRE(saw_up);
    REQUIRE(saw_down);
  }

  SECTION("full extension collapses to one branch") {
    TaskPoint p(2);
    p << 1.8, 0.0;
    const auto sols = ik_planar(c, p);
    REQUIRE(sols.size() == 1);
    REQUIRE(sols[0].q[0] == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(sols[0].q[1] == Catch::Approx(0.0).margin(1e-9));
  }

  SECTION("outside the workspace yields no solutions") {
    TaskPoint p(2);
    p << 2.0, 0.0;
    REQUIRE(ik_planar(c, p).empty());
    p << 0.05, 0.0;
    REQUIRE(ik_planar(c, p).empty());
  }

  SECTION("random round trips stay within 1e-9") {
    Rng rng(11);
    for (int k = 0; k < 2000; ++k) {
      TaskPoint p(2);
      do {
        p << rng.uniform(-1.8, 1.8), rng.uniform(-1.8, 1.8);
      } while (p.norm() < 0.2 || p.norm() > 1.8);
      const auto sols = ik_planar(c, p);
      REQUIRE_FALSE(sols.empty());
      for (const IkSolution& s : sols)
        REQUIRE((forward_kinematics(c, s.q) - p).norm() < 1e-9);
    }
  }

  SECTION("limits mark branches instead of dropping them") {
    const KinematicChain tight = make_chain(ChainModel::Planar2, {1.0, 0.8}, TaskPoint::Zero(2),
                                            make_limits({-kPi, 0.0}, {kPi, kPi}));
    TaskPoint p(2);
    p << 1.0, 0.8;
    const auto sols = ik_planar(tight, p);
    REQUIRE(sols.size() == 2);
    int in = 0;
    for (const IkSolution& s : sols) in += s.within_limits ? 1 : 0;
    REQUIRE(in == 1);
  }

  SECTION("wrong model throws") {
    TaskPoint p(3);
    p << 0.1, 0.0, -0.4;
    REQUIRE_THROWS_AS(ik_planar(presets::upper_limb_arm(), p), std::invalid_argument);
  }
}

TEST_CASE("numeric IK converges on reachable upper-limb targets") {
  const KinematicChain c = presets::upper_limb_arm();
  Rng rng(23);
  int converged = 0;
  for (int k = 0; k < 100; ++k) {
    const JointConfig q_true = sample_limits(rng, c.limits);
    const TaskPoint p = forward_kinematics(c, q_true);
    const JointConfig mid = 0.5 * (c.limits.lower + c.limits.upper);
    const IkResult r = ik_numeric(c, p, mid, 1e-10);
    if (!r.converged) continue;
    ++converged;
    REQUIRE(r.residual <= 1e-10);
    REQUIRE((forward_kinematics(c, r.q) - p).norm() <= 1e-10);
    REQUIRE(c.limits.contains(r.q, 1e-12));
  }
  // Mid-limit seeding cannot reach every target; the multistart layers above
  // this primitive handle the rest.
  REQUIRE(converged > 60);

  const JointConfig q_true = sample_limits(rng, c.limits);
  const TaskPoint p = forward_kinematics(c, q_true);
  const IkResult exact = ik_numeric(c, p, q_true, 1e-10);
  REQUIRE(exact.converged);
  REQUIRE(exact.iterations == 0);

  REQUIRE_THROWS_AS(ik_numeric(c, TaskPoint::Zero(2), q_true, 1e-10), std::invalid_argument);
}
