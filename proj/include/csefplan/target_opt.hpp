#pragma once

// Target-posture optimization: pick joint configurations that minimize the
// ergonomic field subject to reaching constraints.
//
// Unimanual: minimize csef over all in-limit IK solutions of a goal point.
// Bimanual:  minimize csef_l + csef_r subject to the inter-end-effector
// distance ||p_r - p_l|| staying within eps_task of d_task, via a penalty
// homotopy (quadratic coupling penalty, weight increased geometrically)
// followed by a weighted Gauss-Newton projection onto the constraint.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csefplan/ergo_field.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/rng.hpp"

namespace csefplan {

struct UnimanualTarget {
  TaskPoint goal_point;
  ErgoSpec spec;
  KinematicChain chain;
  double tol_fk = 1e-6;  // m
};

inline UnimanualTarget make_unimanual_target(TaskPoint goal, ErgoSpec spec,
                                             KinematicChain chain, double tol_fk = 0.0) {
  if (tol_fk == 0.0)
    tol_fk = chain.model == ChainModel::Planar2 ? 1e-6 : 1e-4;
  if (!(tol_fk > 0.0)) throw std::invalid_argument("unimanual target: tol_fk must be > 0");
  if (spec.dof() != chain.dof())
    throw std::invalid_argument("unimanual target: spec/chain dof mismatch");
  detail::check_task_dim(chain, goal);
  return {std::move(goal), std::move(spec), std::move(chain), tol_fk};
}

struct BimanualTarget {
  KinematicChain chain_left, chain_right;
  ErgoSpec spec_left, spec_right;
  double d_task = 0.0;    // desired inter-end-effector distance, m
  double eps_task = 0.0;  // coupling tolerance, m
  std::optional<TaskPoint> goal_left, goal_right;
};

inline BimanualTarget make_bimanual_target(KinematicChain chain_left, ErgoSpec spec_left,
                                           KinematicChain chain_right, ErgoSpec spec_right,
                                           double d_task, double eps_task,
                                           std::optional<TaskPoint> goal_left = std::nullopt,
                                           std::optional<TaskPoint> goal_right = std::nullopt) {
  if (!(d_task > 0.0)) throw std::invalid_argument("bimanual target: d_task must be > 0");
  if (!(eps_task > 0.0)) throw std::invalid_argument("bimanual target: eps_task must be > 0");
  if (spec_left.dof() != chain_left.dof() || spec_right.dof() != chain_right.dof())
    throw std::invalid_argument("bimanual target: spec/chain dof mismatch");
  if (chain_left.task_dim() != chain_right.task_dim())
    throw std::invalid_argument("bimanual target: mixed task dimensions");
  if (goal_left) detail::check_task_dim(chain_left, *goal_left);
  if (goal_right) detail::check_task_dim(chain_right, *goal_right);
  return {std::move(chain_left), std::move(chain_right), std::move(spec_left),
          std::move(spec_right), d_task,          eps_task,
          std::move(goal_left),  std::move(goal_right)};
}

struct UnimanualSolution {
  bool feasible = false;
  JointConfig q;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

namespace detail {

// Candidates within tie_tol of the best value collapse to one winner:
// weighted-nearest to q_current when supplied, else the lexicographically
// smallest joint vector. Keeps solver output deterministic.
inline std::size_t pick_candidate(const std::vector<JointConfig>& qs,
                                  const std::vector<double>& values,
                                  const Eigen::VectorXd& weights,
                                  const std::optional<JointConfig>& q_current,
                                  double tie_tol = 1e-9) {
  const double best = *std::min_element(values.begin(), values.end());
  std::size_t win = values.size();
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (values[i] > best + tie_tol) continue;
    if (win == values.size()) {
      win = i;
      continue;
    }
    bool better;
    if (q_current) {
      better = weighted_distance(weights, qs[i], *q_current) <
               weighted_distance(weights, qs[win], *q_current);
    } else {
      better = std::lexicographical_compare(qs[i].begin(), qs[i].end(),
                                            qs[win].begin(), qs[win].end());
    }
    if (better) win = i;
  }
  return win;
}

}  // namespace detail

/// Minimum-cost in-limit posture reaching the goal point. Planar chains are
/// solved exactly by branch enumeration; the redundant chain by multi-start
/// projection (best-of-multistart contract). q_current, when given, breaks
/// cost ties toward the nearer branch.
inline UnimanualSolution solve_unimanual(const UnimanualTarget& t,
                                         const std::optional<JointConfig>& q_current = std::nullopt) {
  UnimanualSolution out;

  std::vector<JointConfig> qs;
  std::vector<double> values;

  if (t.chain.model == ChainModel::Planar2) {
    const auto sols = ik_planar(t.chain, t.goal_point);
    if (sols.empty()) {
      out.message = "goal point outside the reachable workspace";
      return out;
    }
    for (const IkSolution& s : sols) {
      if (!s.within_limits) continue;
      if ((forward_kinematics(t.chain, s.q) - t.goal_point).norm() > t.tol_fk) continue;
      qs.push_back(s.q);
      values.push_back(csef_value(t.spec, s.q));
    }
    if (qs.empty()) {
      out.message = "goal reachable only through configurations outside joint limits";
      return out;
    }
  } else {
    const double r = (t.goal_point - t.chain.base_pose).norm();
    if (r > t.chain.max_reach() + t.tol_fk || r < t.chain.min_reach() - t.tol_fk) {
      out.message = "goal point outside the reachable workspace";
      return out;
    }
    TsefOptions opts;
    opts.ik_tol = std::min(opts.ik_tol, t.tol_fk);
    auto seeds = detail::stratified_seeds(t.chain.limits);
    seeds.push_back(clamp_to_limits(t.spec.q_opt, t.chain.limits));
    if (q_current) seeds.push_back(clamp_to_limits(*q_current, t.chain.limits));
    for (const JointConfig& seed : seeds) {
      const TsefProjection proj = tsef_project_branch(t.spec, t.chain, t.goal_point, seed, opts);
      if (!proj.feasible) continue;
      if ((forward_kinematics(t.chain, proj.q) - t.goal_point).norm() > t.tol_fk) continue;
      qs.push_back(proj.q);
      values.push_back(proj.value);
    }
    if (qs.empty()) {
      out.message = "no in-limit configuration reaches the goal (all starts failed)";
      return out;
    }
  }

  const std::size_t win = detail::pick_candidate(qs, values, t.spec.weights, q_current);
  out.feasible = true;
  out.q = qs[win];
  out.value = values[win];
  return out;
}

struct BimanualSolverParams {
  double rho0 = 10.0;        // initial coupling penalty weight
  double rho_growth = 10.0;  // geometric growth per round
  int rounds = 4;
  int multistarts = 16;
  int iters_per_round = 150;
  bool repair = true;  // Gauss-Newton projection onto the coupling constraint
  std::uint64_t rng_seed = 20240915;
};

struct BimanualSolution {
  bool feasible = false;
  JointConfig q_left, q_right;
  double value = std::numeric_limits<double>::quiet_NaN();  // csef_l + csef_r
  double coupling_error = std::numeric_limits<double>::quiet_NaN();
  std::string message;
};

namespace detail {

struct BimanualEval {
  double f = 0.0;          // combined field value
  double g = 0.0;          // coupling residual ||p_r - p_l|| - d_task
  Eigen::VectorXd grad_f;  // stacked d f / d [q_l; q_r]
  Eigen::VectorXd grad_g;  // stacked d g / d [q_l; q_r]
};

inline BimanualEval bimanual_eval(const BimanualTarget& t, const Eigen::VectorXd& z) {
  const int nl = t.chain_left.dof();
  const int nr = t.chain_right.dof();
  const JointConfig ql = z.head(nl), qr = z.tail(nr);
  const TaskPoint pl = forward_kinematics(t.chain_left, ql);
  const TaskPoint pr = forward_kinematics(t.chain_right, qr);

  BimanualEval e;
  e.f = csef_value(t.spec_left, ql) + csef_value(t.spec_right, qr);
  const Eigen::VectorXd diff = pr - pl;
  const double dist = diff.norm();
  e.g = dist - t.d_task;
  e.grad_f.resize(nl + nr);
  e.grad_f << csef_gradient(t.spec_left, ql), csef_gradient(t.spec_right, qr);
  e.grad_g = Eigen::VectorXd::Zero(nl + nr);
  if (dist > 1e-12) {
    const Eigen::VectorXd u = diff / dist;
    e.grad_g.head(nl) = -jacobian(t.chain_left, ql).transpose() * u;
    e.grad_g.tail(nr) = jacobian(t.chain_right, qr).transpose() * u;
  }
  return e;
}

inline Eigen::VectorXd clamp_stacked(const BimanualTarget& t, Eigen::VectorXd z) {
  const int nl = t.chain_left.dof();
  z.head(nl) = clamp_to_limits(z.head(nl), t.chain_left.limits);
  z.tail(t.chain_right.dof()) = clamp_to_limits(z.tail(t.chain_right.dof()), t.chain_right.limits);
  return z;
}

// Weighted Gauss-Newton steps onto g(z) = 0; the correction is distributed
// inversely to the squared ergonomic weights so heavily-weighted joints
// move least. Returns false when |g| cannot be driven below tol in-box.
inline bool repair_coupling(const BimanualTarget& t, const Eigen::VectorXd& winv,
                            Eigen::VectorXd& z, double tol, int max_iters = 60) {
  for (int it = 0; it < max_iters; ++it) {
    const BimanualEval e = bimanual_eval(t, z);
    if (std::abs(e.g) <= tol) return true;
    const Eigen::VectorXd wg = winv.cwiseProduct(e.grad_g);
    const double denom = e.grad_g.dot(wg);
    if (denom < 1e-14) return false;
    z = clamp_stacked(t, z - (e.g / denom) * wg);
  }
  return std::abs(bimanual_eval(t, z).g) <= tol;
}

// One penalty-homotopy local solve from a fixed start. Returns the final
// iterate (clamped, possibly repaired onto the constraint).
inline Eigen::VectorXd bimanual_local_solve(const BimanualTarget& t,
                                            const BimanualSolverParams& params,
                                            const Eigen::VectorXd& winv, Eigen::VectorXd z,
                                            double repair_tol) {
  double rho = params.rho0;
  for (int round = 0; round < params.rounds; ++round, rho *= params.rho_growth) {
    double step = 0.2;
    for (int it = 0; it < params.iters_per_round && step > 1e-8; ++it) {
      const BimanualEval e = bimanual_eval(t, z);
      const double cost = e.f + rho * e.g * e.g;
      const Eigen::VectorXd grad = e.grad_f + 2.0 * rho * e.g * e.grad_g;
      const double gn = grad.norm();
      if (gn < 1e-12) break;
      const Eigen::VectorXd dir = grad / gn;
      bool moved = false;
      while (step > 1e-8) {
        const Eigen::VectorXd zn = clamp_stacked(t, z - step * dir);
        const BimanualEval en = bimanual_eval(t, zn);
        if (en.f + rho * en.g * en.g < cost - 1e-15) {
          z = zn;
          moved = true;
          step *= 1.5;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
  }

  if (params.repair && repair_coupling(t, winv, z, repair_tol)) {
    // Constrained polish: descend the combined field, re-projecting after
    // each step so the iterate stays on the constraint.
    double step = 0.05;
    double best_f = bimanual_eval(t, z).f;
    for (int it = 0; it < 80 && step > 1e-6; ++it) {
      const BimanualEval e = bimanual_eval(t, z);
      const double gn = e.grad_f.norm();
      if (gn < 1e-12) break;
      Eigen::VectorXd zn = clamp_stacked(t, z - (step / gn) * e.grad_f);
      if (repair_coupling(t, winv, zn, repair_tol) && bimanual_eval(t, zn).f < best_f - 1e-14) {
        z = zn;
        best_f = bimanual_eval(t, zn).f;
      } else {
        step *= 0.5;
      }
    }
  }
  return z;
}

// Latin-hypercube-style stratified start: axis j of start k falls in
// stratum (k * odd_j mod n_starts), jittered uniformly within the stratum.
inline Eigen::VectorXd stratified_start(const BimanualTarget& t, int k, int n_starts, Rng& rng) {
  static constexpr int kOdd[] = {1, 3, 5, 7, 9, 11, 13, 15};
  const int nl = t.chain_left.dof();
  const int nr = t.chain_right.dof();
  Eigen::VectorXd z(nl + nr);
  for (int j = 0; j < nl + nr; ++j) {
    const int stratum = (k * kOdd[j % 8]) % n_starts;
    const double f = (stratum + rng.uniform01()) / n_starts;
    const double lo = j < nl ? t.chain_left.limits.lower[j] : t.chain_right.limits.lower[j - nl];
    const double hi = j < nl ? t.chain_left.limits.upper[j] : t.chain_right.limits.upper[j - nl];
    z[j] = lo + f * (hi - lo);
  }
  return z;
}

}  // namespace detail

/// Coupled two-arm target optimization. Both-goals-pinned instances reduce
/// to two unimanual solves plus a coupling check; otherwise the penalty
/// homotopy runs from stratified multistarts with deterministic reduction
/// (best final cost, earliest start on ties).
inline BimanualSolution solve_bimanual(const BimanualTarget& t,
                                       const BimanualSolverParams& params = {}) {
  BimanualSolution out;
  const int nl = t.chain_left.dof();
  const int nr = t.chain_right.dof();

  // Reach bounds give a cheap certificate of infeasibility: the inter-hand
  // distance over the (limit-free) annuli brackets every true value.
  const double base_dist = (t.chain_right.base_pose - t.chain_left.base_pose).norm();
  const double max_dist = base_dist + t.chain_left.max_reach() + t.chain_right.max_reach();
  double min_dist = std::max({0.0, base_dist - t.chain_left.max_reach() - t.chain_right.max_reach(),
                              t.chain_left.min_reach() - base_dist - t.chain_right.max_reach(),
                              t.chain_right.min_reach() - base_dist - t.chain_left.max_reach()});
  if (t.d_task - t.eps_task > max_dist || t.d_task + t.eps_task < min_dist) {
    out.message = "coupling distance outside the attainable inter-hand range";
    return out;
  }

  if (t.goal_left && t.goal_right) {
    const double gd = (*t.goal_right - *t.goal_left).norm();
    if (std::abs(gd - t.d_task) >= t.eps_task) {
      out.message = "pinned goals violate the coupling distance";
      return out;
    }
    const auto sl = solve_unimanual(make_unimanual_target(*t.goal_left, t.spec_left, t.chain_left));
    const auto sr = solve_unimanual(make_unimanual_target(*t.goal_right, t.spec_right, t.chain_right));
    if (!sl.feasible || !sr.feasible) {
      out.message = !sl.feasible ? "left goal: " + sl.message : "right goal: " + sr.message;
      return out;
    }
    out.feasible = true;
    out.q_left = sl.q;
    out.q_right = sr.q;
    out.value = sl.value + sr.value;
    out.coupling_error = std::abs(gd - t.d_task);
    return out;
  }
  if (t.goal_left || t.goal_right)
    throw std::invalid_argument("solve_bimanual: pin both goals or neither");

  Eigen::VectorXd winv(nl + nr);
  winv << t.spec_left.weights.array().square().inverse().matrix(),
      t.spec_right.weights.array().square().inverse().matrix();
  // Repair far below eps_task so downstream per-sample checks have margin.
  const double repair_tol = std::min(1e-10, 0.01 * t.eps_task);

  std::vector<Eigen::VectorXd> starts;
  Eigen::VectorXd z_opt(nl + nr);
  z_opt << clamp_to_limits(t.spec_left.q_opt, t.chain_left.limits),
      clamp_to_limits(t.spec_right.q_opt, t.chain_right.limits);
  starts.push_back(z_opt);  // the uncoupled optimum pair seeds start 0
  for (int k = 0; k < params.multistarts; ++k) {
    Rng rng(derive_seed(params.rng_seed, static_cast<std::uint64_t>(k)));
    starts.push_back(detail::stratified_start(t, k, params.multistarts, rng));
  }

  bool found = false;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z;
  for (const Eigen::VectorXd& s : starts) {
    const Eigen::VectorXd z = detail::bimanual_local_solve(t, params, winv, s, repair_tol);
    const detail::BimanualEval e = detail::bimanual_eval(t, z);
    if (params.repair && std::abs(e.g) > repair_tol) continue;
    if (std::abs(e.g) >= t.eps_task) continue;
    if (!found || e.f < best_f) {
      found = true;
      best_f = e.f;
      best_z = z;
    }
  }
  if (!found) {
    out.message = "no start converged to the coupling constraint within limits";
    return out;
  }
  out.feasible = true;
  out.q_left = best_z.head(nl);
  out.q_right = best_z.tail(nr);
  out.value = best_f;
  out.coupling_error = std::abs(detail::bimanual_eval(t, best_z).g);
  return out;
}

}  // namespace csefplan
