#pragma once

// Ergonomic cost fields over joint space and their task-space projection.
//
// The joint-space field measures the weighted distance from a configuration
// to an ergonomically acceptable region around an optimal configuration:
//
//   value(q) = max(0, ||w (q - q_opt)|| - radius)        (ball region)
//   value(q) = min over region points q' of ||w (q - q')||   (point set)
//
// The field is zero on and inside the region, grows linearly outside, and
// its gradient w^2 (q - q'_min) / ||w (q - q'_min)|| points away from the
// region. Inside the ball the gradient is the zero vector; on the region
// boundary the outward one-sided direction is returned.
//
// The task-space field at a point p is the minimum joint-space value over
// all in-limit inverse-kinematics solutions reaching p. Unreachable points
// (or points with no in-limit solution) take a large penalty value and are
// excluded from planning.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csefplan/kinematics.hpp"

namespace csefplan {

enum class EnvelopeKind { Ball, PointSet };

struct Envelope {
  EnvelopeKind kind = EnvelopeKind::Ball;
  std::vector<JointConfig> points;  // used only for PointSet
};

/// Fully defines one joint-space field: optimal configuration, per-joint
/// weights, region envelope, and the joint limits of the underlying model.
struct ErgoSpec {
  JointConfig q_opt;
  Eigen::VectorXd weights;     // diagonal of w, all > 0
  double region_radius = 0.0;  // ball radius in weighted-norm units
  JointLimits limits;
  Envelope envelope;

  int dof() const { return static_cast<int>(q_opt.size()); }
};

inline ErgoSpec make_ergo_spec(JointConfig q_opt, Eigen::VectorXd weights,
                               double region_radius, JointLimits limits,
                               Envelope envelope = {}) {
  ErgoSpec s{std::move(q_opt), std::move(weights), region_radius,
             std::move(limits), std::move(envelope)};
  if (s.weights.size() != s.q_opt.size() || s.limits.dof() != s.dof())
    throw std::invalid_argument("ergo spec: dimension mismatch");
  if ((s.weights.array() <= 0.0).any())
    throw std::invalid_argument("ergo spec: weights must be > 0");
  if (!(s.region_radius >= 0.0))
    throw std::invalid_argument("ergo spec: region radius must be >= 0");
  if (!s.limits.contains(s.q_opt))
    throw std::invalid_argument("ergo spec: q_opt outside joint limits");
  if (s.envelope.kind == EnvelopeKind::PointSet) {
    if (s.envelope.points.empty())
      throw std::invalid_argument("ergo spec: point-set envelope is empty");
    for (const auto& p : s.envelope.points)
      if (p.size() != s.q_opt.size())
        throw std::invalid_argument("ergo spec: envelope point dimension mismatch");
  }
  return s;
}

/// Value, gradient, and the closest envelope configuration at one query.
struct FieldSample {
  double value = 0.0;
  Eigen::VectorXd gradient;
  JointConfig closest_envelope_point;
};

namespace detail {

inline void check_spec_dim(const ErgoSpec& spec, const JointConfig& q) {
  if (q.size() != spec.q_opt.size())
    throw std::invalid_argument("configuration dimension does not match ergo spec");
}

inline double weighted_distance(const Eigen::VectorXd& w, const JointConfig& a,
                                const JointConfig& b) {
  return (w.array() * (a - b).array()).matrix().norm();
}

// Index of the closest point-set entry; first wins on ties.
inline std::size_t closest_point_index(const ErgoSpec& spec, const JointConfig& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.envelope.points.size(); ++i) {
    const double d = weighted_distance(spec.weights, q, spec.envelope.points[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

inline double csef_value(const ErgoSpec& spec, const JointConfig& q) {
  detail::check_spec_dim(spec, q);
  if (spec.envelope.kind == EnvelopeKind::Ball) {
    const double d = detail::weighted_distance(spec.weights, q, spec.q_opt);
    return std::max(0.0, d - spec.region_radius);
  }
  const std::size_t i = detail::closest_point_index(spec, q);
  return detail::weighted_distance(spec.weights, q, spec.envelope.points[i]);
}

/// Field sample with value, gradient, and closest envelope point in one pass.
inline FieldSample csef_sample(const ErgoSpec& spec, const JointConfig& q) {
  detail::check_spec_dim(spec, q);
  FieldSample out;
  out.gradient = Eigen::VectorXd::Zero(q.size());

  if (spec.envelope.kind == EnvelopeKind::Ball) {
    const Eigen::VectorXd diff = q - spec.q_opt;
    const double d = (spec.weights.array() * diff.array()).matrix().norm();
    out.value = std::max(0.0, d - spec.region_radius);
    if (d > 0.0) {
      out.closest_envelope_point = spec.q_opt + (spec.region_radius / d) * diff;
      if (d >= spec.region_radius) {
        // One-sided on the boundary: the outward radial direction.
        out.gradient =
            (spec.weights.array().square() * diff.array()).matrix() / d;
      }
    } else {
      // Degenerate query at the center; pick a fixed envelope point.
      out.closest_envelope_point = spec.q_opt;
      out.closest_envelope_point[0] += spec.region_radius / spec.weights[0];
    }
    return out;
  }

  const std::size_t i = detail::closest_point_index(spec, q);
  const JointConfig& qmin = spec.envelope.points[i];
  const Eigen::VectorXd diff = q - qmin;
  const double d = (spec.weights.array() * diff.array()).matrix().norm();
  out.value = d;
  out.closest_envelope_point = qmin;
  if (d > 0.0)
    out.gradient = (spec.weights.array().square() * diff.array()).matrix() / d;
  return out;
}

inline Eigen::VectorXd csef_gradient(const ErgoSpec& spec, const JointConfig& q) {
  return csef_sample(spec, q).gradient;
}

/// Gradient written into a caller-owned buffer, value returned: the
/// allocation-free query for per-step planner loops. Same arithmetic as
/// csef_sample.
inline double csef_eval(const ErgoSpec& spec, const JointConfig& q, Eigen::VectorXd& grad) {
  detail::check_spec_dim(spec, q);
  const JointConfig* anchor = &spec.q_opt;
  if (spec.envelope.kind == EnvelopeKind::PointSet)
    anchor = &spec.envelope.points[detail::closest_point_index(spec, q)];
  grad.resize(q.size());
  grad = q - *anchor;
  const double d = (spec.weights.array() * grad.array()).matrix().norm();
  const double value =
      spec.envelope.kind == EnvelopeKind::Ball ? std::max(0.0, d - spec.region_radius) : d;
  if (d > 0.0 && (spec.envelope.kind == EnvelopeKind::PointSet || d >= spec.region_radius))
    grad = (spec.weights.array().square() * grad.array()).matrix() / d;
  else
    grad.setZero();
  return value;
}

/// One descent update q <- clamp(q - a * grad), limit-clamped. The step
/// length is capped so the update cannot overshoot past the region target,
/// which keeps the field value non-increasing for any step size. With
/// unit_step the direction is normalized so each joint moves at most a.
inline JointConfig gradient_projection_step(const ErgoSpec& spec, const JointConfig& q,
                                            double a, bool unit_step = false) {
  if (!(a > 0.0)) throw std::invalid_argument("step size must be > 0");
  const FieldSample s = csef_sample(spec, q);
  if (s.gradient.isZero(0.0)) return clamp_to_limits(q, spec.limits);

  const JointConfig& target =
      spec.envelope.kind == EnvelopeKind::Ball ? spec.q_opt : s.closest_envelope_point;
  const double dn = detail::weighted_distance(spec.weights, q, target);
  const double maxw2 = spec.weights.array().square().maxCoeff();

  Eigen::VectorXd dir = s.gradient;
  double cap = dn / maxw2;  // per-joint no-overshoot bound for the raw gradient
  if (unit_step) {
    const double gn = dir.norm();
    dir /= gn;
    cap = dn * gn / maxw2;
  }
  const double t = std::min(a, cap);
  return clamp_to_limits(q - t * dir, spec.limits);
}

/// Penalty dominating every in-limit field value: 10x the maximum over the
/// limit-box corners.
inline double default_penalty(const ErgoSpec& spec) {
  const int n = spec.dof();
  double max_val = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    JointConfig corner(n);
    for (int i = 0; i < n; ++i)
      corner[i] = (mask >> i) & 1u ? spec.limits.upper[i] : spec.limits.lower[i];
    max_val = std::max(max_val, csef_value(spec, corner));
  }
  return 10.0 * max_val;
}

struct TsefOptions {
  double ik_tol = 1e-10;       // task-space tolerance of the numeric projection
  int nullspace_iters = 50;    // self-motion descent iterations per start
  double nullspace_step = 0.1; // initial self-motion step, rad
  IkOptions ik;
};

/// Result of projecting a task point onto its minimum-cost in-limit
/// configuration. feasible = false when no in-limit solution reaches p.
struct TsefProjection {
  bool feasible = false;
  JointConfig q;
  double value = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Self-motion descent for redundant chains: slide along the Jacobian
// nullspace to reduce the field value while re-projecting onto FK(q) = p.
inline TsefProjection polish_on_manifold(const ErgoSpec& spec, const KinematicChain& chain,
                                         const TaskPoint& p, JointConfig q,
                                         const TsefOptions& opts) {
  const int n = chain.dof();
  const int m = chain.task_dim();
  double value = csef_value(spec, q);
  double step = opts.nullspace_step;
  for (int it = 0; it < opts.nullspace_iters && step > 1e-5; ++it) {
    const Eigen::MatrixXd j = jacobian(chain, q);
    const Eigen::MatrixXd a =
        j * j.transpose() + 1e-12 * Eigen::MatrixXd::Identity(m, m);
    const Eigen::MatrixXd pinv = j.transpose() * a.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd g = csef_gradient(spec, q);
    Eigen::VectorXd dir = -(Eigen::MatrixXd::Identity(n, n) - pinv * j) * g;
    const double dn = dir.norm();
    if (dn < 1e-12) break;
    dir /= dn;
    const IkResult re = ik_numeric(chain, p, q + step * dir, opts.ik_tol, opts.ik);
    if (re.converged && chain.limits.contains(re.q, 1e-12)) {
      const double v = csef_value(spec, re.q);
      if (v < value - 1e-14) {
        q = re.q;
        value = v;
        continue;
      }
    }
    step *= 0.5;
  }
  return {true, q, value};
}

// Stratified in-limit seeds: all corners of the inner quartile box plus the
// mid-limits point. Postures folded into a limit corner are only recovered
// by the seed on their side of the box, so no corner can be skipped.
inline std::vector<JointConfig> stratified_seeds(const JointLimits& lim) {
  const int n = lim.dof();
  std::vector<JointConfig> seeds;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    JointConfig s(n);
    for (int i = 0; i < n; ++i) {
      const double f = (mask >> i) & 1u ? 0.75 : 0.25;
      s[i] = lim.lower[i] + f * (lim.upper[i] - lim.lower[i]);
    }
    seeds.push_back(s);
  }
  seeds.push_back(0.5 * (lim.lower + lim.upper));
  return seeds;
}

}  // namespace detail

/// Minimum-cost in-limit configuration reaching p. Planar chains enumerate
/// the analytic branches; the redundant chain uses multi-start numeric IK
/// followed by self-motion descent, so its value is a best-found upper
/// estimate of the true branch minimum.
inline TsefProjection tsef_project(const ErgoSpec& spec, const KinematicChain& chain,
                                   const TaskPoint& p, const TsefOptions& opts = {}) {
  if (chain.model == ChainModel::Planar2) {
    TsefProjection best;
    for (const IkSolution& sol : ik_planar(chain, p)) {
      if (!sol.within_limits) continue;
      const double v = csef_value(spec, sol.q);
      const bool better =
          !best.feasible || v < best.value ||
          (v == best.value && std::lexicographical_compare(
                                  sol.q.begin(), sol.q.end(), best.q.begin(), best.q.end()));
      if (better) best = {true, sol.q, v};
    }
    return best;
  }

  TsefProjection best;
  auto seeds = detail::stratified_seeds(chain.limits);
  seeds.push_back(clamp_to_limits(spec.q_opt, chain.limits));
  for (const JointConfig& seed : seeds) {
    const IkResult r = ik_numeric(chain, p, seed, opts.ik_tol, opts.ik);
    if (!r.converged || !chain.limits.contains(r.q, 1e-12)) continue;
    const TsefProjection cand = detail::polish_on_manifold(spec, chain, p, r.q, opts);
    if (!best.feasible || cand.value < best.value) best = cand;
  }
  return best;
}

/// Branch-local projection: numeric IK from the given seed followed by
/// self-motion descent, without multi-start. Keeps the result on the branch
/// continuous with the seed.
inline TsefProjection tsef_project_branch(const ErgoSpec& spec, const KinematicChain& chain,
                                          const TaskPoint& p, const JointConfig& seed,
                                          const TsefOptions& opts = {}) {
  if (chain.model == ChainModel::Planar2) {
    TsefProjection best;
    for (const IkSolution& sol : ik_planar(chain, p)) {
      if (!sol.within_limits) continue;
      const double d = (sol.q - seed).norm();
      if (!best.feasible || d < (best.q - seed).norm())
        best = {true, sol.q, csef_value(spec, sol.q)};
    }
    return best;
  }
  const IkResult r = ik_numeric(chain, p, seed, opts.ik_tol, opts.ik);
  if (!r.converged || !chain.limits.contains(r.q, 1e-12)) return {};
  return detail::polish_on_manifold(spec, chain, p, r.q, opts);
}

inline double tsef_value(const ErgoSpec& spec, const KinematicChain& chain,
                         const TaskPoint& p, double penalty_value,
                         const TsefOptions& opts = {}) {
  const TsefProjection proj = tsef_project(spec, chain, p, opts);
  return proj.feasible ? proj.value : penalty_value;
}

inline double tsef_value(const ErgoSpec& spec, const KinematicChain& chain,
                         const TaskPoint& p) {
  return tsef_value(spec, chain, p, default_penalty(spec));
}

/// Task-space field gradient at p via the damped pseudoinverse of the
/// Jacobian at the minimizing branch:
///   grad = (J J^T + lambda^2 I)^{-1} J grad_q
/// With lambda = 0 and full-row-rank J this is the exact pseudoinverse
/// pullback. Throws when p has no in-limit solution.
inline Eigen::VectorXd tsef_gradient(const ErgoSpec& spec, const KinematicChain& chain,
                                     const TaskPoint& p, double lambda,
                                     const TsefOptions& opts = {}) {
  if (lambda < 0.0) throw std::invalid_argument("tsef_gradient: damping must be >= 0");
  const TsefProjection proj = tsef_project(spec, chain, p, opts);
  if (!proj.feasible)
    throw std::domain_error("tsef_gradient: point has no in-limit solution");
  const Eigen::MatrixXd j = jacobian(chain, proj.q);
  const int m = chain.task_dim();
  const Eigen::MatrixXd a =
      j * j.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(m, m);
  return a.ldlt().solve(j * csef_gradient(spec, proj.q));
}

/// Task-space field sampled on an axis-aligned lattice. Samples sit on
/// lattice nodes lo + i * (hi - lo) / (resolution - 1), first axis fastest
/// in memory, so refining a grid reproduces coarse node values exactly.
struct FieldGrid {
  Eigen::VectorXd lo, hi;
  std::vector<int> resolution;  // nodes per axis, each >= 2
  double penalty_value = 0.0;
  std::vector<double> values;
  std::vector<std::uint8_t> reachable;

  int dim() const { return static_cast<int>(resolution.size()); }

  std::size_t size() const {
    std::size_t n = 1;
    for (int r : resolution) n *= static_cast<std::size_t>(r);
    return n;
  }

  double spacing(int axis) const {
    return (hi[axis] - lo[axis]) / (resolution[axis] - 1);
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0, stride = 1;
    for (int a = 0; a < dim(); ++a) {
      f += static_cast<std::size_t>(idx[a]) * stride;
      stride *= static_cast<std::size_t>(resolution[a]);
    }
    return f;
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(dim());
    for (int a = 0; a < dim(); ++a) {
      idx[a] = static_cast<int>(flat % resolution[a]);
      flat /= resolution[a];
    }
    return idx;
  }

  Eigen::VectorXd point_at(const std::vector<int>& idx) const {
    Eigen::VectorXd p(dim());
    for (int a = 0; a < dim(); ++a) p[a] = lo[a] + idx[a] * spacing(a);
    return p;
  }

  /// Index of the lattice node nearest to p (clamped to the bounds).
  std::vector<int> nearest_index(const Eigen::VectorXd& p) const {
    std::vector<int> idx(dim());
    for (int a = 0; a < dim(); ++a) {
      const int i = static_cast<int>(std::lround((p[a] - lo[a]) / spacing(a)));
      idx[a] = std::clamp(i, 0, resolution[a] - 1);
    }
    return idx;
  }

  bool in_bounds(const Eigen::VectorXd& p) const {
    for (int a = 0; a < dim(); ++a)
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    return true;
  }
};

/// Dense task-space field evaluation. Deterministic for fixed inputs; node
/// order is fixed by index regardless of worker count.
inline FieldGrid sample_tsef_grid(const ErgoSpec& spec, const KinematicChain& chain,
                                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                  const std::vector<int>& resolution,
                                  const TsefOptions& opts = {}) {
  if (lo.size() != chain.task_dim() || hi.size() != chain.task_dim() ||
      static_cast<int>(resolution.size()) != chain.task_dim())
    throw std::invalid_argument("grid bounds dimension mismatch");
  for (int a = 0; a < lo.size(); ++a)
    if (!(lo[a] < hi[a])) throw std::invalid_argument("grid bounds degenerate");
  for (int r : resolution)
    if (r < 2) throw std::invalid_argument("grid resolution must be >= 2 per axis");

  FieldGrid g;
  g.lo = lo;
  g.hi = hi;
  g.resolution = resolution;
  g.penalty_value = default_penalty(spec);
  const std::size_t n = g.size();
  g.values.resize(n);
  g.reachable.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    const TsefProjection proj = tsef_project(spec, chain, g.point_at(g.multi_index(f)), opts);
    g.values[f] = proj.feasible ? proj.value : g.penalty_value;
    g.reachable[f] = proj.feasible ? 1 : 0;
  }
  return g;
}

}  // namespace csefplan
