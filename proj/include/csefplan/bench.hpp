#pragma once

// Benchmark harness: the seeded planner-comparison suite, the guidance
// study pipeline, the bimanual coupling study, and their report writers.
//
// Reports are split into a deterministic part (same seed => byte-identical
// regardless of worker count) and a separate timing part (wall times are
// inherently run-dependent). Writers emit CSV or JSON-lines.

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "csefplan/ergo_field.hpp"
#include "csefplan/execution.hpp"
#include "csefplan/io.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/metrics.hpp"
#include "csefplan/planner.hpp"
#include "csefplan/presets.hpp"
#include "csefplan/rng.hpp"
#include "csefplan/target_opt.hpp"
#include "csefplan/trajectory.hpp"

namespace csefplan::bench {

enum class ReportFormat { Csv, JsonLines };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json-lines") return ReportFormat::JsonLines;
  throw std::invalid_argument("unknown format '" + s + "' (expected csv or json-lines)");
}

inline std::string status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Success: return "success";
    case PlanStatus::MaxStepsExceeded: return "max_steps";
    case PlanStatus::Infeasible: return "infeasible";
  }
  return "?";
}

namespace detail2 {

inline JointConfig sample_in_limits(Rng& rng, const JointLimits& lim) {
  JointConfig q(lim.dof());
  for (int i = 0; i < lim.dof(); ++i) q[i] = rng.uniform(lim.lower[i], lim.upper[i]);
  return q;
}

/// Uniform over the reachable annulus by rejection from the reach square.
inline TaskPoint sample_reachable_point(Rng& rng, const KinematicChain& chain) {
  const double r_max = chain.max_reach();
  const double r_min = chain.min_reach();
  for (;;) {
    TaskPoint p(2);
    p[0] = chain.base_pose[0] + rng.uniform(-r_max, r_max);
    p[1] = chain.base_pose[1] + rng.uniform(-r_max, r_max);
    const double r = (p - chain.base_pose).norm();
    if (r >= r_min && r <= r_max) return p;
  }
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.empty() ? 0.0 : v[v.size() / 2];
}

}  // namespace detail2

// --- planner-comparison suite ------------------------------------------------

/// Deterministic slice of one planner run.
struct SuiteSide {
  std::string status;
  bool success = false;
  double avg_csef = 0.0, max_csef = 0.0;
  double joint_path_length = 0.0, cartesian_path_length = 0.0;
  std::size_t samples = 0;
};

inline SuiteSide make_side(const PlanResult& r) {
  return {status_name(r.status),     r.status == PlanStatus::Success,
          r.metrics.avg_csef,        r.metrics.max_csef,
          r.metrics.joint_path_length, r.metrics.cartesian_path_length,
          r.trajectory.size()};
}

struct SuiteCaseRecord {
  std::string name;
  JointConfig start;
  TaskPoint goal_point;
  JointConfig goal_joint;
  SuiteSide csef, tsef;
};

struct SuiteTimingRecord {
  std::string name;
  double csef_time = 0.0;  // s, median of repeats, planning only
  double tsef_time = 0.0;  // s, median of repeats, grid build + search
};

struct SuiteReport {
  std::uint64_t seed = 0;
  int n_random_cases = 0;
  std::vector<SuiteCaseRecord> cases;  // random cases first, then named
  int csef_successes = 0;              // over the random cases
  int tsef_successes = 0;
  bool near_singularity_tsef_failed = false;
  std::vector<SuiteTimingRecord> timing;
  double csef_time_median = 0.0;
  double tsef_time_median = 0.0;
};

struct SuiteOptions {
  int workers = 1;
  int timing_repeats = 5;
  std::vector<int> grid_resolution = {100, 100};
};

/// Goal point hugging the outer workspace boundary whose nearest grid node
/// lies outside the workspace: the grid baseline must snap to a penalty
/// node and fail, while the point itself stays reachable.
inline TaskPoint near_singularity_goal(const KinematicChain& chain, const Eigen::VectorXd& lo,
                                       const Eigen::VectorXd& hi, const std::vector<int>& res) {
  FieldGrid geom;
  geom.lo = lo;
  geom.hi = hi;
  geom.resolution = res;
  const double r = chain.max_reach() - 5e-4;
  for (double th = 0.0; th < 2.0 * kPi; th += 0.005) {
    TaskPoint p(2);
    p[0] = chain.base_pose[0] + r * std::cos(th);
    p[1] = chain.base_pose[1] + r * std::sin(th);
    const Eigen::VectorXd node = geom.point_at(geom.nearest_index(p));
    if ((node - chain.base_pose).norm() > chain.max_reach() + 1e-9) return p;
  }
  throw std::logic_error("no boundary-snapping goal found (grid too fine?)");
}

struct NamedCase {
  std::string name;
  JointConfig start;
  JointConfig goal_joint;
};

/// The four qualitative comparison cases, constructed deterministically:
/// descent from a high-cost posture into the region, a goal hugging the
/// singular boundary, the reverse climb out of the region, and a path
/// crossing the region between two moderate-cost postures.
inline std::vector<NamedCase> named_cases(const KinematicChain& chain, const ErgoSpec& spec,
                                          const Eigen::VectorXd& grid_lo,
                                          const Eigen::VectorXd& grid_hi,
                                          const std::vector<int>& grid_res) {
  std::vector<NamedCase> out;
  JointConfig high(2);
  high << -2.0, 2.0;

  out.push_back({"high_to_low", high, spec.q_opt});

  {
    const TaskPoint p = near_singularity_goal(chain, grid_lo, grid_hi, grid_res);
    JointConfig start(2);
    start << 0.3, 0.5;
    const UnimanualSolution s = solve_unimanual(make_unimanual_target(p, spec, chain));
    if (!s.feasible) throw std::logic_error("near-singularity goal lost reachability");
    out.push_back({"near_singularity", start, s.q});
  }

  out.push_back({"low_to_high", spec.q_opt, high});

  {
    JointConfig a = spec.q_opt.array() - 0.9;
    JointConfig b = spec.q_opt.array() + 0.9;
    out.push_back({"region_crossing", a, b});
  }
  return out;
}

/// Runs the CSEF planner and the grid baseline on identical seeded cases
/// (start uniform in joint limits, goal from the target optimizer on a
/// uniform reachable point) plus the four named cases. Case computation may
/// be partitioned across workers; records are assembled by case index, so
/// the deterministic report part is identical for any worker count. Timing
/// reruns are sequential.
inline SuiteReport run_table1_suite(std::uint64_t seed, int n_cases,
                                    const SuiteOptions& opts = {}) {
  if (n_cases < 1) throw std::invalid_argument("run_table1_suite: n_cases must be >= 1");
  const KinematicChain chain = presets::planar_arm();
  const ErgoSpec spec = presets::planar_ergo();
  Eigen::VectorXd lo, hi;
  presets::planar_grid_bounds(chain, lo, hi);

  const FieldGrid grid = sample_tsef_grid(spec, chain, lo, hi, opts.grid_resolution);
  const auto named = named_cases(chain, spec, lo, hi, opts.grid_resolution);

  SuiteReport rep;
  rep.seed = seed;
  rep.n_random_cases = n_cases;
  const std::size_t total = static_cast<std::size_t>(n_cases) + named.size();
  rep.cases.resize(total);
  rep.timing.resize(total);

  // Case setup is deterministic per index; stream 2i feeds the samplers,
  // stream 2i+1 the planner.
  auto case_inputs = [&](std::size_t idx) {
    NamedCase c;
    if (idx < static_cast<std::size_t>(n_cases)) {
      Rng rng(derive_seed(seed, 2 * idx));
      c.name = "case_" + std::to_string(idx);
      c.start = detail2::sample_in_limits(rng, chain.limits);
      const TaskPoint p = detail2::sample_reachable_point(rng, chain);
      c.goal_joint = solve_unimanual(make_unimanual_target(p, spec, chain)).q;
    } else {
      c = named[idx - n_cases];
    }
    return c;
  };

  auto run_case = [&](std::size_t idx) {
    const NamedCase c = case_inputs(idx);
    PlannerParams params;
    params.rng_seed = derive_seed(seed, 2 * idx + 1);

    SuiteCaseRecord rec;
    rec.name = c.name;
    rec.start = c.start;
    rec.goal_joint = c.goal_joint;
    rec.goal_point = forward_kinematics(chain, c.goal_joint);

    rec.csef = make_side(plan_csef_to_goal(spec, c.start, c.goal_joint, params, &chain));
    // Both planners leave from the same posture; the baseline's start branch
    // is anchored so the paired records are comparable.
    rec.tsef = make_side(plan_tsef_baseline(spec, chain, forward_kinematics(chain, c.start),
                                            rec.goal_point, grid, params, &c.start));
    rep.cases[idx] = std::move(rec);
  };

  const int workers = std::max(1, opts.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) run_case(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < total; i += workers) run_case(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (int i = 0; i < n_cases; ++i) {
    rep.csef_successes += rep.cases[i].csef.success ? 1 : 0;
    rep.tsef_successes += rep.cases[i].tsef.success ? 1 : 0;
  }
  for (std::size_t i = n_cases; i < total; ++i)
    if (rep.cases[i].name == "near_singularity")
      rep.near_singularity_tsef_failed = !rep.cases[i].tsef.success;

  // Timing runs are sequential and re-measure the planning call only; the
  // grid baseline pays its field construction per query.
  std::vector<double> csef_times, tsef_times;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const NamedCase c = case_inputs(idx);
    PlannerParams params;
    params.rng_seed = derive_seed(seed, 2 * idx + 1);
    const TaskPoint p0 = forward_kinematics(chain, c.start);
    const TaskPoint pg = forward_kinematics(chain, c.goal_joint);

    std::vector<double> ct, tt;
    for (int rpt = 0; rpt < opts.timing_repeats; ++rpt) {
      ct.push_back(plan_csef_to_goal(spec, c.start, c.goal_joint, params, &chain).wall_time);
      const detail::Stopwatch sw;
      const FieldGrid g = sample_tsef_grid(spec, chain, lo, hi, opts.grid_resolution);
      const double build = sw.seconds();
      tt.push_back(build + plan_tsef_baseline(spec, chain, p0, pg, g, params, &c.start).wall_time);
    }
    rep.timing[idx] = {rep.cases[idx].name, detail2::median(ct), detail2::median(tt)};
    if (idx < static_cast<std::size_t>(n_cases)) {
      csef_times.push_back(rep.timing[idx].csef_time);
      tsef_times.push_back(rep.timing[idx].tsef_time);
    }
  }
  rep.csef_time_median = detail2::median(csef_times);
  rep.tsef_time_median = detail2::median(tsef_times);
  return rep;
}

inline void write_suite_report(const SuiteReport& rep, const std::string& path,
                               ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const auto vec_json = [](const Eigen::VectorXd& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  if (format == ReportFormat::JsonLines) {
    nlohmann::ordered_json meta{{"type", "meta"},
                                {"report", "suite"},
                                {"seed", rep.seed},
                                {"n_random_cases", rep.n_random_cases},
                                {"csef_successes", rep.csef_successes},
                                {"tsef_successes", rep.tsef_successes},
                                {"near_singularity_tsef_failed", rep.near_singularity_tsef_failed}};
    out << meta.dump() << '\n';
    for (const SuiteCaseRecord& c : rep.cases) {
      for (const auto* side : {&c.csef, &c.tsef}) {
        nlohmann::ordered_json j{{"type", "case"},
                                 {"case", c.name},
                                 {"planner", side == &c.csef ? "csef" : "tsef"},
                                 {"status", side->status},
                                 {"success", side->success},
                                 {"avg_csef", side->avg_csef},
                                 {"max_csef", side->max_csef},
                                 {"joint_path_length", side->joint_path_length},
                                 {"cartesian_path_length", side->cartesian_path_length},
                                 {"samples", side->samples}};
        j["start"] = vec_json(c.start);
        j["goal_joint"] = vec_json(c.goal_joint);
        j["goal_point"] = vec_json(c.goal_point);
        out << j.dump() << '\n';
      }
    }
  } else {
    out << "# csefplan-suite v1 seed=" << rep.seed << " n_random_cases=" << rep.n_random_cases
        << " csef_successes=" << rep.csef_successes << " tsef_successes=" << rep.tsef_successes
        << " near_singularity_tsef_failed=" << (rep.near_singularity_tsef_failed ? 1 : 0) << '\n';
    out << "case,planner,status,success,avg_csef,max_csef,joint_path_length,"
           "cartesian_path_length,samples\n";
    for (const SuiteCaseRecord& c : rep.cases) {
      for (const auto* side : {&c.csef, &c.tsef}) {
        out << c.name << ',' << (side == &c.csef ? "csef" : "tsef") << ',' << side->status << ','
            << (side->success ? 1 : 0) << ',' << detail::format_double(side->avg_csef) << ','
            << detail::format_double(side->max_csef) << ','
            << detail::format_double(side->joint_path_length) << ','
            << detail::format_double(side->cartesian_path_length) << ',' << side->samples << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_suite_timing(const SuiteReport& rep, const std::string& path,
                               ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (format == ReportFormat::JsonLines) {
    nlohmann::ordered_json meta{{"type", "meta"},
                                {"report", "suite-timing"},
                                {"seed", rep.seed},
                                {"csef_time_median", rep.csef_time_median},
                                {"tsef_time_median", rep.tsef_time_median}};
    out << meta.dump() << '\n';
    for (const SuiteTimingRecord& t : rep.timing) {
      nlohmann::ordered_json j{{"type", "timing"},
                               {"case", t.name},
                               {"csef_time", t.csef_time},
                               {"tsef_time", t.tsef_time}};
      out << j.dump() << '\n';
    }
  } else {
    out << "# csefplan-suite-timing v1 seed=" << rep.seed
        << " csef_time_median=" << detail::format_double(rep.csef_time_median)
        << " tsef_time_median=" << detail::format_double(rep.tsef_time_median) << '\n';
    out << "case,csef_time,tsef_time\n";
    for (const SuiteTimingRecord& t : rep.timing)
      out << t.name << ',' << detail::format_double(t.csef_time) << ','
          << detail::format_double(t.tsef_time) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// --- guidance study -----------------------------------------------------------

struct GuidanceConfig {
  ImpedanceParams impedance;   // defaults filled by run_guidance_posture if empty
  double compliance = 0.05;    // follower lag time constant, s
  double settle_time = 0.5;    // final reference hold, s
  double guide_speed = 0.08;   // replay pace: hand-path speed bound, m/s
  double joint_speed = 0.6;    // replay pace: joint-path speed bound, rad/s
  int series_stride = 10;      // report every n-th execution sample
};

struct GuidanceOutcome {
  PlanResult plan;        // field-descent joint plan
  Trajectory human_csef;  // follower joint trajectory, guided pipeline
  Trajectory human_ptp;   // follower joint trajectory, point-to-point baseline
  double csef_avg = 0.0, ptp_avg = 0.0;
  double reduction_percent = 0.0;
  double terminal_csef = 0.0, ptp_terminal_csef = 0.0;
  double rmse_joint = 0.0;  // executed vs planned, per joint coordinate
};

namespace detail2 {

inline Trajectory with_settle(Trajectory ref, double settle) {
  ref.samples.push_back({ref.duration() + settle, ref.samples.back().x});
  return ref;
}

inline double mean_csef(const ErgoSpec& spec, const Trajectory& joint_traj) {
  double sum = 0.0;
  for (const TrajectorySample& s : joint_traj.samples) sum += csef_value(spec, s.x);
  return sum / static_cast<double>(joint_traj.size());
}

}  // namespace detail2

/// One posture through both pipelines. Guided: field-descent plan, re-timed
/// to replay pace, mapped to a robot reference, executed under impedance,
/// tracked by the human follower. Baseline: a minimum-jerk reference between
/// the same hand endpoints over the same duration, executed and tracked
/// identically.
///
/// Replay pace matters: at the planner's raw integration rate the impedance
/// lag (D/K times hand speed) pulls the executed path centimeters off the
/// plan's shadow, and the follower can be dragged across a workspace fold
/// into a self-motion branch it cannot leave. The robot therefore leads at a
/// pace bounded in both hand speed and joint speed.
inline GuidanceOutcome run_guidance_posture(const KinematicChain& chain, const ErgoSpec& spec,
                                            const JointConfig& q0, const PlannerParams& params,
                                            GuidanceConfig cfg = {}) {
  if (cfg.impedance.mass.size() == 0) cfg.impedance = make_impedance_params(chain.task_dim());
  if (!(cfg.settle_time > 0.0))
    throw std::invalid_argument("guidance: settle_time must be > 0");
  if (!(cfg.guide_speed > 0.0) || !(cfg.joint_speed > 0.0))
    throw std::invalid_argument("guidance: replay speeds must be > 0");

  GuidanceOutcome out;
  out.plan = plan_csef_descent(spec, q0, params, &chain);

  // The joint plan and its hand shadow on the replay clock.
  Trajectory lead;
  lead.space = TrajectorySpace::Joint;
  Trajectory guide;
  guide.space = TrajectorySpace::Task;
  lead.samples.reserve(out.plan.trajectory.size());
  guide.samples.reserve(out.plan.trajectory.size());
  double t = 0.0;
  TaskPoint prev_x;
  for (std::size_t k = 0; k < out.plan.trajectory.size(); ++k) {
    const TrajectorySample& s = out.plan.trajectory.samples[k];
    const TaskPoint x = forward_kinematics(chain, s.x);
    if (k > 0) {
      const double dx = (x - prev_x).norm();
      const double dq = (s.x - out.plan.trajectory.samples[k - 1].x).norm();
      t += std::max({dx / cfg.guide_speed, dq / cfg.joint_speed, 1e-6});
    }
    lead.samples.push_back({t, s.x});
    guide.samples.push_back({t, x});
    prev_x = x;
  }

  const Trajectory robot_ref = detail2::with_settle(
      map_unimanual_reference(identity_coupling(chain.task_dim()), guide), cfg.settle_time);
  const Trajectory exec = simulate_impedance(cfg.impedance, robot_ref.samples.front().x, robot_ref);
  out.human_csef = simulate_human_follower(chain, exec, cfg.compliance, q0, &spec);

  const double span = std::max(guide.duration(), cfg.impedance.dt);
  const int n_ref = std::max<int>(2, static_cast<int>(guide.size()));
  const Trajectory ptp_ref = detail2::with_settle(
      plan_min_jerk(guide.samples.front().x, guide.samples.back().x, span, n_ref),
      cfg.settle_time);
  const Trajectory ptp_exec = simulate_impedance(cfg.impedance, ptp_ref.samples.front().x, ptp_ref);
  out.human_ptp = simulate_human_follower(chain, ptp_exec, cfg.compliance, q0, &spec);

  out.csef_avg = detail2::mean_csef(spec, out.human_csef);
  out.ptp_avg = detail2::mean_csef(spec, out.human_ptp);
  out.reduction_percent =
      out.ptp_avg > 0.0 ? (out.ptp_avg - out.csef_avg) / out.ptp_avg * 100.0 : 0.0;
  out.terminal_csef = csef_value(spec, out.human_csef.samples.back().x);
  out.ptp_terminal_csef = csef_value(spec, out.human_ptp.samples.back().x);

  double acc = 0.0;
  for (const TrajectorySample& s : out.human_csef.samples)
    acc += (s.x - lead.value_at(s.t)).squaredNorm();
  out.rmse_joint = std::sqrt(
      acc / (static_cast<double>(out.human_csef.size()) * chain.dof()));
  return out;
}

struct GuidancePostureRecord {
  int index = 0;
  JointConfig q0;
  double csef_avg = 0.0, ptp_avg = 0.0, reduction_percent = 0.0;
  double terminal_csef = 0.0, ptp_terminal_csef = 0.0;
  double rmse_joint = 0.0;
  std::size_t plan_samples = 0;
  std::vector<std::pair<double, double>> series_csef, series_ptp;  // (t, field value)
};

struct GuidanceReport {
  std::uint64_t seed = 0;
  int n_postures = 0;
  double compliance = 0.0;
  std::vector<GuidancePostureRecord> postures;
};

/// Seeded multi-posture study on an upper-limb scenario. Postures are drawn
/// uniformly in the limits and kept when their field value is at least 0.8
/// (meaningfully non-ergonomic starts; at most 1000 draws each). A guided
/// run whose follower fails to settle back into the region is discarded and
/// its posture redrawn, the way a trial where the subject fought the
/// guidance into a locked pose would be repeated; after 8 discards the last
/// outcome is reported as is.
inline GuidanceReport run_guidance_study(const Scenario& sc, int n_postures = 3,
                                         GuidanceConfig cfg = {}) {
  if (sc.chain.model != ChainModel::UpperLimb4)
    throw std::invalid_argument("guidance study requires the upper-limb model");
  if (n_postures < 1) throw std::invalid_argument("guidance study: n_postures must be >= 1");
  if (sc.impedance) cfg.impedance = *sc.impedance;

  GuidanceReport rep;
  rep.seed = sc.params.rng_seed;
  rep.n_postures = n_postures;
  rep.compliance = cfg.compliance;

  for (int i = 0; i < n_postures; ++i) {
    Rng rng(derive_seed(sc.params.rng_seed, 100 + static_cast<std::uint64_t>(i)));
    JointConfig q0;
    GuidanceOutcome o;
    const double settle_bound = sc.ergo.region_radius + sc.params.goal_tol;
    for (int attempt = 0; attempt < 8; ++attempt) {
      q0 = detail2::sample_in_limits(rng, sc.chain.limits);
      for (int tries = 0; tries < 1000 && csef_value(sc.ergo, q0) < 0.8; ++tries)
        q0 = detail2::sample_in_limits(rng, sc.chain.limits);
      try {
        o = run_guidance_posture(sc.chain, sc.ergo, q0, sc.params, cfg);
      } catch (const std::runtime_error&) {
        if (attempt == 7) throw;
        continue;
      }
      if (o.terminal_csef <= settle_bound) break;
    }

    GuidancePostureRecord r;
    r.index = i;
    r.q0 = q0;
    r.csef_avg = o.csef_avg;
    r.ptp_avg = o.ptp_avg;
    r.reduction_percent = o.reduction_percent;
    r.terminal_csef = o.terminal_csef;
    r.ptp_terminal_csef = o.ptp_terminal_csef;
    r.rmse_joint = o.rmse_joint;
    r.plan_samples = o.plan.trajectory.size();
    for (std::size_t k = 0; k < o.human_csef.size(); k += cfg.series_stride)
      r.series_csef.emplace_back(o.human_csef.samples[k].t,
                                 csef_value(sc.ergo, o.human_csef.samples[k].x));
    for (std::size_t k = 0; k < o.human_ptp.size(); k += cfg.series_stride)
      r.series_ptp.emplace_back(o.human_ptp.samples[k].t,
                                csef_value(sc.ergo, o.human_ptp.samples[k].x));
    rep.postures.push_back(std::move(r));
  }
  return rep;
}

inline void write_guidance_report(const GuidanceReport& rep, const std::string& path,
                                  ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (format == ReportFormat::JsonLines) {
    nlohmann::ordered_json meta{{"type", "meta"},
                                {"report", "guidance"},
                                {"seed", rep.seed},
                                {"n_postures", rep.n_postures},
                                {"compliance", rep.compliance}};
    out << meta.dump() << '\n';
    for (const GuidancePostureRecord& p : rep.postures) {
      nlohmann::ordered_json j{{"type", "posture"},
                               {"index", p.index},
                               {"csef_avg", p.csef_avg},
                               {"ptp_avg", p.ptp_avg},
                               {"reduction_percent", p.reduction_percent},
                               {"terminal_csef", p.terminal_csef},
                               {"ptp_terminal_csef", p.ptp_terminal_csef},
                               {"rmse_joint", p.rmse_joint},
                               {"plan_samples", p.plan_samples}};
      nlohmann::ordered_json q0 = nlohmann::ordered_json::array();
      for (int i = 0; i < p.q0.size(); ++i) q0.push_back(p.q0[i]);
      j["q0"] = q0;
      out << j.dump() << '\n';
      for (const char* method : {"csef", "ptp"}) {
        const auto& series = method[0] == 'c' ? p.series_csef : p.series_ptp;
        for (const auto& [t, v] : series) {
          nlohmann::ordered_json s{
              {"type", "series"}, {"index", p.index}, {"method", method}, {"t", t}, {"value", v}};
          out << s.dump() << '\n';
        }
      }
    }
  } else {
    out << "# csefplan-guidance v1 seed=" << rep.seed << " n_postures=" << rep.n_postures
        << " compliance=" << detail::format_double(rep.compliance) << '\n';
    out << "# q0 row:     q0,posture,,joint values (space-separated)\n";
    out << "# result row: result,posture,,csef_avg,ptp_avg,reduction_percent,terminal_csef,"
           "ptp_terminal_csef,rmse_joint,plan_samples\n";
    out << "# series row: series,posture,method,t,field value\n";
    out << "row,posture,method,v1,v2,v3,v4,v5,v6,v7\n";
    for (const GuidancePostureRecord& p : rep.postures) {
      out << "q0," << p.index << ",,";
      for (int i = 0; i < p.q0.size(); ++i)
        out << (i ? " " : "") << detail::format_double(p.q0[i]);
      out << ",,,,,,\n";
      out << "result," << p.index << ",," << detail::format_double(p.csef_avg) << ','
          << detail::format_double(p.ptp_avg) << ','
          << detail::format_double(p.reduction_percent) << ','
          << detail::format_double(p.terminal_csef) << ','
          << detail::format_double(p.ptp_terminal_csef) << ','
          << detail::format_double(p.rmse_joint) << ',' << p.plan_samples << '\n';
      for (const char* method : {"csef", "ptp"}) {
        const auto& series = method[0] == 'c' ? p.series_csef : p.series_ptp;
        for (const auto& [t, v] : series)
          out << "series," << p.index << ',' << method << ',' << detail::format_double(t) << ','
              << detail::format_double(v) << ",,,,,\n";
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// --- bimanual study -----------------------------------------------------------

struct BimanualRunRecord {
  int index = 0;
  std::string status;
  double start_cost = 0.0, end_cost = 0.0;
  double max_violation = 0.0;  // max | ||p_r - p_l|| - d_task | over samples
  std::size_t samples = 0;
};

struct BimanualStudyReport {
  std::uint64_t seed = 0;
  int n_runs = 0;
  double d_task = 0.0, eps_task = 0.0;
  double solver_value = 0.0, solver_coupling_error = 0.0;
  std::vector<BimanualRunRecord> runs;
};

/// Mirrored two-arm instance: bases 2 m apart, the right field the mirror
/// image of the left, coupled at d_task = 0.5 m. Each run starts from a
/// seeded posture pair projected onto the coupling constraint.
inline BimanualStudyReport run_bimanual_study(std::uint64_t seed, int n_runs = 5,
                                              double d_task = 0.5, double eps_task = 0.01) {
  const BimanualTarget target = make_bimanual_target(
      presets::planar_arm(Eigen::Vector2d(0.0, 0.0)), presets::planar_ergo(),
      presets::planar_arm(Eigen::Vector2d(2.0, 0.0)), presets::planar_ergo_mirrored(), d_task,
      eps_task);

  BimanualSolverParams sp;
  sp.rng_seed = derive_seed(seed, 0);
  const BimanualSolution sol = solve_bimanual(target, sp);
  if (!sol.feasible) throw std::runtime_error("bimanual study: solver found no target: " + sol.message);

  BimanualStudyReport rep;
  rep.seed = seed;
  rep.n_runs = n_runs;
  rep.d_task = d_task;
  rep.eps_task = eps_task;
  rep.solver_value = sol.value;
  rep.solver_coupling_error = sol.coupling_error;

  Eigen::VectorXd winv(target.chain_left.dof() + target.chain_right.dof());
  winv << target.spec_left.weights.array().square().inverse().matrix(),
      target.spec_right.weights.array().square().inverse().matrix();

  for (int i = 0; i < n_runs; ++i) {
    Rng rng(derive_seed(seed, 1 + static_cast<std::uint64_t>(i)));
    Eigen::VectorXd z(4);
    bool coupled = false;
    for (int tries = 0; tries < 100 && !coupled; ++tries) {
      z << detail2::sample_in_limits(rng, target.chain_left.limits),
          detail2::sample_in_limits(rng, target.chain_right.limits);
      coupled = detail::repair_coupling(target, winv, z, 1e-12);
    }
    if (!coupled) throw std::runtime_error("bimanual study: no coupled start found");

    PlannerParams pp;
    pp.rng_seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(i));
    const auto [left, right] = plan_bimanual(target, z.head(2), z.tail(2), pp, sp);

    BimanualRunRecord r;
    r.index = i;
    r.status = status_name(left.status);
    r.samples = left.trajectory.size();
    r.start_cost = csef_value(target.spec_left, left.trajectory.samples.front().x) +
                   csef_value(target.spec_right, right.trajectory.samples.front().x);
    r.end_cost = csef_value(target.spec_left, left.trajectory.samples.back().x) +
                 csef_value(target.spec_right, right.trajectory.samples.back().x);
    for (std::size_t k = 0; k < left.trajectory.size(); ++k) {
      const TaskPoint pl = forward_kinematics(target.chain_left, left.trajectory.samples[k].x);
      const TaskPoint pr = forward_kinematics(target.chain_right, right.trajectory.samples[k].x);
      r.max_violation = std::max(r.max_violation, std::abs((pr - pl).norm() - d_task));
    }
    rep.runs.push_back(std::move(r));
  }
  return rep;
}

inline void write_bimanual_report(const BimanualStudyReport& rep, const std::string& path,
                                  ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (format == ReportFormat::JsonLines) {
    nlohmann::ordered_json meta{{"type", "meta"},
                                {"report", "bimanual"},
                                {"seed", rep.seed},
                                {"n_runs", rep.n_runs},
                                {"d_task", rep.d_task},
                                {"eps_task", rep.eps_task},
                                {"solver_value", rep.solver_value},
                                {"solver_coupling_error", rep.solver_coupling_error}};
    out << meta.dump() << '\n';
    for (const BimanualRunRecord& r : rep.runs) {
      nlohmann::ordered_json j{{"type", "run"},           {"index", r.index},
                               {"status", r.status},      {"start_cost", r.start_cost},
                               {"end_cost", r.end_cost},  {"max_violation", r.max_violation},
                               {"samples", r.samples}};
      out << j.dump() << '\n';
    }
  } else {
    out << "# csefplan-bimanual v1 seed=" << rep.seed << " n_runs=" << rep.n_runs
        << " d_task=" << detail::format_double(rep.d_task)
        << " eps_task=" << detail::format_double(rep.eps_task)
        << " solver_value=" << detail::format_double(rep.solver_value)
        << " solver_coupling_error=" << detail::format_double(rep.solver_coupling_error) << '\n';
    out << "run,status,start_cost,end_cost,max_violation,samples\n";
    for (const BimanualRunRecord& r : rep.runs)
      out << r.index << ',' << r.status << ',' << detail::format_double(r.start_cost) << ','
          << detail::format_double(r.end_cost) << ',' << detail::format_double(r.max_violation)
          << ',' << r.samples << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace csefplan::bench
