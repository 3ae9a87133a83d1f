// Command-line front end: runs scenario files through the planners and the
// studies, and writes trajectories, grids, and reports.
//
// Exit codes: 0 success, 1 planning or execution failure, 2 usage or input
// errors.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csefplan/bench.hpp"
#include "csefplan/io.hpp"
#include "csefplan/presets.hpp"

using namespace csefplan;

namespace {

void print_result(const char* label, const PlanResult& r) {
  std::printf("%s: %s, %zu samples, %.3f ms, avg field %.6f, max field %.6f\n", label,
              bench::status_name(r.status).c_str(), r.trajectory.size(), r.wall_time * 1e3,
              r.metrics.avg_csef, r.metrics.max_csef);
}

// Reports the outcome and writes the trajectory when there is one to write;
// a failed plan with no samples is still a clean exit-1, not an IO error.
int finish_plan(const char* label, const PlanResult& r, const std::string& out) {
  print_result(label, r);
  if (!r.trajectory.empty()) export_trajectory(r.trajectory, out);
  return r.status == PlanStatus::Success ? 0 : 1;
}

int cmd_plan(Scenario sc, const std::string& out, std::optional<std::uint64_t> seed) {
  if (seed) {
    sc.params.rng_seed = *seed;
    sc.seed_given = true;
  }
  switch (sc.planner) {
    case PlannerKind::CsefDescent: {
      const PlanResult r = plan_csef_descent(sc.ergo, *sc.start_joint, sc.params, &sc.chain);
      return finish_plan("csef_descent", r, out);
    }
    case PlannerKind::CsefToGoal: {
      JointConfig goal;
      if (sc.goal_joint) {
        goal = *sc.goal_joint;
      } else {
        const UnimanualSolution s =
            solve_unimanual(make_unimanual_target(*sc.goal_task, sc.ergo, sc.chain));
        if (!s.feasible) {
          std::cerr << "error: " << s.message << '\n';
          return 1;
        }
        goal = s.q;
      }
      const PlanResult r = plan_csef_to_goal(sc.ergo, *sc.start_joint, goal, sc.params, &sc.chain);
      return finish_plan("csef_to_goal", r, out);
    }
    case PlannerKind::TsefBaseline: {
      Eigen::VectorXd lo, hi;
      presets::planar_grid_bounds(sc.chain, lo, hi);
      const FieldGrid grid = sample_tsef_grid(sc.ergo, sc.chain, lo, hi, sc.grid_resolution);
      const PlanResult r =
          plan_tsef_baseline(sc.ergo, sc.chain, *sc.start_task, *sc.goal_task, grid, sc.params,
                             sc.start_joint ? &*sc.start_joint : nullptr);
      return finish_plan("tsef_baseline", r, out);
    }
    case PlannerKind::MinJerk: {
      const Trajectory t =
          plan_min_jerk(*sc.start_task, *sc.goal_task, sc.min_jerk_duration, sc.min_jerk_samples);
      export_trajectory(t, out);
      std::printf("min_jerk: success, %zu samples over %.3f s\n", t.size(), t.duration());
      return 0;
    }
    case PlannerKind::Bimanual: {
      const BimanualTarget target = make_bimanual_target(sc.chain, sc.ergo, *sc.chain_right,
                                                         *sc.ergo_right, *sc.d_task, *sc.eps_task);
      const auto [l, r] = plan_bimanual(target, *sc.start_joint, *sc.start_joint_right, sc.params);
      const int cl = finish_plan("bimanual left", l, out);
      const int cr = finish_plan("bimanual right", r, out + ".right");
      return cl == 0 && cr == 0 ? 0 : 1;
    }
  }
  return 1;
}

int cmd_simulate(Scenario sc, const std::string& out, double compliance, double settle,
                 std::optional<std::uint64_t> seed) {
  if (seed) {
    sc.params.rng_seed = *seed;
    sc.seed_given = true;
  }
  if (sc.planner == PlannerKind::Bimanual) {
    std::cerr << "error: simulate supports unimanual scenarios only\n";
    return 2;
  }

  Trajectory guide;
  std::optional<JointConfig> q0;
  if (sc.planner == PlannerKind::MinJerk) {
    guide = plan_min_jerk(*sc.start_task, *sc.goal_task, sc.min_jerk_duration, sc.min_jerk_samples);
    if (sc.start_joint) q0 = *sc.start_joint;
  } else {
    Scenario probe = sc;
    const std::string plan_out = out + ".plan";
    const int code = cmd_plan(probe, plan_out, std::nullopt);
    if (code != 0) return code;
    const Trajectory planned = load_trajectory(plan_out);
    if (planned.space == TrajectorySpace::Joint) {
      guide.space = TrajectorySpace::Task;
      for (const TrajectorySample& s : planned.samples)
        guide.samples.push_back({s.t, forward_kinematics(sc.chain, s.x)});
      q0 = planned.samples.front().x;
    } else {
      guide = planned;
    }
  }

  const ImpedanceParams imp =
      sc.impedance ? *sc.impedance : make_impedance_params(sc.chain.task_dim());
  Trajectory ref = guide;
  ref.samples.push_back({guide.duration() + settle, guide.samples.back().x});
  // Raw-clock replay: the follower tracks the executed reference as planned,
  // without the study's guide-speed re-timing or comfort self-motion.
  const Trajectory exec = simulate_impedance(imp, ref.samples.front().x, ref);
  const Trajectory human = simulate_human_follower(sc.chain, exec, compliance, q0);
  export_trajectory(human, out);

  double avg = 0.0;
  for (const TrajectorySample& s : human.samples) avg += csef_value(sc.ergo, s.x);
  avg /= static_cast<double>(human.size());
  std::printf("simulate: %zu follower samples over %.3f s, avg field %.6f, final field %.6f\n",
              human.size(), human.duration(), avg, csef_value(sc.ergo, human.samples.back().x));
  return 0;
}

int cmd_grid(const Scenario& sc, const std::string& out, std::vector<int> res) {
  if (sc.chain.task_dim() != 2) {
    std::cerr << "error: grid export needs a planar scenario\n";
    return 2;
  }
  if (res.empty()) res = sc.grid_resolution;
  Eigen::VectorXd lo, hi;
  presets::planar_grid_bounds(sc.chain, lo, hi);
  const FieldGrid g = sample_tsef_grid(sc.ergo, sc.chain, lo, hi, res);
  export_grid(g, out);
  std::size_t reachable = 0;
  for (const std::uint8_t r : g.reachable) reachable += r;
  std::printf("grid: %dx%d nodes, %zu reachable, penalty %.6f\n", res[0], res[1], reachable,
              g.penalty_value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergonomic-field motion planning toolkit"};
  app.require_subcommand(1);

  std::string scn_path, out_path, format = "csv";
  std::uint64_t seed_val = 0;
  const auto format_check = CLI::IsMember({"csv", "json-lines"});

  auto* plan = app.add_subcommand("plan", "run one scenario, export the trajectory");
  plan->add_option("--scenario", scn_path, "scenario file")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out_path, "trajectory output path")->required();
  auto* plan_seed = plan->add_option("--seed", seed_val, "override the scenario rng seed");

  auto* bench_cmd = app.add_subcommand("bench-table1",
                                       "seeded field-vs-baseline comparison suite; the report "
                                       "goes to --out, timings to --out.timing");
  int bench_cases = 100, bench_workers = 1, bench_repeats = 5;
  std::vector<int> bench_res;
  bench_cmd->add_option("--seed", seed_val, "suite seed")->default_val(424242);
  bench_cmd->add_option("--cases", bench_cases, "number of random cases")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--workers", bench_workers, "worker threads for the case runs")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench_repeats, "timing repetitions per case")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--resolution", bench_res, "baseline grid nodes per axis")->expected(2);
  bench_cmd->add_option("--out", out_path, "report output path")->required();
  bench_cmd->add_option("--format", format, "report format")->check(format_check);

  auto* guid = app.add_subcommand("study-guidance",
                                  "guided vs point-to-point execution over seeded postures");
  int guid_postures = 3;
  double guid_compliance = 0.05, guid_settle = 0.5;
  guid->add_option("--scenario", scn_path, "upper-limb scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  guid->add_option("--postures", guid_postures, "number of seeded postures")
      ->check(CLI::PositiveNumber);
  guid->add_option("--compliance", guid_compliance, "follower lag time constant, s");
  guid->add_option("--settle", guid_settle, "reference hold time, s");
  auto* guid_seed = guid->add_option("--seed", seed_val, "override the scenario rng seed");
  guid->add_option("--out", out_path, "report output path")->required();
  guid->add_option("--format", format, "report format")->check(format_check);

  auto* bim = app.add_subcommand("study-bimanual", "coupled two-arm planning study");
  int bim_runs = 5;
  double bim_d = 0.5, bim_eps = 0.01;
  bim->add_option("--seed", seed_val, "study seed")->default_val(424242);
  bim->add_option("--runs", bim_runs, "number of seeded runs")->check(CLI::PositiveNumber);
  bim->add_option("--d-task", bim_d, "inter-hand distance, m")->check(CLI::PositiveNumber);
  bim->add_option("--eps-task", bim_eps, "coupling tolerance, m")->check(CLI::PositiveNumber);
  bim->add_option("--out", out_path, "report output path")->required();
  bim->add_option("--format", format, "report format")->check(format_check);

  auto* grid = app.add_subcommand("grid", "sample the task-space field onto a lattice");
  std::vector<int> grid_res;
  grid->add_option("--scenario", scn_path, "scenario file")->required()->check(CLI::ExistingFile);
  grid->add_option("--resolution", grid_res, "nodes per axis")->expected(2);
  grid->add_option("--out", out_path, "grid output path")->required();

  auto* sim = app.add_subcommand("simulate",
                                 "plan, execute under impedance, track with the human follower");
  double sim_compliance = 0.05, sim_settle = 0.5;
  sim->add_option("--scenario", scn_path, "scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("--compliance", sim_compliance, "follower lag time constant, s");
  sim->add_option("--settle", sim_settle, "reference hold time, s");
  auto* sim_seed = sim->add_option("--seed", seed_val, "override the scenario rng seed");
  sim->add_option("--out", out_path, "follower trajectory output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto load = [&](Scenario& sc) -> bool {
    try {
      sc = load_scenario(scn_path);
      return true;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return false;
    }
  };

  try {
    if (app.got_subcommand(plan)) {
      Scenario sc;
      if (!load(sc)) return 2;
      return cmd_plan(std::move(sc), out_path,
                      plan_seed->count() ? std::optional<std::uint64_t>(seed_val) : std::nullopt);
    }
    if (app.got_subcommand(bench_cmd)) {
      bench::SuiteOptions opts;
      opts.workers = bench_workers;
      opts.timing_repeats = bench_repeats;
      if (!bench_res.empty()) opts.grid_resolution = bench_res;
      const bench::SuiteReport rep = bench::run_table1_suite(seed_val, bench_cases, opts);
      const bench::ReportFormat fmt = bench::parse_format(format);
      bench::write_suite_report(rep, out_path, fmt);
      bench::write_suite_timing(rep, out_path + ".timing", fmt);
      std::printf(
          "suite: seed %llu, csef %d/%d, tsef %d/%d, boundary case failed=%d, "
          "medians csef %.3f ms / tsef %.3f ms\n",
          static_cast<unsigned long long>(rep.seed), rep.csef_successes, rep.n_random_cases,
          rep.tsef_successes, rep.n_random_cases, rep.near_singularity_tsef_failed ? 1 : 0,
          rep.csef_time_median * 1e3, rep.tsef_time_median * 1e3);
      return 0;
    }
    if (app.got_subcommand(guid)) {
      Scenario sc;
      if (!load(sc)) return 2;
      if (guid_seed->count()) {
        sc.params.rng_seed = seed_val;
        sc.seed_given = true;
      }
      bench::GuidanceConfig cfg;
      cfg.compliance = guid_compliance;
      cfg.settle_time = guid_settle;
      const bench::GuidanceReport rep = bench::run_guidance_study(sc, guid_postures, cfg);
      bench::write_guidance_report(rep, out_path, bench::parse_format(format));
      double mean_red = 0.0;
      for (const auto& p : rep.postures) mean_red += p.reduction_percent;
      std::printf("guidance: %d postures, mean exposure reduction %.1f%%\n", rep.n_postures,
                  mean_red / rep.n_postures);
      return 0;
    }
    if (app.got_subcommand(bim)) {
      const bench::BimanualStudyReport rep =
          bench::run_bimanual_study(seed_val, bim_runs, bim_d, bim_eps);
      bench::write_bimanual_report(rep, out_path, bench::parse_format(format));
      int ok = 0;
      for (const auto& r : rep.runs) ok += r.status == "success" ? 1 : 0;
      std::printf("bimanual: %d/%d runs succeeded, solver value %.6f\n", ok, rep.n_runs,
                  rep.solver_value);
      return 0;
    }
    if (app.got_subcommand(grid)) {
      Scenario sc;
      if (!load(sc)) return 2;
      return cmd_grid(sc, out_path, grid_res);
    }
    if (app.got_subcommand(sim)) {
      Scenario sc;
      if (!load(sc)) return 2;
      return cmd_simulate(std::move(sc), out_path, sim_compliance, sim_settle,
                          sim_seed->count() ? std::optional<std::uint64_t>(seed_val)
                                            : std::nullopt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
