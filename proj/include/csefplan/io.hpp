#pragma once

// Line-oriented text formats with versioned headers:
//
//   csefplan-trajectory v1   time-stamped samples, one per row
//   csefplan-grid v1         field grid: bounds, resolution, node values
//   csefplan-scenario v1     key/value sections describing one experiment
//
// Numbers are written with 17 significant digits so every load(export(x))
// round-trips bit-exactly. Parse errors name the line and the field.

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csefplan/ergo_field.hpp"
#include "csefplan/execution.hpp"
#include "csefplan/kinematics.hpp"
#include "csefplan/planner.hpp"
#include "csefplan/trajectory.hpp"

namespace csefplan {

struct ParseError : std::runtime_error {
  ParseError(const std::string& path, std::size_t line, const std::string& field,
             const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": field '" + field + "': " + what) {}
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& path, std::size_t line, const std::string& field,
                           const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, field, "not a number: '" + tok + "'");
  }
}

inline long long parse_int(const std::string& path, std::size_t line, const std::string& field,
                           const std::string& tok) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, field, "not an integer: '" + tok + "'");
  }
}

// Reads all lines; strips \r; keeps blank lines (the caller skips them).
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void expect_header(const std::string& path, const std::vector<std::string>& lines,
                          const std::string& magic) {
  if (lines.empty() || lines[0] != magic)
    throw ParseError(path, 1, "header", "expected '" + magic + "'");
}

inline Eigen::VectorXd parse_vector(const std::string& path, std::size_t line,
                                    const std::string& field, const std::vector<std::string>& toks,
                                    std::size_t first, std::size_t count) {
  if (toks.size() != first + count)
    throw ParseError(path, line, field,
                     "expected " + std::to_string(count) + " values, got " +
                         std::to_string(toks.size() - first));
  Eigen::VectorXd v(static_cast<int>(count));
  for (std::size_t i = 0; i < count; ++i)
    v[static_cast<int>(i)] = parse_double(path, line, field, toks[first + i]);
  return v;
}

}  // namespace detail

// --- trajectory files -------------------------------------------------------

inline void export_trajectory(const Trajectory& traj, const std::string& path) {
  validate_trajectory(traj);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "csefplan-trajectory v1\n";
  out << "space " << (traj.space == TrajectorySpace::Joint ? "joint" : "task") << "\n";
  out << "dim " << traj.dim() << "\n";
  out << "samples " << traj.size() << "\n";
  for (const TrajectorySample& s : traj.samples) {
    out << detail::format_double(s.t);
    for (int i = 0; i < s.x.size(); ++i) out << ' ' << detail::format_double(s.x[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(path, lines, "csefplan-trajectory v1");
  if (lines.size() < 4) throw ParseError(path, lines.size(), "header", "truncated file");

  auto kv = [&](std::size_t idx, const std::string& key) {
    const auto toks = detail::split_ws(lines[idx]);
    if (toks.size() != 2 || toks[0] != key)
      throw ParseError(path, idx + 1, key, "expected '" + key + " <value>'");
    return toks[1];
  };

  Trajectory traj;
  const std::string space = kv(1, "space");
  if (space == "joint")
    traj.space = TrajectorySpace::Joint;
  else if (space == "task")
    traj.space = TrajectorySpace::Task;
  else
    throw ParseError(path, 2, "space", "expected 'joint' or 'task', got '" + space + "'");
  const long long dim = detail::parse_int(path, 3, "dim", kv(2, "dim"));
  const long long count = detail::parse_int(path, 4, "samples", kv(3, "samples"));
  if (dim < 1) throw ParseError(path, 3, "dim", "must be >= 1");
  if (count < 1) throw ParseError(path, 4, "samples", "must be >= 1");
  if (lines.size() != 4 + static_cast<std::size_t>(count))
    throw ParseError(path, lines.size(), "samples",
                     "expected " + std::to_string(count) + " sample rows");

  traj.samples.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k) {
    const std::size_t ln = 5 + static_cast<std::size_t>(k);
    const auto toks = detail::split_ws(lines[ln - 1]);
    if (toks.empty()) throw ParseError(path, ln, "sample", "empty row");
    TrajectorySample s;
    s.t = detail::parse_double(path, ln, "time", toks[0]);
    s.x = detail::parse_vector(path, ln, "sample", toks, 1, static_cast<std::size_t>(dim));
    if (k == 0 && s.t != 0.0) throw ParseError(path, ln, "time", "first sample must be at t = 0");
    if (k > 0 && !(s.t > traj.samples.back().t))
      throw ParseError(path, ln, "time", "times must be strictly increasing");
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

// --- grid files -------------------------------------------------------------

inline void export_grid(const FieldGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "csefplan-grid v1\n";
  out << "dim " << grid.dim() << "\n";
  out << "lo";
  for (int a = 0; a < grid.dim(); ++a) out << ' ' << detail::format_double(grid.lo[a]);
  out << "\nhi";
  for (int a = 0; a < grid.dim(); ++a) out << ' ' << detail::format_double(grid.hi[a]);
  out << "\nresolution";
  for (int r : grid.resolution) out << ' ' << r;
  out << "\npenalty_value " << detail::format_double(grid.penalty_value) << "\n";
  out << "nodes " << grid.size() << "\n";
  for (std::size_t f = 0; f < grid.size(); ++f)
    out << detail::format_double(grid.values[f]) << ' ' << int(grid.reachable[f]) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline FieldGrid load_grid(const std::string& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(path, lines, "csefplan-grid v1");
  if (lines.size() < 7) throw ParseError(path, lines.size(), "header", "truncated file");

  FieldGrid g;
  {
    const auto toks = detail::split_ws(lines[1]);
    if (toks.size() != 2 || toks[0] != "dim") throw ParseError(path, 2, "dim", "expected 'dim <n>'");
    const long long d = detail::parse_int(path, 2, "dim", toks[1]);
    if (d < 1 || d > 8) throw ParseError(path, 2, "dim", "out of range");
    g.lo.resize(d);
    g.hi.resize(d);
    g.resolution.resize(static_cast<std::size_t>(d));
  }
  const int d = g.dim();
  {
    const auto toks = detail::split_ws(lines[2]);
    if (toks.empty() || toks[0] != "lo") throw ParseError(path, 3, "lo", "expected 'lo <values>'");
    g.lo = detail::parse_vector(path, 3, "lo", toks, 1, static_cast<std::size_t>(d));
  }
  {
    const auto toks = detail::split_ws(lines[3]);
    if (toks.empty() || toks[0] != "hi") throw ParseError(path, 4, "hi", "expected 'hi <values>'");
    g.hi = detail::parse_vector(path, 4, "hi", toks, 1, static_cast<std::size_t>(d));
  }
  {
    const auto toks = detail::split_ws(lines[4]);
    if (toks.size() != 1 + static_cast<std::size_t>(d) || toks[0] != "resolution")
      throw ParseError(path, 5, "resolution", "expected 'resolution <n per axis>'");
    for (int a = 0; a < d; ++a) {
      const long long r = detail::parse_int(path, 5, "resolution", toks[1 + a]);
      if (r < 2) throw ParseError(path, 5, "resolution", "must be >= 2");
      g.resolution[a] = static_cast<int>(r);
    }
  }
  {
    const auto toks = detail::split_ws(lines[5]);
    if (toks.size() != 2 || toks[0] != "penalty_value")
      throw ParseError(path, 6, "penalty_value", "expected 'penalty_value <v>'");
    g.penalty_value = detail::parse_double(path, 6, "penalty_value", toks[1]);
  }
  std::size_t nodes = 0;
  {
    const auto toks = detail::split_ws(lines[6]);
    if (toks.size() != 2 || toks[0] != "nodes")
      throw ParseError(path, 7, "nodes", "expected 'nodes <count>'");
    const long long n = detail::parse_int(path, 7, "nodes", toks[1]);
    if (n < 1) throw ParseError(path, 7, "nodes", "must be >= 1");
    nodes = static_cast<std::size_t>(n);
  }
  if (nodes != g.size())
    throw ParseError(path, 7, "nodes",
                     "count does not match resolution product " + std::to_string(g.size()));
  if (lines.size() != 7 + nodes)
    throw ParseError(path, lines.size(), "nodes", "expected " + std::to_string(nodes) + " node rows");

  g.values.resize(nodes);
  g.reachable.resize(nodes);
  for (std::size_t f = 0; f < nodes; ++f) {
    const std::size_t ln = 8 + f;
    const auto toks = detail::split_ws(lines[ln - 1]);
    if (toks.size() != 2) throw ParseError(path, ln, "node", "expected '<value> <reachable>'");
    g.values[f] = detail::parse_double(path, ln, "value", toks[0]);
    const long long r = detail::parse_int(path, ln, "reachable", toks[1]);
    if (r != 0 && r != 1) throw ParseError(path, ln, "reachable", "must be 0 or 1");
    g.reachable[f] = static_cast<std::uint8_t>(r);
  }
  return g;
}

// --- scenario files ---------------------------------------------------------

enum class PlannerKind { CsefDescent, CsefToGoal, TsefBaseline, MinJerk, Bimanual };

inline std::string planner_kind_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::CsefDescent: return "csef_descent";
    case PlannerKind::CsefToGoal: return "csef_to_goal";
    case PlannerKind::TsefBaseline: return "tsef_baseline";
    case PlannerKind::MinJerk: return "min_jerk";
    case PlannerKind::Bimanual: return "bimanual";
  }
  return "?";
}

/// One experiment description: models, field, planner, endpoints.
struct Scenario {
  KinematicChain chain;
  ErgoSpec ergo;
  std::optional<KinematicChain> chain_right;  // bimanual only
  std::optional<ErgoSpec> ergo_right;

  PlannerKind planner = PlannerKind::CsefDescent;
  PlannerParams params;
  bool seed_given = false;

  std::optional<Eigen::VectorXd> start_joint, goal_joint;
  std::optional<Eigen::VectorXd> start_task, goal_task;
  std::optional<Eigen::VectorXd> start_joint_right, goal_joint_right;
  int repeat = 1;

  std::optional<double> d_task, eps_task;  // bimanual coupling
  std::optional<ImpedanceParams> impedance;
  double min_jerk_duration = 1.0;
  int min_jerk_samples = 101;
  std::vector<int> grid_resolution = {100, 100};  // tsef_baseline
};

namespace detail {

struct ScenarioLine {
  std::size_t number = 0;
  std::string section;
  std::string key;
  std::vector<std::string> values;
};

// Section/key scan: '[section]' lines switch sections, 'key v1 v2...' lines
// attach to the current section; '#' starts a comment.
inline std::vector<ScenarioLine> scan_scenario(const std::string& path,
                                               const std::vector<std::string>& lines) {
  std::vector<ScenarioLine> out;
  std::string section;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0].front() == '[') {
      if (toks.size() != 1 || toks[0].back() != ']')
        throw ParseError(path, i + 1, "section", "malformed section header");
      section = toks[0].substr(1, toks[0].size() - 2);
      continue;
    }
    if (section.empty())
      throw ParseError(path, i + 1, toks[0], "key outside any [section]");
    ScenarioLine sl;
    sl.number = i + 1;
    sl.section = section;
    sl.key = toks[0];
    sl.values.assign(toks.begin() + 1, toks.end());
    out.push_back(std::move(sl));
  }
  return out;
}

struct ChainDraft {
  std::optional<std::string> model;
  std::optional<std::vector<double>> lengths;
  std::optional<Eigen::VectorXd> base, lower, upper;
};

struct ErgoDraft {
  std::optional<Eigen::VectorXd> q_opt, weights;
  std::optional<double> region_radius;
};

inline KinematicChain build_chain(const std::string& path, const std::string& section,
                                  const ChainDraft& d) {
  if (!d.model || !d.lengths || !d.base || !d.lower || !d.upper)
    throw std::runtime_error(path + ": [" + section +
                             "] requires model, lengths, base, lower, upper");
  ChainModel m;
  if (*d.model == "planar2")
    m = ChainModel::Planar2;
  else if (*d.model == "upper_limb4")
    m = ChainModel::UpperLimb4;
  else
    throw std::runtime_error(path + ": [" + section + "] model: expected 'planar2' or 'upper_limb4'");
  JointLimits lim{*d.lower, *d.upper};
  if (lim.lower.size() != lim.upper.size())
    throw std::runtime_error(path + ": [" + section + "] lower/upper size mismatch");
  for (int i = 0; i < lim.lower.size(); ++i)
    if (!(lim.lower[i] < lim.upper[i]))
      throw std::runtime_error(path + ": [" + section + "] lower must be < upper");
  return make_chain(m, *d.lengths, *d.base, lim);
}

inline ErgoSpec build_ergo(const std::string& path, const std::string& section, const ErgoDraft& d,
                           const KinematicChain& chain) {
  if (!d.q_opt || !d.weights || !d.region_radius)
    throw std::runtime_error(path + ": [" + section + "] requires q_opt, weights, region_radius");
  return make_ergo_spec(*d.q_opt, *d.weights, *d.region_radius, chain.limits);
}

}  // namespace detail

/// Parses and validates a scenario file. Dimensional consistency and the
/// seed requirement for stochastic planners are enforced here, so a loaded
/// scenario is always runnable.
inline Scenario load_scenario(const std::string& path) {
  const auto lines = detail::read_lines(path);
  detail::expect_header(path, lines, "csefplan-scenario v1");
  const auto entries = detail::scan_scenario(path, lines);

  detail::ChainDraft chain_d, chain_r_d;
  detail::ErgoDraft ergo_d, ergo_r_d;
  bool has_chain_r = false, has_ergo_r = false;
  std::optional<std::string> planner_name;
  Scenario s;

  for (const auto& e : entries) {
    auto vec = [&](std::size_t n = 0) {
      if (n == 0) n = e.values.size();
      if (e.values.empty()) throw ParseError(path, e.number, e.key, "expected values");
      return detail::parse_vector(path, e.number, e.key, e.values, 0, n);
    };
    auto num = [&] {
      if (e.values.size() != 1) throw ParseError(path, e.number, e.key, "expected one value");
      return detail::parse_double(path, e.number, e.key, e.values[0]);
    };
    auto integer = [&] {
      if (e.values.size() != 1) throw ParseError(path, e.number, e.key, "expected one value");
      return detail::parse_int(path, e.number, e.key, e.values[0]);
    };

    if (e.section == "chain" || e.section == "chain_right") {
      detail::ChainDraft& d = e.section == "chain" ? chain_d : chain_r_d;
      if (e.section == "chain_right") has_chain_r = true;
      if (e.key == "model") {
        if (e.values.size() != 1) throw ParseError(path, e.number, e.key, "expected one value");
        d.model = e.values[0];
      } else if (e.key == "lengths") {
        const Eigen::VectorXd v = vec(2);
        d.lengths = std::vector<double>{v[0], v[1]};
      } else if (e.key == "base") {
        d.base = vec();
      } else if (e.key == "lower") {
        d.lower = vec();
      } else if (e.key == "upper") {
        d.upper = vec();
      } else {
        throw ParseError(path, e.number, e.key, "unknown key in [" + e.section + "]");
      }
    } else if (e.section == "ergo" || e.section == "ergo_right") {
      detail::ErgoDraft& d = e.section == "ergo" ? ergo_d : ergo_r_d;
      if (e.section == "ergo_right") has_ergo_r = true;
      if (e.key == "q_opt")
        d.q_opt = vec();
      else if (e.key == "weights")
        d.weights = vec();
      else if (e.key == "region_radius")
        d.region_radius = num();
      else
        throw ParseError(path, e.number, e.key, "unknown key in [" + e.section + "]");
    } else if (e.section == "planner") {
      if (e.key == "type") {
        if (e.values.size() != 1) throw ParseError(path, e.number, e.key, "expected one value");
        planner_name = e.values[0];
      } else if (e.key == "step_size")
        s.params.step_size = num();
      else if (e.key == "goal_weight")
        s.params.goal_weight = num();
      else if (e.key == "ergo_weight")
        s.params.ergo_weight = num();
      else if (e.key == "perturb_scale")
        s.params.perturb_scale = num();
      else if (e.key == "max_steps")
        s.params.max_steps = static_cast<int>(integer());
      else if (e.key == "goal_tol")
        s.params.goal_tol = num();
      else if (e.key == "rng_seed") {
        s.params.rng_seed = static_cast<std::uint64_t>(integer());
        s.seed_given = true;
      } else if (e.key == "min_jerk_duration")
        s.min_jerk_duration = num();
      else if (e.key == "min_jerk_samples")
        s.min_jerk_samples = static_cast<int>(integer());
      else if (e.key == "grid_resolution") {
        const Eigen::VectorXd v = vec(2);
        s.grid_resolution = {static_cast<int>(v[0]), static_cast<int>(v[1])};
      } else
        throw ParseError(path, e.number, e.key, "unknown key in [planner]");
    } else if (e.section == "problem") {
      if (e.key == "start_joint")
        s.start_joint = vec();
      else if (e.key == "goal_joint")
        s.goal_joint = vec();
      else if (e.key == "start_task")
        s.start_task = vec();
      else if (e.key == "goal_task")
        s.goal_task = vec();
      else if (e.key == "start_joint_right")
        s.start_joint_right = vec();
      else if (e.key == "goal_joint_right")
        s.goal_joint_right = vec();
      else if (e.key == "repeat")
        s.repeat = static_cast<int>(integer());
      else
        throw ParseError(path, e.number, e.key, "unknown key in [problem]");
    } else if (e.section == "coupling") {
      if (e.key == "d_task")
        s.d_task = num();
      else if (e.key == "eps_task")
        s.eps_task = num();
      else
        throw ParseError(path, e.number, e.key, "unknown key in [coupling]");
    } else if (e.section == "impedance") {
      if (!s.impedance) s.impedance.emplace();
      if (e.key == "mass")
        s.impedance->mass = vec();
      else if (e.key == "stiffness")
        s.impedance->stiffness = vec();
      else if (e.key == "damping")
        s.impedance->damping = vec();
      else if (e.key == "dt")
        s.impedance->dt = num();
      else
        throw ParseError(path, e.number, e.key, "unknown key in [impedance]");
    } else {
      throw ParseError(path, e.number, e.key, "unknown section [" + e.section + "]");
    }
  }

  s.chain = detail::build_chain(path, "chain", chain_d);
  s.ergo = detail::build_ergo(path, "ergo", ergo_d, s.chain);
  if (has_chain_r != has_ergo_r)
    throw std::runtime_error(path + ": bimanual scenarios need both [chain_right] and [ergo_right]");
  if (has_chain_r) {
    s.chain_right = detail::build_chain(path, "chain_right", chain_r_d);
    s.ergo_right = detail::build_ergo(path, "ergo_right", ergo_r_d, *s.chain_right);
  }

  if (!planner_name) throw std::runtime_error(path + ": [planner] type is required");
  if (*planner_name == "csef_descent")
    s.planner = PlannerKind::CsefDescent;
  else if (*planner_name == "csef_to_goal")
    s.planner = PlannerKind::CsefToGoal;
  else if (*planner_name == "tsef_baseline")
    s.planner = PlannerKind::TsefBaseline;
  else if (*planner_name == "min_jerk")
    s.planner = PlannerKind::MinJerk;
  else if (*planner_name == "bimanual")
    s.planner = PlannerKind::Bimanual;
  else
    throw std::runtime_error(path + ": unknown planner type '" + *planner_name + "'");

  validate_params(s.params);
  if (s.repeat < 1) throw std::runtime_error(path + ": repeat must be >= 1");

  // Stochastic planners draw from the seeded generator; an unseeded run
  // would silently default and look reproducible when it is not intended.
  const bool stochastic = s.planner == PlannerKind::CsefToGoal ||
                          s.planner == PlannerKind::Bimanual;
  if (stochastic && !s.seed_given)
    throw std::runtime_error(path + ": planner '" + *planner_name +
                             "' is stochastic: [planner] rng_seed is required");

  const int dof = s.chain.dof();
  const int td = s.chain.task_dim();
  auto check_dim = [&](const std::optional<Eigen::VectorXd>& v, int want, const std::string& key) {
    if (v && v->size() != want)
      throw std::runtime_error(path + ": " + key + " must have " + std::to_string(want) +
                               " values");
  };
  check_dim(s.start_joint, dof, "start_joint");
  check_dim(s.goal_joint, dof, "goal_joint");
  check_dim(s.start_task, td, "start_task");
  check_dim(s.goal_task, td, "goal_task");
  if (s.chain_right) {
    check_dim(s.start_joint_right, s.chain_right->dof(), "start_joint_right");
    check_dim(s.goal_joint_right, s.chain_right->dof(), "goal_joint_right");
  }
  if (s.impedance) validate_impedance(*s.impedance);

  switch (s.planner) {
    case PlannerKind::CsefDescent:
      if (!s.start_joint) throw std::runtime_error(path + ": csef_descent needs start_joint");
      break;
    case PlannerKind::CsefToGoal:
      if (!s.start_joint || !(s.goal_joint || s.goal_task))
        throw std::runtime_error(path + ": csef_to_goal needs start_joint and a goal");
      break;
    case PlannerKind::TsefBaseline:
      if (!s.start_task || !s.goal_task)
        throw std::runtime_error(path + ": tsef_baseline needs start_task and goal_task");
      break;
    case PlannerKind::MinJerk:
      if (!s.start_task || !s.goal_task)
        throw std::runtime_error(path + ": min_jerk needs start_task and goal_task");
      break;
    case PlannerKind::Bimanual:
      if (!s.chain_right || !s.start_joint || !s.start_joint_right || !s.d_task || !s.eps_task)
        throw std::runtime_error(
            path + ": bimanual needs [chain_right], [ergo_right], both starts, and [coupling]");
      break;
  }
  return s;
}

/// Writes a scenario in the same format load_scenario reads.
inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const auto write_vec = [&](const char* key, const Eigen::VectorXd& v) {
    out << key;
    for (int i = 0; i < v.size(); ++i) out << ' ' << detail::format_double(v[i]);
    out << '\n';
  };
  const auto write_chain = [&](const char* section, const KinematicChain& c) {
    out << '[' << section << "]\n";
    out << "model " << (c.model == ChainModel::Planar2 ? "planar2" : "upper_limb4") << '\n';
    out << "lengths " << detail::format_double(c.link_lengths[0]) << ' '
        << detail::format_double(c.link_lengths[1]) << '\n';
    write_vec("base", c.base_pose);
    write_vec("lower", c.limits.lower);
    write_vec("upper", c.limits.upper);
    out << '\n';
  };
  const auto write_ergo = [&](const char* section, const ErgoSpec& e) {
    out << '[' << section << "]\n";
    write_vec("q_opt", e.q_opt);
    write_vec("weights", e.weights);
    out << "region_radius " << detail::format_double(e.region_radius) << "\n\n";
  };

  out << "csefplan-scenario v1\n\n";
  write_chain("chain", s.chain);
  write_ergo("ergo", s.ergo);
  if (s.chain_right) write_chain("chain_right", *s.chain_right);
  if (s.ergo_right) write_ergo("ergo_right", *s.ergo_right);

  out << "[planner]\n";
  out << "type " << planner_kind_name(s.planner) << '\n';
  out << "step_size " << detail::format_double(s.params.step_size) << '\n';
  out << "goal_weight " << detail::format_double(s.params.goal_weight) << '\n';
  out << "ergo_weight " << detail::format_double(s.params.ergo_weight) << '\n';
  out << "perturb_scale " << detail::format_double(s.params.perturb_scale) << '\n';
  out << "max_steps " << s.params.max_steps << '\n';
  out << "goal_tol " << detail::format_double(s.params.goal_tol) << '\n';
  if (s.seed_given) out << "rng_seed " << s.params.rng_seed << '\n';
  if (s.planner == PlannerKind::MinJerk) {
    out << "min_jerk_duration " << detail::format_double(s.min_jerk_duration) << '\n';
    out << "min_jerk_samples " << s.min_jerk_samples << '\n';
  }
  if (s.planner == PlannerKind::TsefBaseline)
    out << "grid_resolution " << s.grid_resolution[0] << ' ' << s.grid_resolution[1] << '\n';
  out << '\n';

  out << "[problem]\n";
  if (s.start_joint) write_vec("start_joint", *s.start_joint);
  if (s.goal_joint) write_vec("goal_joint", *s.goal_joint);
  if (s.start_task) write_vec("start_task", *s.start_task);
  if (s.goal_task) write_vec("goal_task", *s.goal_task);
  if (s.start_joint_right) write_vec("start_joint_right", *s.start_joint_right);
  if (s.goal_joint_right) write_vec("goal_joint_right", *s.goal_joint_right);
  out << "repeat " << s.repeat << '\n';

  if (s.d_task || s.eps_task) {
    out << "\n[coupling]\n";
    if (s.d_task) out << "d_task " << detail::format_double(*s.d_task) << '\n';
    if (s.eps_task) out << "eps_task " << detail::format_double(*s.eps_task) << '\n';
  }
  if (s.impedance) {
    out << "\n[impedance]\n";
    write_vec("mass", s.impedance->mass);
    write_vec("stiffness", s.impedance->stiffness);
    write_vec("damping", s.impedance->damping);
    out << "dt " << detail::format_double(s.impedance->dt) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace csefplan
