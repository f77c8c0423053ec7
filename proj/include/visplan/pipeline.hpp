#pragma once

// Closed loop: sense, extract objectives, replan from the current pose,
// follow the plan with a non-holonomic follower, repeat until the goal.

#include "visplan/clustering.hpp"
#include "visplan/optimizer.hpp"
#include "visplan/sensing.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace visplan {

struct FollowerConfig
{
  double linear_velocity = 0.4;
  double max_turn_rate = 1.0;
  double waypoint_tolerance = 0.2;
  double constant_roll = 0.0;
  double sim_dt = 0.05;

  void validate() const
  {
    if (!(linear_velocity > 0.0) || !(max_turn_rate > 0.0) || !(waypoint_tolerance > 0.0) || !(sim_dt > 0.0))
      throw std::invalid_argument("follower velocity, turn rate, tolerance and dt must be > 0");
    if (!std::isfinite(constant_roll)) throw std::invalid_argument("follower constant_roll must be finite");
  }
};

namespace detail {

inline double step_toward(double from, double to, double max_step)
{
  const double d = wrap_angle(to - from);
  return wrap_angle(from + std::clamp(d, -max_step, max_step));
}

} // namespace detail

/// One follower tick: advance along the current forward axis, then turn the
/// forward axis toward the target by at most max_turn_rate * dt and servo roll.
inline RobotState follow_step(const RobotState& s, const Vec3& target, const FollowerConfig& cfg,
                              std::optional<double> roll_target = std::nullopt)
{
  const Vec3 f = s.forward();
  const Vec3 p = s.position + cfg.linear_velocity * cfg.sim_dt * f;

  Vec3 f_new = f;
  const Vec3 to = target - s.position;
  const double max_turn = cfg.max_turn_rate * cfg.sim_dt;
  if (to.norm() > 1e-12) {
    const Vec3 d = to.normalized();
    const double angle = std::atan2(f.cross(d).norm(), f.dot(d));
    if (angle > 1e-12) {
      Vec3 axis = f.cross(d);
      // directly behind: turn about the body's vertical axis
      if (axis.norm() < 1e-9) axis = s.orientation() * Vec3::UnitZ();
      f_new = Eigen::AngleAxisd(std::min(angle, max_turn), axis.normalized()) * f;
    }
  }
  const double yaw = std::atan2(f_new.y(), f_new.x());
  const double pitch = -std::asin(std::clamp(f_new.z(), -1.0, 1.0));
  const double roll = detail::step_toward(s.rpy.x(), roll_target.value_or(cfg.constant_roll), max_turn);
  return RobotState(p, Vec3(roll, pitch, yaw));
}

/// Tracks a plan waypoint by waypoint. A waypoint counts as reached inside
/// waypoint_tolerance or once the robot has crossed the plane through it
/// normal to the incoming segment; the final waypoint needs the tolerance.
class WaypointFollower
{
public:
  explicit WaypointFollower(FollowerConfig cfg = {}) : cfg_(cfg) {}

  void set_plan(const Trajectory& plan)
  {
    plan_ = plan;
    target_ = 1;
  }

  bool has_plan() const { return plan_.has_value(); }
  size_t target_index() const { return target_; }
  const Trajectory& plan() const { return *plan_; }

  RobotState step(const RobotState& s)
  {
    advance(s);
    const auto& w = (*plan_)[target_];
    return follow_step(s, w.position, cfg_, w.rpy.x());
  }

private:
  // Intermediate waypoints are dropped once reached, once the robot is past
  // the plane through them normal to the incoming segment, or when they lie
  // behind the robot inside its turning circle (reaching them means a loop).
  void advance(const RobotState& s)
  {
    const auto& P = *plan_;
    const Vec3 p = s.position;
    const Vec3 f = s.forward();
    const double turn_diameter = 2.0 * cfg_.linear_velocity / cfg_.max_turn_rate;
    while (target_ + 1 < P.size()) {
      const Vec3 w = P[target_].position;
      const Vec3 seg = w - P[target_ - 1].position;
      const bool close = (p - w).norm() <= cfg_.waypoint_tolerance;
      const bool passed = seg.norm() > 1e-12 && (p - w).dot(seg) >= 0.0;
      const bool behind = (w - p).dot(f) <= 0.0 && (w - p).norm() < turn_diameter;
      if (!close && !passed && !behind) break;
      ++target_;
    }
  }

  FollowerConfig cfg_;
  std::optional<Trajectory> plan_;
  size_t target_ = 1;
};

struct MissionConfig
{
  size_t n = 30; // segments of the first plan, and the cap for later ones
  // Later plans keep the first plan's waypoint spacing, so the number of
  // segments shrinks with the remaining distance (never below 3).
  bool keep_spacing = true;
  double d_safe = 0.6;
  // Added to d_safe when planning; the follower cuts or overshoots corners
  // by a few centimetres, and d_safe is the bound on executed states.
  double tracking_margin = 0.1;
  ConvexShape robot = ConvexShape::sphere(0.3);
  CameraRig rig = CameraRig::forward_tilted();
  SensorConfig sensor;
  ExtractionConfig extraction;
  OptimizerConfig optimizer;
  FollowerConfig follower;
  AlignmentEpsilon epsilon;
  double replan_period = 1.0;
  double seed_blend = 0.5;
  int max_steps = 4000;
  int max_cycles = -1; // negative: unlimited
  bool occlusion = true;
  bool continuous_collision = true;

  int steps_per_cycle() const { return std::max(1, static_cast<int>(std::lround(replan_period / follower.sim_dt))); }

  void validate() const
  {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (!(d_safe > 0.0)) throw std::invalid_argument("d_safe must be > 0");
    if (!(tracking_margin >= 0.0)) throw std::invalid_argument("tracking_margin must be >= 0");
    if (!(replan_period > 0.0)) throw std::invalid_argument("replan_period must be > 0");
    if (!(seed_blend >= 0.0 && seed_blend <= 1.0)) throw std::invalid_argument("seed_blend must lie in [0, 1]");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    rig.validate();
    sensor.validate();
    extraction.validate();
    optimizer.validate();
    follower.validate();
  }
};

struct CycleRecord
{
  int cycle = 0;
  double t = 0.0;
  size_t step = 0;
  bool converged = false;
  bool retained_previous = false;
  int iterations = 0;
  double max_violation = 0.0;
  double final_cost = 0.0;
  size_t objectives = 0;
  double wall_time = 0.0;
  Trajectory plan;

  bool same_result(const CycleRecord& o) const
  {
    return cycle == o.cycle && t == o.t && step == o.step && converged == o.converged &&
           retained_previous == o.retained_previous && iterations == o.iterations && max_violation == o.max_violation &&
           final_cost == o.final_cost && objectives == o.objectives && plan == o.plan;
  }
};

struct RunRecord
{
  std::vector<double> times;
  std::vector<RobotState> states;
  std::vector<double> clearance;
  std::vector<double> d_obj; // NaN while no objective is known
  std::vector<int> visible;
  std::vector<CycleRecord> cycles;
  std::vector<VisualObjective> final_objectives;
  WeightSet weights;
  double metric = 0.0;
  double path_length = 0.0;
  bool complete = false;

  size_t non_converged_cycles() const
  {
    size_t k = 0;
    for (const auto& c : cycles) k += c.converged ? 0 : 1;
    return k;
  }

  double min_clearance() const
  {
    double m = std::numeric_limits<double>::infinity();
    for (double c : clearance) m = std::min(m, c);
    return m;
  }

  /// Equality of everything except wall-clock timings.
  bool same_result(const RunRecord& o) const
  {
    auto eq_nan = [](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() != b.size()) return false;
      for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i] || (std::isnan(a[i]) && std::isnan(b[i])))) return false;
      return true;
    };
    if (cycles.size() != o.cycles.size()) return false;
    for (size_t i = 0; i < cycles.size(); ++i)
      if (!cycles[i].same_result(o.cycles[i])) return false;
    return times == o.times && states == o.states && clearance == o.clearance && eq_nan(d_obj, o.d_obj) &&
           visible == o.visible && final_objectives == o.final_objectives && weights == o.weights &&
           metric == o.metric && path_length == o.path_length && complete == o.complete;
  }
};

namespace detail {

// Resamples a polyline of states to `count` states uniformly by arc length.
inline std::vector<RobotState> resample(const std::vector<RobotState>& pts, size_t count)
{
  std::vector<double> arc{0.0};
  for (size_t i = 1; i < pts.size(); ++i) arc.push_back(arc.back() + (pts[i].position - pts[i - 1].position).norm());
  std::vector<RobotState> out;
  const double total = arc.back();
  size_t j = 0;
  for (size_t k = 0; k < count; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (j + 2 < pts.size() && arc[j + 1] < s) ++j;
    const double len = arc[j + 1] - arc[j];
    const double t = len > 0.0 ? std::clamp((s - arc[j]) / len, 0.0, 1.0) : 0.0;
    const Quat q = pts[j].orientation().slerp(t, pts[j + 1].orientation());
    out.emplace_back(pts[j].position + t * (pts[j + 1].position - pts[j].position), rpy_from_quat(q));
  }
  return out;
}

} // namespace detail

/// Straight line from s to goal, blended with the unexecuted part of the
/// previous plan; endpoints pinned to s and goal.
inline Trajectory blended_seed(const RobotState& s, const RobotState& goal, size_t n, const WaypointFollower* previous,
                               double blend)
{
  Trajectory seed = straight_line_seed(s, goal, n);
  if (!previous || !previous->has_plan() || blend <= 0.0) return seed;
  const auto& P = previous->plan();
  std::vector<RobotState> tail{s};
  for (size_t i = previous->target_index(); i < P.size(); ++i) tail.push_back(P[i]);
  if (tail.size() < 2) return seed;
  tail.back() = goal;
  const auto resampled = detail::resample(tail, n + 1);
  for (size_t i = 1; i < n; ++i) {
    const Quat q = seed[i].orientation().slerp(blend, resampled[i].orientation());
    seed[i] = RobotState((1.0 - blend) * seed[i].position + blend * resampled[i].position, rpy_from_quat(q));
  }
  return seed;
}

/// Objective-set bookkeeping shared by missions and offline scoring: sensing
/// happens on the first state of every replanning cycle.
class ObjectiveTracker
{
public:
  ObjectiveTracker(const Environment& env, const MissionConfig& cfg)
      : env_(env), cfg_(cfg), set_(cfg.extraction.capacity, cfg.extraction.merge_radius)
  {
  }

  void observe(const RobotState& s, std::int64_t cycle)
  {
    const auto pts = sense(env_, s, cfg_.sensor);
    set_ = update_objective_set(std::move(set_), extract_objectives(pts, cfg_.extraction.eps, cfg_.extraction.min_samples, cycle), cycle);
  }

  const ObjectiveSet& set() const { return set_; }

private:
  const Environment& env_;
  const MissionConfig& cfg_;
  ObjectiveSet set_;
};

struct StateMetrics
{
  double clearance = 0.0;
  double d_obj = 0.0;
  int visible = 0;
};

inline StateMetrics state_metrics(const RobotState& s, const Environment& env, const MissionConfig& cfg,
                                  const std::vector<Vec3>& V)
{
  StateMetrics m;
  m.clearance = min_clearance(s, cfg.robot, env.obstacles);
  m.d_obj = V.empty() ? std::numeric_limits<double>::quiet_NaN() : visibility_cost(s, cfg.rig, V).value;
  m.visible = visible_count(s, cfg.rig, V, env, cfg.occlusion);
  return m;
}

inline double polyline_length(const std::vector<RobotState>& states)
{
  double L = 0.0;
  for (size_t i = 1; i < states.size(); ++i) L += (states[i].position - states[i - 1].position).norm();
  return L;
}

inline RunRecord run_mission(const Environment& env, const RobotState& start, const RobotState& goal,
                             const WeightSet& weights, const MissionConfig& cfg)
{
  env.validate();
  cfg.validate();
  weights.validate();
  if (!env.bounds.contains(start.position) || !env.bounds.contains(goal.position))
    throw std::invalid_argument("start and goal must lie inside the environment bounds");

  RunRecord rec;
  rec.weights = weights;
  ObjectiveTracker tracker(env, cfg);
  WaypointFollower follower(cfg.follower);
  const int per_cycle = cfg.steps_per_cycle();

  PlanningProblem problem;
  problem.robot = cfg.robot;
  problem.obstacles = env.obstacles;
  problem.d_safe = cfg.d_safe + cfg.tracking_margin;
  problem.rig = cfg.rig;
  problem.weights = weights;
  problem.epsilon = cfg.epsilon;
  problem.continuous_collision = cfg.continuous_collision;

  const double spacing = (goal.position - start.position).norm() / static_cast<double>(cfg.n);
  auto segments_for = [&](const RobotState& x) {
    if (!cfg.keep_spacing || !(spacing > 0.0)) return cfg.n;
    const double need = std::ceil((goal.position - x.position).norm() / spacing - 1e-9);
    return std::clamp(static_cast<size_t>(std::max(need, 0.0)), std::min<size_t>(3, cfg.n), cfg.n);
  };

  RobotState s = start;
  auto record_state = [&](double t, const RobotState& x) {
    const auto m = state_metrics(x, env, cfg, tracker.set().positions());
    rec.times.push_back(t);
    rec.states.push_back(x);
    rec.clearance.push_back(m.clearance);
    rec.d_obj.push_back(m.d_obj);
    rec.visible.push_back(m.visible);
  };
  auto at_goal = [&](const RobotState& x) { return (x.position - goal.position).norm() <= cfg.follower.waypoint_tolerance; };

  int step = 0;
  for (int cycle = 0;; ++cycle) {
    tracker.observe(s, cycle);
    if (cycle == 0) record_state(0.0, s);
    else {
      // the cycle's first state was recorded before sensing; refresh its metrics
      const auto m = state_metrics(s, env, cfg, tracker.set().positions());
      rec.d_obj.back() = m.d_obj;
      rec.visible.back() = m.visible;
    }
    if (at_goal(s) || step >= cfg.max_steps || (cfg.max_cycles >= 0 && cycle >= cfg.max_cycles)) break;

    problem.objectives = tracker.set().positions();
    const Trajectory seed = blended_seed(s, goal, segments_for(s), follower.has_plan() ? &follower : nullptr, cfg.seed_blend);
    auto [plan, report] = optimize(seed, problem, cfg.optimizer);

    CycleRecord cr;
    cr.cycle = cycle;
    cr.t = rec.times.back();
    cr.step = static_cast<size_t>(step);
    cr.converged = report.converged;
    cr.iterations = report.iterations;
    cr.max_violation = report.max_constraint_violation;
    cr.final_cost = report.final_cost;
    cr.objectives = problem.objectives.size();
    cr.wall_time = report.wall_time;
    if (!report.converged && follower.has_plan()) {
      cr.retained_previous = true;
      cr.plan = follower.plan();
    } else {
      follower.set_plan(plan);
      cr.plan = std::move(plan);
    }
    rec.cycles.push_back(std::move(cr));

    for (int k = 0; k < per_cycle && step < cfg.max_steps && !at_goal(s); ++k) {
      s = follower.step(s);
      ++step;
      record_state(step * cfg.follower.sim_dt, s);
    }
  }

  rec.complete = at_goal(s);
  rec.final_objectives = tracker.set().entries();
  rec.path_length = polyline_length(rec.states);
  int seen = 0;
  for (int v : rec.visible) seen += v > 0 ? 1 : 0;
  rec.metric = rec.states.empty() ? 0.0 : static_cast<double>(seen) / static_cast<double>(rec.states.size());
  return rec;
}

/// The same loop without the visibility term.
inline RunRecord aquanav_baseline(const Environment& env, const RobotState& start, const RobotState& goal,
                                  WeightSet weights, const MissionConfig& cfg)
{
  weights.v_w = 0.0;
  return run_mission(env, start, goal, weights, cfg);
}

/// Offline metrics for an externally produced executed trajectory.
struct TrajectoryScore
{
  double metric = 0.0;
  double path_length = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
};

/// Replays sensing along the trajectory (every steps_per_cycle rows and at the
/// last row, like a mission) and counts rows from which a tracked objective is visible.
inline TrajectoryScore score_trajectory(const std::vector<RobotState>& states, const Environment& env,
                                        const MissionConfig& cfg)
{
  if (states.empty()) throw std::invalid_argument("cannot score an empty trajectory");
  TrajectoryScore out;
  ObjectiveTracker tracker(env, cfg);
  const int per_cycle = cfg.steps_per_cycle();
  int seen = 0;
  for (size_t i = 0; i < states.size(); ++i) {
    // a mission also senses once more at its final state
    const size_t k = static_cast<size_t>(per_cycle);
    if (i % k == 0 || i + 1 == states.size()) tracker.observe(states[i], static_cast<std::int64_t>((i + k - 1) / k));
    const auto V = tracker.set().positions();
    seen += visible_count(states[i], cfg.rig, V, env, cfg.occlusion) > 0 ? 1 : 0;
    out.min_clearance = std::min(out.min_clearance, min_clearance(states[i], cfg.robot, env.obstacles));
  }
  out.metric = static_cast<double>(seen) / static_cast<double>(states.size());
  out.path_length = polyline_length(states);
  return out;
}

} // namespace visplan
