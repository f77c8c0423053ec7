#pragma once

// Sequential penalty optimization over the free trajectory states.
// Each outer iteration linearizes every residual, solves the convex model
// inside a box trust region, and accepts the step when the true merit drops
// by at least a fraction of the predicted drop. Collision hinges are carried
// as l1 penalties whose coefficient grows while they stay violated.

#include "visplan/cost_terms.hpp"
#include "visplan/qp.hpp"

#include <chrono>
#include <stdexcept>
#include <utility>
#include <vector>

namespace visplan {

struct OptimizerConfig
{
  double initial_trust_radius = 0.1;
  double trust_shrink = 0.5;
  double trust_expand = 1.5;
  double max_trust_radius = 1.0;
  double min_trust_radius = 1e-4;
  double improve_ratio_threshold = 0.25;
  double penalty_scale = 10.0;
  double initial_penalty = 10.0;
  int max_penalty_iters = 5;
  int max_sqp_iters = 50; // per penalty level
  double convergence_tol = 1e-4;
  double constraint_tol = 1e-3;
  double collision_pad = 0.5; // hinge rows kept in the model while sd < target + pad
  bool check_gradients = false;

  void validate() const
  {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(initial_trust_radius, "initial_trust_radius");
    positive(max_trust_radius, "max_trust_radius");
    positive(min_trust_radius, "min_trust_radius");
    positive(initial_penalty, "initial_penalty");
    positive(convergence_tol, "convergence_tol");
    positive(constraint_tol, "constraint_tol");
    if (!(trust_shrink > 0.0 && trust_shrink < 1.0)) throw std::invalid_argument("trust_shrink must lie in (0, 1)");
    if (!(trust_expand > 1.0)) throw std::invalid_argument("trust_expand must be > 1");
    if (!(penalty_scale > 1.0)) throw std::invalid_argument("penalty_scale must be > 1");
    if (!(improve_ratio_threshold > 0.0 && improve_ratio_threshold < 1.0))
      throw std::invalid_argument("improve_ratio_threshold must lie in (0, 1)");
    if (max_penalty_iters < 1 || max_sqp_iters < 1) throw std::invalid_argument("iteration limits must be >= 1");
    if (!(collision_pad >= 0.0)) throw std::invalid_argument("collision_pad must be >= 0");
  }
};

struct OptimizationReport
{
  bool converged = false;
  int iterations = 0;
  int penalty_iterations = 0;
  double final_cost = 0.0;  // objective without collision penalties
  double final_merit = 0.0; // objective plus penalties at the final coefficient
  double final_penalty = 0.0;
  double max_constraint_violation = 0.0;
  double wall_time = 0.0;
  double gradient_check_error = 0.0; // only filled with check_gradients
};

/// Everything the optimizer needs besides the seed.
struct PlanningProblem
{
  ConvexShape robot = ConvexShape::sphere(0.3);
  std::vector<ConvexShape> obstacles;
  double d_safe = 0.6;
  CameraRig rig = CameraRig::forward_tilted();
  std::vector<Vec3> objectives;
  WeightSet weights;
  AlignmentEpsilon epsilon;
  bool continuous_collision = true;
};

namespace detail {

struct ProblemEvaluation
{
  std::vector<ResidualTerm> terms;
  double cost = 0.0;
  double penalty = 0.0;
  double violation = 0.0;
  double merit() const { return cost + penalty; }
};

// Clearance targets for the two segments touching a fixed endpoint: the swept
// hull cannot clear more than the endpoint itself does.
struct EndpointTargets
{
  std::vector<double> first;
  std::vector<double> last;
};

inline double sweep_polytope_clearance(const RobotState& s, const std::vector<Vec3>& local, const ConvexShape& o)
{
  const RigidTransform T = s.pose();
  std::vector<Vec3> verts;
  verts.reserve(local.size());
  for (const auto& v : local) verts.push_back(T.apply(v));
  return convex_distance(verts, 0.0, o.world_core(), o.margin()).distance;
}

inline EndpointTargets endpoint_targets(const Trajectory& S, const PlanningProblem& p, const std::vector<Vec3>& local)
{
  EndpointTargets t;
  for (const auto& o : p.obstacles) {
    t.first.push_back(std::min(p.d_safe, sweep_polytope_clearance(S.front(), local, o)));
    t.last.push_back(std::min(p.d_safe, sweep_polytope_clearance(S.back(), local, o)));
  }
  return t;
}

inline ResidualTerm hinge_term(double residual, double weight, bool jac, Eigen::Index cols, Eigen::Index column,
                               const Eigen::RowVectorXd& grad)
{
  ResidualTerm t;
  t.kind = TermKind::Hinge;
  t.weight = weight;
  t.constraint = true;
  t.r = Eigen::VectorXd::Constant(1, residual);
  if (jac) {
    t.J = Eigen::MatrixXd::Zero(1, cols);
    t.J.block(0, column, 1, grad.size()) = grad;
  }
  return t;
}

inline ProblemEvaluation evaluate_problem(const Trajectory& S, const PlanningProblem& p, const EndpointTargets& targets,
                                          const std::vector<Vec3>& sweep_local, double mu, bool jac, double pad)
{
  ProblemEvaluation e;
  const auto cols = col(S.size());
  const WeightSet& w = p.weights;
  add_translation_terms(S, w.t_w, jac, e.terms);
  add_rotation_terms(S, w.r_w, jac, e.terms);
  add_uniformity_terms(S, w.d_w, jac, e.terms);
  add_alignment_terms(S, w.a_w, p.epsilon, jac, e.terms);
  if (w.v_w > 0.0)
    for (size_t i = 0; i < S.size(); ++i)
      if (auto t = visibility_term(S[i], p.rig, p.objectives, w.v_w, jac, col(i), cols)) e.terms.push_back(std::move(*t));

  if (w.o_w > 0.0) {
    const double cw = w.o_w * mu;
    for (size_t i = 1; i + 1 < S.size(); ++i)
      for (const auto& o : p.obstacles)
        if (auto r = state_clearance_residual(S[i], p.robot, o, p.d_safe, pad))
          e.terms.push_back(hinge_term(r->residual, cw, jac, cols, col(i), r->grad));
    if (p.continuous_collision)
      for (size_t j = 0; j + 1 < S.size(); ++j)
        for (size_t k = 0; k < p.obstacles.size(); ++k) {
          double target = p.d_safe;
          if (j == 0) target = std::min(target, targets.first[k]);
          if (j + 2 == S.size()) target = std::min(target, targets.last[k]);
          if (auto r = swept_clearance_residual(S[j], S[j + 1], p.robot, sweep_local, p.obstacles[k], target, pad))
            e.terms.push_back(hinge_term(r->residual, cw, jac, cols, col(j), r->grad));
        }
  }

  for (const auto& t : e.terms) {
    if (t.constraint) {
      e.penalty += t.value();
      e.violation = std::max(e.violation, t.r[0]);
    } else {
      e.cost += t.value();
    }
  }
  return e;
}

inline Trajectory apply_step(const Trajectory& S, const Eigen::VectorXd& d)
{
  Trajectory out = S;
  for (size_t i = 1; i + 1 < S.size(); ++i) {
    const auto base = col(i - 1);
    out[i] = RobotState(S[i].position + d.segment<3>(base), S[i].rpy + d.segment<3>(base + 3));
  }
  return out;
}

} // namespace detail

/// n + 1 states: linear positions, slerped orientations.
inline Trajectory straight_line_seed(const RobotState& start, const RobotState& goal, size_t n)
{
  if (n < 2) throw std::invalid_argument("straight_line_seed needs n >= 2");
  const Quat qa = start.orientation(), qb = goal.orientation();
  std::vector<RobotState> states;
  states.reserve(n + 1);
  states.push_back(start);
  for (size_t i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    states.emplace_back(start.position + t * (goal.position - start.position), rpy_from_quat(qa.slerp(t, qb)));
  }
  states.push_back(goal);
  return Trajectory(std::move(states));
}

/// Merit of a trajectory (objective plus penalties) at penalty coefficient mu.
inline detail::ProblemEvaluation evaluate_trajectory(const Trajectory& S, const PlanningProblem& p, double mu = 1.0)
{
  const auto local = p.robot.sweep_vertices_local();
  return detail::evaluate_problem(S, p, detail::endpoint_targets(S, p, local), local, mu, false, 0.0);
}

inline std::pair<Trajectory, OptimizationReport> optimize(const Trajectory& S0, const PlanningProblem& prob,
                                                          const OptimizerConfig& cfg = {})
{
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  cfg.validate();
  prob.weights.validate();
  prob.rig.validate();
  if (!(prob.d_safe > 0.0)) throw std::invalid_argument("d_safe must be > 0");

  const auto local = prob.robot.sweep_vertices_local();
  const auto targets = detail::endpoint_targets(S0, prob, local);
  const Eigen::Index nfree = detail::col(S0.size() - 2);
  auto eval = [&](const Trajectory& S, double mu, bool jac) {
    return detail::evaluate_problem(S, prob, targets, local, mu, jac, jac ? cfg.collision_pad : 0.0);
  };

  double mu = cfg.initial_penalty;
  const auto e0 = eval(S0, mu, false);
  if (!std::isfinite(e0.merit())) throw std::invalid_argument("non-finite cost at the initial trajectory");

  OptimizationReport report;
  if (cfg.check_gradients && nfree > 0) {
    const auto ej = eval(S0, mu, true);
    const Eigen::VectorXd g = accumulate(ej.terms, detail::col(S0.size())).gradient.segment(kStateDim, nfree);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < nfree; ++k) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(nfree);
      d[k] = 1e-6;
      const double fd = (eval(detail::apply_step(S0, d), mu, false).merit() -
                         eval(detail::apply_step(S0, -d), mu, false).merit()) / 2e-6;
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)));
    }
    report.gradient_check_error = worst;
  }

  Trajectory x = S0;
  double radius = cfg.initial_trust_radius;
  bool level_converged = false;
  for (int level = 0; level < cfg.max_penalty_iters; ++level) {
    report.penalty_iterations = level + 1;
    level_converged = false;
    for (int it = 0; it < cfg.max_sqp_iters && !level_converged; ++it) {
      ++report.iterations;
      if (nfree == 0) {
        level_converged = true;
        break;
      }
      const auto e = eval(x, mu, true);
      const double merit_x = e.merit();
      ConvexModel model(nfree);
      for (const auto& t : e.terms) model.add(t, t.J.middleCols(kStateDim, nfree));
      model.finalize();
      AdmmSolver solver(model);
      while (true) {
        const Eigen::VectorXd d = solver.solve(radius);
        const double predicted = merit_x - model.value(d);
        if (predicted < cfg.convergence_tol * std::max(1.0, std::abs(merit_x))) {
          level_converged = true;
          break;
        }
        Trajectory y = detail::apply_step(x, d);
        const double actual = merit_x - eval(y, mu, false).merit();
        if (actual / predicted >= cfg.improve_ratio_threshold) {
          x = std::move(y);
          radius = std::min(radius * cfg.trust_expand, cfg.max_trust_radius);
          break;
        }
        radius *= cfg.trust_shrink;
        if (radius < cfg.min_trust_radius) {
          level_converged = true;
          break;
        }
      }
    }
    if (eval(x, mu, false).violation <= cfg.constraint_tol) break;
    if (level + 1 < cfg.max_penalty_iters) {
      mu *= cfg.penalty_scale;
      radius = std::max(radius, cfg.initial_trust_radius);
    }
  }

  // never hand back something worse than the seed under the final penalties
  auto ex = eval(x, mu, false);
  const auto es = eval(S0, mu, false);
  if (es.merit() < ex.merit()) {
    x = S0;
    ex = es;
  }
  report.final_cost = ex.cost;
  report.final_merit = ex.merit();
  report.final_penalty = mu;
  report.max_constraint_violation = std::max(0.0, ex.violation);
  report.converged = level_converged && report.max_constraint_violation <= cfg.constraint_tol;
  report.wall_time = std::chrono::duration<double>(clock::now() - t_start).count();
  return {std::move(x), report};
}

} // namespace visplan
