#pragma once

// Weight sweeps over planned trajectories and the log-weight linear fit
// K = Q^T log10(w) + b.

#include "visplan/scenario.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace visplan {

enum class SweepMetric { TrajectoryLength = 0, MeanObjectiveDistance = 1, MeanAlignmentDistance = 2 };

inline constexpr std::array<std::string_view, 3> kSweepMetricNames = {"trajectory_length_m", "mean_objective_distance_m",
                                                                       "mean_alignment_distance_m"};
inline constexpr std::array<std::string_view, 7> kCoefficientNames = {"t_w", "r_w", "o_w", "d_w", "a_w", "v_w", "b"};

/// Noise-free generator used instead of planning: metric = Q . log10(w) + b.
struct SyntheticModel
{
  std::array<std::array<double, 7>, 3> coefficients{}; // per metric, Q then b
};

struct SweepSpec
{
  std::vector<std::string> environment_names;
  std::vector<Scenario> environments;
  std::vector<WeightSet> weight_sets;
  std::optional<SyntheticModel> synthetic;

  void validate() const
  {
    if (weight_sets.empty()) throw std::invalid_argument("sweep needs at least one weight set");
    if (!synthetic && environments.empty()) throw std::invalid_argument("sweep needs at least one environment");
    for (const auto& w : weight_sets)
      for (double x : w.as_array())
        if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("sweep weights must be finite and > 0");
  }
};

struct SweepRow
{
  std::string environment;
  size_t environment_index = 0;
  size_t weight_index = 0;
  WeightSet weights;
  bool converged = true;
  std::array<double, 3> metrics{};
  double wall_time = 0.0;
};

struct RegressionResult
{
  std::string metric;
  std::array<double, 6> Q{};
  double b = 0.0;
  double residual_norm = 0.0;
  size_t rows = 0;
};

class RankDeficientError : public std::runtime_error
{
public:
  RankDeficientError(const std::string& msg, std::vector<std::string> columns)
      : std::runtime_error(msg), columns_(std::move(columns))
  {
  }
  const std::vector<std::string>& columns() const { return columns_; }

private:
  std::vector<std::string> columns_;
};

/// Objectives for a single plan: the scenario's known ones, otherwise what
/// the sensor extracts from the start pose.
inline std::vector<Vec3> planning_objectives(const Scenario& sc)
{
  if (!sc.objectives.empty()) return sc.objectives;
  const auto& m = sc.mission;
  const auto fresh = extract_objectives(sense(sc.env, sc.start, m.sensor), m.extraction.eps, m.extraction.min_samples);
  return update_objective_set(ObjectiveSet(m.extraction.capacity, m.extraction.merge_radius), fresh, 0).positions();
}

inline std::array<double, 3> plan_metrics(const Trajectory& S, const std::vector<Vec3>& V, const Scenario& sc)
{
  double length = 0.0, d_obj = 0.0, d_align = 0.0;
  for (size_t i = 0; i + 1 < S.size(); ++i) {
    length += (S[i + 1].position - S[i].position).norm();
    d_align += alignment_cost(S, i, sc.mission.epsilon).value;
  }
  for (size_t i = 0; i < S.size(); ++i) d_obj += visibility_cost(S[i], sc.mission.rig, V).value;
  return {length, d_obj / static_cast<double>(S.size()), d_align / static_cast<double>(S.segments())};
}

inline SweepRow run_sweep_cell(const SweepSpec& spec, size_t e, size_t w)
{
  SweepRow row;
  row.environment_index = e;
  row.weight_index = w;
  row.weights = spec.weight_sets[w];
  if (spec.synthetic) {
    row.environment = spec.environment_names.empty() ? "synthetic" : spec.environment_names[e];
    const auto ws = row.weights.as_array();
    for (size_t k = 0; k < 3; ++k) {
      const auto& c = spec.synthetic->coefficients[k];
      double v = c[6];
      for (size_t j = 0; j < 6; ++j) v += c[j] * std::log10(ws[j]);
      row.metrics[k] = v;
    }
    return row;
  }
  const Scenario& sc = spec.environments[e];
  row.environment = spec.environment_names[e];
  PlanningProblem p;
  p.robot = sc.mission.robot;
  p.obstacles = sc.env.obstacles;
  p.d_safe = sc.mission.d_safe;
  p.rig = sc.mission.rig;
  p.objectives = planning_objectives(sc);
  p.weights = row.weights;
  p.epsilon = sc.mission.epsilon;
  p.continuous_collision = sc.mission.continuous_collision;
  const auto [plan, report] = optimize(straight_line_seed(sc.start, sc.goal, sc.mission.n), p, sc.mission.optimizer);
  row.converged = report.converged;
  row.wall_time = report.wall_time;
  row.metrics = plan_metrics(plan, p.objectives, sc);
  return row;
}

/// Worker count: VISPLAN_THREADS if set (>= 1), else the hardware concurrency.
inline unsigned sweep_threads()
{
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("VISPLAN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

/// One row per (environment, weight set) in that order, whatever the thread count.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned threads = sweep_threads())
{
  spec.validate();
  const size_t envs = spec.synthetic ? std::max<size_t>(1, spec.environment_names.size()) : spec.environments.size();
  const size_t cells = envs * spec.weight_sets.size();
  std::vector<SweepRow> rows(cells);
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (size_t k; (k = next.fetch_add(1)) < cells;) {
      try {
        rows[k] = run_sweep_cell(spec, k / spec.weight_sets.size(), k % spec.weight_sets.size());
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

/// Ordinary least squares over [log10 w | 1] using converged rows only.
inline RegressionResult fit_regression(const std::vector<SweepRow>& table, SweepMetric metric)
{
  std::vector<const SweepRow*> used;
  for (const auto& r : table)
    if (r.converged) used.push_back(&r);
  const auto m = static_cast<Eigen::Index>(used.size());
  if (m < 7) throw std::invalid_argument("regression needs at least 7 converged rows, got " + std::to_string(m));

  Eigen::MatrixXd X(m, 7);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto w = used[i]->weights.as_array();
    for (int j = 0; j < 6; ++j) {
      if (!(w[j] > 0.0)) throw std::invalid_argument("regression weights must be > 0");
      X(i, j) = std::log10(w[j]);
    }
    X(i, 6) = 1.0;
    y(i) = used[i]->metrics[static_cast<size_t>(metric)];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 7) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double tol = 1e-10 * std::max(1.0, s(0));
    std::vector<std::string> cols;
    for (int j = 0; j < 7; ++j) {
      bool involved = false;
      for (int k = 0; k < 7; ++k)
        if (s(k) <= tol && std::abs(svd.matrixV()(j, k)) > 1e-6) involved = true;
      if (involved) cols.emplace_back(kCoefficientNames[j]);
    }
    std::string msg = "rank-deficient design matrix; collinear columns:";
    for (const auto& c : cols) msg += " " + c;
    throw RankDeficientError(msg, cols);
  }
  const Eigen::VectorXd beta = qr.solve(y);
  RegressionResult out;
  out.metric = std::string(kSweepMetricNames[static_cast<size_t>(metric)]);
  for (int j = 0; j < 6; ++j) out.Q[j] = beta(j);
  out.b = beta(6);
  out.residual_norm = (X * beta - y).norm();
  out.rows = static_cast<size_t>(m);
  return out;
}

inline SweepSpec parse_sweep_spec(const std::string& text, const std::string& source,
                                  const std::filesystem::path& base_dir)
{
  using detail::YamlReader;
  const YamlReader R(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(source + ": document must be a mapping");
  R.only_keys(root, "", {"environments", "weight_sets", "synthetic"});
  SweepSpec spec;

  const auto ws = R.required(root, "", "weight_sets");
  if (!ws.IsSequence() || ws.size() == 0) R.fail(ws, "weight_sets", "expected a non-empty list");
  for (size_t i = 0; i < ws.size(); ++i) {
    const std::string path = "weight_sets[" + std::to_string(i) + "]";
    R.only_keys(ws[i], path, {"t_w", "r_w", "o_w", "d_w", "a_w", "v_w"});
    std::array<double, 6> w{};
    for (size_t j = 0; j < 6; ++j) {
      const std::string key(WeightSet::names[j]);
      w[j] = R.number(R.required(ws[i], path, key.c_str()), path + "." + key);
      if (!(w[j] > 0.0)) R.fail(ws[i][key], path + "." + key, "must be > 0 (log10 is taken)");
    }
    spec.weight_sets.push_back(WeightSet::from_array(w));
  }

  if (const auto envs = root["environments"]; envs.IsDefined()) {
    if (!envs.IsSequence()) R.fail(envs, "environments", "expected a list of scenario paths");
    for (size_t i = 0; i < envs.size(); ++i) {
      const std::string rel = envs[i].as<std::string>();
      const auto path = base_dir / rel;
      spec.environment_names.push_back(std::filesystem::path(rel).stem().string());
      if (!root["synthetic"].IsDefined()) spec.environments.push_back(load_scenario(path.string()));
    }
  }

  if (const auto syn = root["synthetic"]; syn.IsDefined()) {
    R.only_keys(syn, "synthetic", {"trajectory_length_m", "mean_objective_distance_m", "mean_alignment_distance_m"});
    SyntheticModel model;
    for (size_t k = 0; k < 3; ++k) {
      const std::string key(kSweepMetricNames[k]);
      const auto c = syn[key];
      if (!c.IsDefined()) continue;
      const std::string path = "synthetic." + key;
      R.only_keys(c, path, {"t_w", "r_w", "o_w", "d_w", "a_w", "v_w", "b"});
      for (size_t j = 0; j < 7; ++j) model.coefficients[k][j] = R.number(c, path, std::string(kCoefficientNames[j]).c_str(), 0.0);
    }
    spec.synthetic = model;
  } else if (spec.environments.empty()) {
    R.fail(root, "environments", "missing required field");
  }
  return spec;
}

inline SweepSpec load_sweep_spec(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_spec(ss.str(), path, std::filesystem::path(path).parent_path());
}

} // namespace visplan
