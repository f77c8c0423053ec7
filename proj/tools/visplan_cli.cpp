// visplan: run missions, weight sweeps and offline scoring from scenario files.
//
//   visplan run <scenario.yaml> <out_dir> [--baseline] [--no-occlusion] [--max-cycles N]
//   visplan sweep <sweep.yaml> <out_dir>
//   visplan score <trajectory.csv> <scenario.yaml> [--no-occlusion]
//
// Exit codes: 0 success, 1 input error, 2 incomplete mission or more than
// half of the replanning cycles without convergence.

#include "visplan/visplan.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace visplan;

namespace {

std::ofstream open_out(const fs::path& p)
{
  std::ofstream out(p);
  if (!out) throw std::runtime_error(p.string() + ": cannot write");
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, bool baseline, bool no_occlusion,
            int max_cycles)
{
  Scenario sc = load_scenario(scenario_path);
  if (no_occlusion) sc.mission.occlusion = false;
  if (max_cycles >= 0) sc.mission.max_cycles = max_cycles;
  fs::create_directories(out_dir);

  const RunRecord rec = baseline ? aquanav_baseline(sc.env, sc.start, sc.goal, sc.weights, sc.mission)
                                 : run_mission(sc.env, sc.start, sc.goal, sc.weights, sc.mission);

  auto summary = run_summary(rec, sc.name, baseline);
  summary["occlusion"] = sc.mission.occlusion;
  open_out(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
  {
    auto out = open_out(fs::path(out_dir) / "states.csv");
    write_state_metrics_csv(out, rec);
  }
  {
    auto out = open_out(fs::path(out_dir) / "trajectory.csv");
    write_trajectory_csv(out, rec.times, rec.states);
  }
  {
    auto out = open_out(fs::path(out_dir) / "plans.csv");
    out << "cycle,index,x_m,y_m,z_m,roll_deg,pitch_deg,yaw_deg\n";
    for (const auto& c : rec.cycles)
      for (size_t i = 0; i < c.plan.size(); ++i) {
        const auto& s = c.plan[i];
        out << c.cycle << ',' << i;
        for (int k = 0; k < 3; ++k) out << ',' << format_double(s.position[k]);
        for (int k = 0; k < 3; ++k) out << ',' << format_double(rad2deg(s.rpy[k]));
        out << '\n';
      }
  }

  std::cout << "M " << format_double(rec.metric) << "\npath_length_m " << format_double(rec.path_length)
            << "\nmin_clearance_m " << format_double(rec.min_clearance()) << "\ncomplete " << rec.complete
            << "\nnon_converged_cycles " << rec.non_converged_cycles() << "/" << rec.cycles.size() << '\n';
  const bool mostly_failed = 2 * rec.non_converged_cycles() > rec.cycles.size();
  return rec.complete && !mostly_failed ? 0 : 2;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir)
{
  const SweepSpec spec = load_sweep_spec(spec_path);
  const auto rows = run_sweep(spec);

  std::vector<RegressionResult> fits;
  for (int k = 0; k < 3; ++k) fits.push_back(fit_regression(rows, static_cast<SweepMetric>(k)));

  fs::create_directories(out_dir);
  {
    auto out = open_out(fs::path(out_dir) / "sweep.csv");
    out << "environment,weight_set";
    for (auto n : WeightSet::names) out << ',' << n;
    out << ",converged";
    for (auto n : kSweepMetricNames) out << ',' << n;
    out << ",plan_time_s\n";
    for (const auto& r : rows) {
      out << r.environment << ',' << r.weight_index;
      for (double w : r.weights.as_array()) out << ',' << format_double(w);
      out << ',' << (r.converged ? 1 : 0);
      for (double m : r.metrics) out << ',' << format_double(m);
      out << ',' << format_double(r.wall_time) << '\n';
    }
  }
  nlohmann::json j;
  j["trajectories"] = spec.synthetic ? "synthetic" : "planned";
  j["rows"] = rows.size();
  size_t excluded = 0;
  for (const auto& r : rows) excluded += r.converged ? 0 : 1;
  j["excluded_non_converged"] = excluded;
  j["coefficient_order"] = std::vector<std::string>(kCoefficientNames.begin(), kCoefficientNames.end());
  for (const auto& f : fits) {
    nlohmann::json c;
    for (size_t i = 0; i < 6; ++i) c[std::string(kCoefficientNames[i])] = f.Q[i];
    c["b"] = f.b;
    j["regression"][f.metric] = {{"coefficients", c}, {"residual_norm", f.residual_norm}, {"rows", f.rows}};
  }
  open_out(fs::path(out_dir) / "regression.json") << j.dump(2) << '\n';

  std::cout << "metric";
  for (auto n : kCoefficientNames) std::cout << ' ' << n;
  std::cout << '\n';
  for (const auto& f : fits) {
    std::cout << f.metric;
    for (double q : f.Q) std::cout << ' ' << format_double(q);
    std::cout << ' ' << format_double(f.b) << '\n';
  }
  return 0;
}

int cmd_score(const std::string& trajectory_path, const std::string& scenario_path, bool no_occlusion)
{
  Scenario sc = load_scenario(scenario_path);
  if (no_occlusion) sc.mission.occlusion = false;
  std::ifstream in(trajectory_path);
  if (!in) throw std::runtime_error(trajectory_path + ": cannot open file");
  std::vector<TimedState> rows;
  try {
    rows = read_trajectory_csv(in);
  } catch (const TableError& e) {
    throw std::runtime_error(trajectory_path + ":" + e.what());
  }
  std::vector<RobotState> states;
  for (const auto& r : rows) states.push_back(r.state);
  const auto score = score_trajectory(states, sc.env, sc.mission);
  std::cout << "M " << format_double(score.metric) << "\npath_length_m " << format_double(score.path_length)
            << "\nmin_clearance_m " << format_double(score.min_clearance) << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Visibility-aware trajectory planning: missions, sweeps and scoring"};
  app.require_subcommand(1);

  std::string scenario, out_dir, spec, trajectory;
  bool baseline = false, no_occlusion = false;
  int max_cycles = -1;

  auto* run = app.add_subcommand("run", "Run a closed-loop mission on a scenario");
  run->add_option("scenario", scenario, "Scenario YAML")->required();
  run->add_option("out_dir", out_dir, "Output directory")->required();
  run->add_flag("--baseline", baseline, "Disable the visibility term (v_w = 0)");
  run->add_flag("--no-occlusion", no_occlusion, "Ignore occlusion when counting visible objectives");
  run->add_option("--max-cycles", max_cycles, "Stop after N replanning cycles")->check(CLI::NonNegativeNumber);

  auto* sweep = app.add_subcommand("sweep", "Plan over a weight sweep and fit the log-weight regression");
  sweep->add_option("spec", spec, "Sweep YAML")->required();
  sweep->add_option("out_dir", out_dir, "Output directory")->required();

  auto* score = app.add_subcommand("score", "Score an exported trajectory against a scenario");
  score->add_option("trajectory", trajectory, "Trajectory CSV")->required();
  score->add_option("scenario", scenario, "Scenario YAML")->required();
  score->add_flag("--no-occlusion", no_occlusion, "Ignore occlusion when counting visible objectives");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(scenario, out_dir, baseline, no_occlusion, max_cycles);
    if (*sweep) return cmd_sweep(spec, out_dir);
    if (*score) return cmd_score(trajectory, scenario, no_occlusion);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
