#pragma once

// Scenario documents (YAML). Physical quantities carry their unit in the key
// (_m, _deg, _s, ...); angles are degrees in files and radians in memory.
// Every error names the source, the line and the field path.

#include "visplan/pipeline.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace visplan {

class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Scenario
{
  std::string name = "scenario";
  std::int64_t seed = 0; // reserved; the core is deterministic
  Environment env;
  RobotState start;
  RobotState goal;
  WeightSet weights;
  MissionConfig mission;
  std::vector<Vec3> objectives; // known objectives for single-plan sweeps; missions sense their own
};

namespace detail {

class YamlReader
{
public:
  explicit YamlReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& path, const std::string& what) const
  {
    std::ostringstream os;
    os << source_;
    if (at.IsDefined() && at.Mark().line >= 0) os << ":" << at.Mark().line + 1;
    os << ": " << path << ": " << what;
    throw ScenarioError(os.str());
  }

  void require_map(const YAML::Node& n, const std::string& path) const
  {
    if (!n.IsMap()) fail(n, path, "expected a mapping");
  }

  void only_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> keys) const
  {
    require_map(n, path);
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, join(path, key), "unknown field");
    }
  }

  YAML::Node required(const YAML::Node& n, const std::string& path, const char* key) const
  {
    const YAML::Node c = n[key];
    if (!c.IsDefined() || c.IsNull()) fail(n, join(path, key), "missing required field");
    return c;
  }

  double number(const YAML::Node& n, const std::string& path) const
  {
    if (!n.IsScalar()) fail(n, path, "expected a number");
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) fail(n, path, "must be finite");
      return v;
    } catch (const YAML::BadConversion&) {
      fail(n, path, "expected a number");
    }
  }

  double number(const YAML::Node& parent, const std::string& path, const char* key, double fallback) const
  {
    const YAML::Node c = parent[key];
    return c.IsDefined() ? number(c, join(path, key)) : fallback;
  }

  double positive(const YAML::Node& parent, const std::string& path, const char* key, double fallback) const
  {
    const double v = number(parent, path, key, fallback);
    if (!(v > 0.0)) fail(parent[key], join(path, key), "must be > 0");
    return v;
  }

  long integer(const YAML::Node& parent, const std::string& path, const char* key, long fallback) const
  {
    const YAML::Node c = parent[key];
    if (!c.IsDefined()) return fallback;
    try {
      return c.as<long>();
    } catch (const YAML::BadConversion&) {
      fail(c, join(path, key), "expected an integer");
    }
  }

  bool boolean(const YAML::Node& parent, const std::string& path, const char* key, bool fallback) const
  {
    const YAML::Node c = parent[key];
    if (!c.IsDefined()) return fallback;
    try {
      return c.as<bool>();
    } catch (const YAML::BadConversion&) {
      fail(c, join(path, key), "expected true or false");
    }
  }

  std::string text(const YAML::Node& parent, const std::string& path, const char* key, std::string fallback) const
  {
    const YAML::Node c = parent[key];
    if (!c.IsDefined()) return fallback;
    if (!c.IsScalar()) fail(c, join(path, key), "expected a string");
    return c.as<std::string>();
  }

  Vec3 vec3(const YAML::Node& n, const std::string& path) const
  {
    if (!n.IsSequence() || n.size() != 3) fail(n, path, "expected a list of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = number(n[i], path + "[" + std::to_string(i) + "]");
    return v;
  }

  Vec3 vec3(const YAML::Node& parent, const std::string& path, const char* key, const Vec3& fallback) const
  {
    const YAML::Node c = parent[key];
    return c.IsDefined() ? vec3(c, join(path, key)) : fallback;
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

private:
  std::string source_;
};

inline Vec3 rpy_deg_to_rad(const Vec3& d) { return {deg2rad(d.x()), deg2rad(d.y()), deg2rad(d.z())}; }
inline Vec3 rpy_rad_to_deg(const Vec3& r) { return {rad2deg(r.x()), rad2deg(r.y()), rad2deg(r.z())}; }

inline RobotState read_pose(const YamlReader& R, const YAML::Node& n, const std::string& path)
{
  R.only_keys(n, path, {"position_m", "rpy_deg"});
  return RobotState(R.vec3(R.required(n, path, "position_m"), YamlReader::join(path, "position_m")),
                    rpy_deg_to_rad(R.vec3(n, path, "rpy_deg", Vec3::Zero())));
}

inline RigidTransform read_transform(const YamlReader& R, const YAML::Node& n, const std::string& path)
{
  R.only_keys(n, path, {"position_m", "rpy_deg"});
  return RigidTransform::from_rpy(R.vec3(n, path, "position_m", Vec3::Zero()),
                                  rpy_deg_to_rad(R.vec3(n, path, "rpy_deg", Vec3::Zero())));
}

inline ConvexShape read_shape(const YamlReader& R, const YAML::Node& n, const std::string& path,
                              const RigidTransform& pose)
{
  const std::string type = R.required(n, path, "type").as<std::string>();
  try {
    if (type == "sphere") return ConvexShape::sphere(R.number(R.required(n, path, "radius_m"), path + ".radius_m"), pose);
    if (type == "box")
      return ConvexShape::box(R.vec3(R.required(n, path, "half_extents_m"), path + ".half_extents_m"), pose);
    if (type == "hull") {
      const YAML::Node vs = R.required(n, path, "vertices_m");
      if (!vs.IsSequence()) R.fail(vs, path + ".vertices_m", "expected a list of points");
      std::vector<Vec3> pts;
      for (size_t i = 0; i < vs.size(); ++i) pts.push_back(R.vec3(vs[i], path + ".vertices_m[" + std::to_string(i) + "]"));
      return ConvexShape::hull(std::move(pts), pose);
    }
  } catch (const std::invalid_argument& e) {
    R.fail(n, path, e.what());
  }
  R.fail(n["type"], path + ".type", "expected sphere, box or hull, got '" + type + "'");
}

inline void write_vec(YAML::Emitter& out, const char* key, const Vec3& v)
{
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
}

inline void write_pose(YAML::Emitter& out, const char* key, const Vec3& p, const Vec3& rpy)
{
  out << YAML::Key << key << YAML::Value << YAML::BeginMap;
  write_vec(out, "position_m", p);
  write_vec(out, "rpy_deg", rpy_rad_to_deg(rpy));
  out << YAML::EndMap;
}

inline void write_shape_fields(YAML::Emitter& out, const ConvexShape& s)
{
  if (const auto* sp = std::get_if<Sphere>(&s.geometry())) {
    out << YAML::Key << "type" << YAML::Value << "sphere" << YAML::Key << "radius_m" << YAML::Value << sp->radius;
  } else if (const auto* b = std::get_if<Box>(&s.geometry())) {
    out << YAML::Key << "type" << YAML::Value << "box";
    write_vec(out, "half_extents_m", b->half_extents);
  } else {
    const auto& h = std::get<Hull>(s.geometry());
    out << YAML::Key << "type" << YAML::Value << "hull" << YAML::Key << "vertices_m" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : h.vertices) out << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
    out << YAML::EndSeq;
  }
}

} // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>")
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
  R.only_keys(root, "", {"name", "seed", "bounds", "start", "goal", "obstacles", "robot", "camera_rig", "sensor",
                         "weights", "planner", "optimizer", "follower", "extraction", "alignment",
                         "objectives_m"});

  Scenario sc;
  sc.name = R.text(root, "", "name", sc.name);
  sc.seed = R.integer(root, "", "seed", 0);

  if (const auto b = root["bounds"]; b.IsDefined()) {
    R.only_keys(b, "bounds", {"min_m", "max_m"});
    sc.env.bounds.min = R.vec3(R.required(b, "bounds", "min_m"), "bounds.min_m");
    sc.env.bounds.max = R.vec3(R.required(b, "bounds", "max_m"), "bounds.max_m");
    if (!(sc.env.bounds.min.array() < sc.env.bounds.max.array()).all()) R.fail(b, "bounds", "min_m must be below max_m");
  }
  sc.start = detail::read_pose(R, R.required(root, "", "start"), "start");
  sc.goal = detail::read_pose(R, R.required(root, "", "goal"), "goal");

  if (const auto obs = root["obstacles"]; obs.IsDefined() && !obs.IsNull()) {
    if (!obs.IsSequence()) R.fail(obs, "obstacles", "expected a list");
    for (size_t i = 0; i < obs.size(); ++i) {
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      const auto o = obs[i];
      R.only_keys(o, path, {"type", "position_m", "rpy_deg", "radius_m", "half_extents_m", "vertices_m", "feature",
                            "feature_density_per_m2"});
      const RigidTransform pose = RigidTransform::from_rpy(R.vec3(R.required(o, path, "position_m"), path + ".position_m"),
                                                           detail::rpy_deg_to_rad(R.vec3(o, path, "rpy_deg", Vec3::Zero())));
      const bool feature = R.boolean(o, path, "feature", false);
      double density = 0.0;
      if (feature) density = R.positive(o, path, "feature_density_per_m2", 20.0);
      else if (o["feature_density_per_m2"].IsDefined())
        R.fail(o["feature_density_per_m2"], path + ".feature_density_per_m2", "only allowed with feature: true");
      sc.env.add(detail::read_shape(R, o, path, pose), density);
    }
  }

  if (const auto objs = root["objectives_m"]; objs.IsDefined() && !objs.IsNull()) {
    if (!objs.IsSequence()) R.fail(objs, "objectives_m", "expected a list of points");
    for (size_t i = 0; i < objs.size(); ++i) sc.objectives.push_back(R.vec3(objs[i], "objectives_m[" + std::to_string(i) + "]"));
  }

  auto& m = sc.mission;
  if (const auto r = root["robot"]; r.IsDefined()) {
    R.only_keys(r, "robot", {"type", "radius_m", "half_extents_m", "vertices_m"});
    m.robot = detail::read_shape(R, r, "robot", RigidTransform{});
  }

  if (const auto rig = root["camera_rig"]; rig.IsDefined()) {
    R.only_keys(rig, "camera_rig", {"d_vis_m", "cameras"});
    m.rig.d_vis = R.positive(rig, "camera_rig", "d_vis_m", 1.0);
    const auto cams = R.required(rig, "camera_rig", "cameras");
    if (!cams.IsSequence() || cams.size() == 0) R.fail(cams, "camera_rig.cameras", "expected a non-empty list");
    m.rig.cameras.clear();
    for (size_t i = 0; i < cams.size(); ++i) {
      const std::string path = "camera_rig.cameras[" + std::to_string(i) + "]";
      const auto c = cams[i];
      R.only_keys(c, path, {"mount", "h_fov_deg", "v_fov_deg", "max_range_m"});
      Camera cam;
      if (c["mount"].IsDefined()) cam.mount = detail::read_transform(R, c["mount"], path + ".mount");
      cam.h_fov = deg2rad(R.positive(c, path, "h_fov_deg", 120.0));
      cam.v_fov = deg2rad(R.positive(c, path, "v_fov_deg", 90.0));
      cam.max_range = R.positive(c, path, "max_range_m", 6.0);
      if (!(cam.h_fov < kPi) || !(cam.v_fov < kPi)) R.fail(c, path, "fields of view must be below 180 deg");
      m.rig.cameras.push_back(cam);
    }
  }

  if (const auto s = root["sensor"]; s.IsDefined()) {
    R.only_keys(s, "sensor", {"mount", "h_fov_deg", "v_fov_deg", "h_res", "v_res", "max_range_m"});
    if (s["mount"].IsDefined()) m.sensor.mount = detail::read_transform(R, s["mount"], "sensor.mount");
    m.sensor.h_fov = deg2rad(R.positive(s, "sensor", "h_fov_deg", 120.0));
    m.sensor.v_fov = deg2rad(R.positive(s, "sensor", "v_fov_deg", 90.0));
    m.sensor.h_res = static_cast<int>(R.integer(s, "sensor", "h_res", m.sensor.h_res));
    m.sensor.v_res = static_cast<int>(R.integer(s, "sensor", "v_res", m.sensor.v_res));
    m.sensor.max_range = R.positive(s, "sensor", "max_range_m", m.sensor.max_range);
    try {
      m.sensor.validate();
    } catch (const std::invalid_argument& e) {
      R.fail(s, "sensor", e.what());
    }
  }

  if (const auto w = root["weights"]; w.IsDefined()) {
    R.only_keys(w, "weights", {"t_w", "r_w", "o_w", "d_w", "a_w", "v_w"});
    auto arr = sc.weights.as_array();
    for (size_t i = 0; i < 6; ++i) {
      const std::string key(WeightSet::names[i]);
      arr[i] = R.number(w, "weights", key.c_str(), arr[i]);
      if (arr[i] < 0.0) R.fail(w[key], "weights." + key, "must be >= 0");
    }
    sc.weights = WeightSet::from_array(arr);
  }

  if (const auto p = root["planner"]; p.IsDefined()) {
    R.only_keys(p, "planner", {"segments", "keep_spacing", "d_safe_m", "tracking_margin_m", "replan_period_s", "seed_blend", "max_steps", "max_cycles", "occlusion"});
    const long n = R.integer(p, "planner", "segments", static_cast<long>(m.n));
    if (n < 2) R.fail(p["segments"], "planner.segments", "must be >= 2");
    m.n = static_cast<size_t>(n);
    m.keep_spacing = R.boolean(p, "planner", "keep_spacing", m.keep_spacing);
    m.d_safe = R.positive(p, "planner", "d_safe_m", m.d_safe);
    m.tracking_margin = R.number(p, "planner", "tracking_margin_m", m.tracking_margin);
    if (!(m.tracking_margin >= 0.0)) R.fail(p["tracking_margin_m"], "planner.tracking_margin_m", "must be >= 0");
    m.replan_period = R.positive(p, "planner", "replan_period_s", m.replan_period);
    m.seed_blend = R.number(p, "planner", "seed_blend", m.seed_blend);
    if (!(m.seed_blend >= 0.0 && m.seed_blend <= 1.0)) R.fail(p["seed_blend"], "planner.seed_blend", "must lie in [0, 1]");
    m.max_steps = static_cast<int>(R.integer(p, "planner", "max_steps", m.max_steps));
    if (m.max_steps < 1) R.fail(p["max_steps"], "planner.max_steps", "must be >= 1");
    m.max_cycles = static_cast<int>(R.integer(p, "planner", "max_cycles", m.max_cycles));
    m.occlusion = R.boolean(p, "planner", "occlusion", m.occlusion);
  }

  if (const auto o = root["optimizer"]; o.IsDefined()) {
    R.only_keys(o, "optimizer", {"initial_trust_radius_m", "trust_shrink", "trust_expand", "max_trust_radius_m",
                                 "min_trust_radius_m", "improve_ratio_threshold", "penalty_scale", "initial_penalty",
                                 "max_penalty_iters", "max_sqp_iters", "convergence_tol", "constraint_tol_m",
                                 "collision_pad_m", "continuous_collision"});
    auto& c = m.optimizer;
    c.initial_trust_radius = R.number(o, "optimizer", "initial_trust_radius_m", c.initial_trust_radius);
    c.trust_shrink = R.number(o, "optimizer", "trust_shrink", c.trust_shrink);
    c.trust_expand = R.number(o, "optimizer", "trust_expand", c.trust_expand);
    c.max_trust_radius = R.number(o, "optimizer", "max_trust_radius_m", c.max_trust_radius);
    c.min_trust_radius = R.number(o, "optimizer", "min_trust_radius_m", c.min_trust_radius);
    c.improve_ratio_threshold = R.number(o, "optimizer", "improve_ratio_threshold", c.improve_ratio_threshold);
    c.penalty_scale = R.number(o, "optimizer", "penalty_scale", c.penalty_scale);
    c.initial_penalty = R.number(o, "optimizer", "initial_penalty", c.initial_penalty);
    c.max_penalty_iters = static_cast<int>(R.integer(o, "optimizer", "max_penalty_iters", c.max_penalty_iters));
    c.max_sqp_iters = static_cast<int>(R.integer(o, "optimizer", "max_sqp_iters", c.max_sqp_iters));
    c.convergence_tol = R.number(o, "optimizer", "convergence_tol", c.convergence_tol);
    c.constraint_tol = R.number(o, "optimizer", "constraint_tol_m", c.constraint_tol);
    c.collision_pad = R.number(o, "optimizer", "collision_pad_m", c.collision_pad);
    m.continuous_collision = R.boolean(o, "optimizer", "continuous_collision", m.continuous_collision);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      R.fail(o, "optimizer", e.what());
    }
  }

  if (const auto f = root["follower"]; f.IsDefined()) {
    R.only_keys(f, "follower", {"linear_velocity_m_s", "max_turn_rate_deg_s", "waypoint_tolerance_m", "constant_roll_deg", "sim_dt_s"});
    auto& c = m.follower;
    c.linear_velocity = R.positive(f, "follower", "linear_velocity_m_s", c.linear_velocity);
    c.max_turn_rate = deg2rad(R.positive(f, "follower", "max_turn_rate_deg_s", rad2deg(c.max_turn_rate)));
    c.waypoint_tolerance = R.positive(f, "follower", "waypoint_tolerance_m", c.waypoint_tolerance);
    c.constant_roll = deg2rad(R.number(f, "follower", "constant_roll_deg", rad2deg(c.constant_roll)));
    c.sim_dt = R.positive(f, "follower", "sim_dt_s", c.sim_dt);
  }

  if (const auto e = root["extraction"]; e.IsDefined()) {
    R.only_keys(e, "extraction", {"eps_m", "min_samples", "capacity", "merge_radius_m"});
    auto& c = m.extraction;
    c.eps = R.positive(e, "extraction", "eps_m", c.eps);
    const long ms = R.integer(e, "extraction", "min_samples", c.min_samples);
    const long cap = R.integer(e, "extraction", "capacity", static_cast<long>(c.capacity));
    if (ms < 1) R.fail(e["min_samples"], "extraction.min_samples", "must be >= 1");
    if (cap < 1) R.fail(e["capacity"], "extraction.capacity", "must be >= 1");
    c.min_samples = static_cast<int>(ms);
    c.capacity = static_cast<size_t>(cap);
    c.merge_radius = R.number(e, "extraction", "merge_radius_m", c.merge_radius);
    if (c.merge_radius < 0.0) R.fail(e["merge_radius_m"], "extraction.merge_radius_m", "must be >= 0");
  }

  if (const auto a = root["alignment"]; a.IsDefined()) {
    R.only_keys(a, "alignment", {"epsilon_fraction", "epsilon_floor_m", "epsilon_fixed_m"});
    m.epsilon.fraction = R.positive(a, "alignment", "epsilon_fraction", m.epsilon.fraction);
    m.epsilon.floor = R.positive(a, "alignment", "epsilon_floor_m", m.epsilon.floor);
    if (a["epsilon_fixed_m"].IsDefined()) m.epsilon.fixed = R.positive(a, "alignment", "epsilon_fixed_m", 1.0);
  }

  if (!sc.env.bounds.contains(sc.start.position)) R.fail(root["start"], "start.position_m", "outside bounds");
  if (!sc.env.bounds.contains(sc.goal.position)) R.fail(root["goal"], "goal.position_m", "outside bounds");
  return sc;
}

inline Scenario load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

inline std::string save_scenario(const Scenario& sc)
{
  using namespace detail;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << sc.name;
  out << YAML::Key << "seed" << YAML::Value << sc.seed;
  out << YAML::Key << "bounds" << YAML::Value << YAML::BeginMap;
  write_vec(out, "min_m", sc.env.bounds.min);
  write_vec(out, "max_m", sc.env.bounds.max);
  out << YAML::EndMap;
  write_pose(out, "start", sc.start.position, sc.start.rpy);
  write_pose(out, "goal", sc.goal.position, sc.goal.rpy);

  out << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (size_t i = 0; i < sc.env.obstacles.size(); ++i) {
    const auto& o = sc.env.obstacles[i];
    out << YAML::BeginMap;
    write_shape_fields(out, o);
    write_vec(out, "position_m", o.pose().translation());
    write_vec(out, "rpy_deg", rpy_rad_to_deg(o.pose().rpy()));
    out << YAML::Key << "feature" << YAML::Value << sc.env.is_feature(i);
    if (sc.env.is_feature(i)) out << YAML::Key << "feature_density_per_m2" << YAML::Value << sc.env.feature_density[i];
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (!sc.objectives.empty()) {
    out << YAML::Key << "objectives_m" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : sc.objectives) out << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
    out << YAML::EndSeq;
  }

  const auto& m = sc.mission;
  out << YAML::Key << "robot" << YAML::Value << YAML::BeginMap;
  write_shape_fields(out, m.robot);
  out << YAML::EndMap;

  out << YAML::Key << "camera_rig" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "d_vis_m" << YAML::Value << m.rig.d_vis;
  out << YAML::Key << "cameras" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : m.rig.cameras) {
    out << YAML::BeginMap;
    write_pose(out, "mount", c.mount.translation(), c.mount.rpy());
    out << YAML::Key << "h_fov_deg" << YAML::Value << rad2deg(c.h_fov);
    out << YAML::Key << "v_fov_deg" << YAML::Value << rad2deg(c.v_fov);
    out << YAML::Key << "max_range_m" << YAML::Value << c.max_range;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "sensor" << YAML::Value << YAML::BeginMap;
  write_pose(out, "mount", m.sensor.mount.translation(), m.sensor.mount.rpy());
  out << YAML::Key << "h_fov_deg" << YAML::Value << rad2deg(m.sensor.h_fov);
  out << YAML::Key << "v_fov_deg" << YAML::Value << rad2deg(m.sensor.v_fov);
  out << YAML::Key << "h_res" << YAML::Value << m.sensor.h_res;
  out << YAML::Key << "v_res" << YAML::Value << m.sensor.v_res;
  out << YAML::Key << "max_range_m" << YAML::Value << m.sensor.max_range;
  out << YAML::EndMap;

  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  for (size_t i = 0; i < 6; ++i) out << YAML::Key << std::string(WeightSet::names[i]) << YAML::Value << sc.weights.as_array()[i];
  out << YAML::EndMap;

  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "segments" << YAML::Value << m.n;
  out << YAML::Key << "keep_spacing" << YAML::Value << m.keep_spacing;
  out << YAML::Key << "d_safe_m" << YAML::Value << m.d_safe;
  out << YAML::Key << "tracking_margin_m" << YAML::Value << m.tracking_margin;
  out << YAML::Key << "replan_period_s" << YAML::Value << m.replan_period;
  out << YAML::Key << "seed_blend" << YAML::Value << m.seed_blend;
  out << YAML::Key << "max_steps" << YAML::Value << m.max_steps;
  out << YAML::Key << "max_cycles" << YAML::Value << m.max_cycles;
  out << YAML::Key << "occlusion" << YAML::Value << m.occlusion;
  out << YAML::EndMap;

  const auto& c = m.optimizer;
  out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "initial_trust_radius_m" << YAML::Value << c.initial_trust_radius;
  out << YAML::Key << "trust_shrink" << YAML::Value << c.trust_shrink;
  out << YAML::Key << "trust_expand" << YAML::Value << c.trust_expand;
  out << YAML::Key << "max_trust_radius_m" << YAML::Value << c.max_trust_radius;
  out << YAML::Key << "min_trust_radius_m" << YAML::Value << c.min_trust_radius;
  out << YAML::Key << "improve_ratio_threshold" << YAML::Value << c.improve_ratio_threshold;
  out << YAML::Key << "penalty_scale" << YAML::Value << c.penalty_scale;
  out << YAML::Key << "initial_penalty" << YAML::Value << c.initial_penalty;
  out << YAML::Key << "max_penalty_iters" << YAML::Value << c.max_penalty_iters;
  out << YAML::Key << "max_sqp_iters" << YAML::Value << c.max_sqp_iters;
  out << YAML::Key << "convergence_tol" << YAML::Value << c.convergence_tol;
  out << YAML::Key << "constraint_tol_m" << YAML::Value << c.constraint_tol;
  out << YAML::Key << "collision_pad_m" << YAML::Value << c.collision_pad;
  out << YAML::Key << "continuous_collision" << YAML::Value << m.continuous_collision;
  out << YAML::EndMap;

  const auto& f = m.follower;
  out << YAML::Key << "follower" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "linear_velocity_m_s" << YAML::Value << f.linear_velocity;
  out << YAML::Key << "max_turn_rate_deg_s" << YAML::Value << rad2deg(f.max_turn_rate);
  out << YAML::Key << "waypoint_tolerance_m" << YAML::Value << f.waypoint_tolerance;
  out << YAML::Key << "constant_roll_deg" << YAML::Value << rad2deg(f.constant_roll);
  out << YAML::Key << "sim_dt_s" << YAML::Value << f.sim_dt;
  out << YAML::EndMap;

  const auto& e = m.extraction;
  out << YAML::Key << "extraction" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "eps_m" << YAML::Value << e.eps;
  out << YAML::Key << "min_samples" << YAML::Value << e.min_samples;
  out << YAML::Key << "capacity" << YAML::Value << e.capacity;
  out << YAML::Key << "merge_radius_m" << YAML::Value << e.merge_radius;
  out << YAML::EndMap;

  out << YAML::Key << "alignment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epsilon_fraction" << YAML::Value << m.epsilon.fraction;
  out << YAML::Key << "epsilon_floor_m" << YAML::Value << m.epsilon.floor;
  if (m.epsilon.fixed) out << YAML::Key << "epsilon_fixed_m" << YAML::Value << *m.epsilon.fixed;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

} // namespace visplan
