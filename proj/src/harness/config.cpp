#include "confplan/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace confplan::harness {

namespace {

// A JSON value together with its dotted path, for error messages.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& json() const { return *j_; }

  std::string child_path(const std::string& key) const { return path_ + "." + key; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    expect_object();
    if (!j_->contains(key)) throw ConfigError(child_path(key), "required field is missing");
    return {(*j_)[key], child_path(key)};
  }

  Node index(std::size_t i) const {
    return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
  }

  void expect_object() const {
    if (!j_->is_object()) throw ConfigError(path_, "expected an object");
  }

  void only(std::initializer_list<const char*> allowed) const {
    expect_object();
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!ok.count(it.key())) throw ConfigError(child_path(it.key()), "unknown field");
    }
  }

  double number() const {
    if (!j_->is_number()) throw ConfigError(path_, "expected a number");
    return j_->get<double>();
  }

  long long integer() const {
    if (!j_->is_number_integer() && !j_->is_number_unsigned()) {
      throw ConfigError(path_, "expected an integer");
    }
    return j_->get<long long>();
  }

  std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    long long v = integer();
    if (v < 0) throw ConfigError(path_, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean() const {
    if (!j_->is_boolean()) throw ConfigError(path_, "expected true or false");
    return j_->get<bool>();
  }

  std::string str() const {
    if (!j_->is_string()) throw ConfigError(path_, "expected a string");
    return j_->get<std::string>();
  }

  std::size_t array_size() const {
    if (!j_->is_array()) throw ConfigError(path_, "expected an array");
    return j_->size();
  }

  Vec2 vec2() const {
    if (array_size() != 2) throw ConfigError(path_, "expected [x, y]");
    return {index(0).number(), index(1).number()};
  }

  Cell cell() const {
    if (array_size() != 2) throw ConfigError(path_, "expected [column, row]");
    return {static_cast<int>(index(0).integer()), static_cast<int>(index(1).integer())};
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < array_size(); ++i) out.push_back(index(i).number());
    return out;
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }
  int integer(const std::string& key, int fallback) const {
    return has(key) ? static_cast<int>(at(key).integer()) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    return has(key) ? at(key).boolean() : fallback;
  }

 private:
  const Json* j_;
  std::string path_;
};

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }
Json cell_json(Cell c) { return Json::array({c.x, c.y}); }

MotionSpec motion_from(const Node& m) {
  const std::string type = m.at("type").str();
  if (type == "constant_velocity") {
    m.only({"type", "start", "velocity"});
    return ConstantVelocityMotion{m.at("start").vec2(), m.at("velocity").vec2()};
  }
  if (type == "waypoints") {
    m.only({"type", "waypoints"});
    Node list = m.at("waypoints");
    WaypointMotion w;
    for (std::size_t i = 0; i < list.array_size(); ++i) {
      Node row = list.index(i);
      if (row.array_size() != 3) throw ConfigError(row.path(), "expected [t, x, y]");
      w.waypoints.push_back({row.index(0).number(), {row.index(1).number(), row.index(2).number()}});
    }
    if (w.waypoints.empty()) throw ConfigError(list.path(), "needs at least one waypoint");
    return w;
  }
  if (type == "sinusoidal") {
    m.only({"type", "center", "velocity", "direction", "amplitude", "period", "phase"});
    SinusoidalMotion s;
    s.center = m.at("center").vec2();
    if (m.has("velocity")) s.velocity = m.at("velocity").vec2();
    if (m.has("direction")) s.direction = m.at("direction").vec2();
    s.amplitude = m.at("amplitude").number();
    s.period = m.at("period").number();
    s.phase = m.number("phase", 0.0);
    if (!(s.period > 0.0)) throw ConfigError(m.child_path("period"), "must be > 0");
    return s;
  }
  throw ConfigError(m.child_path("type"),
                    "unknown motion type '" + type + "' (constant_velocity, waypoints, sinusoidal)");
}

Json motion_json(const MotionSpec& motion) {
  struct Visitor {
    Json operator()(const ConstantVelocityMotion& m) const {
      return {{"type", "constant_velocity"}, {"start", vec_json(m.start)}, {"velocity", vec_json(m.velocity)}};
    }
    Json operator()(const WaypointMotion& m) const {
      Json rows = Json::array();
      for (const Sample& s : m.waypoints) rows.push_back({s.t, s.position.x, s.position.y});
      return {{"type", "waypoints"}, {"waypoints", rows}};
    }
    Json operator()(const SinusoidalMotion& m) const {
      return {{"type", "sinusoidal"},          {"center", vec_json(m.center)},
              {"velocity", vec_json(m.velocity)}, {"direction", vec_json(m.direction)},
              {"amplitude", m.amplitude},       {"period", m.period},
              {"phase", m.phase}};
    }
  };
  return std::visit(Visitor{}, motion);
}

Predictor predictor_from(const Node& n) {
  Predictor p;
  try {
    p.kind = predictor_kind_from_string(n.at("kind").str());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(n.child_path("kind"), e.what());
  }
  p.noise_sigma = n.number("noise_sigma", 0.0);
  p.lookback = n.integer("lookback", 2);
  if (!(p.noise_sigma >= 0.0)) throw ConfigError(n.child_path("noise_sigma"), "must be >= 0");
  if (p.lookback < 1) throw ConfigError(n.child_path("lookback"), "must be >= 1");
  return p;
}

Json predictor_json(const Predictor& p) {
  return {{"kind", to_string(p.kind)}, {"noise_sigma", p.noise_sigma}, {"lookback", p.lookback}};
}

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

}  // namespace

std::string to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::spacetime: return "spacetime";
    case PlannerKind::cp_sipp: return "cp_sipp";
    case PlannerKind::acp_rrt: return "acp_rrt";
    case PlannerKind::rrt_baseline: return "rrt_baseline";
  }
  return "unknown";
}

PlannerKind planner_kind_from_string(const std::string& name) {
  if (name == "spacetime") return PlannerKind::spacetime;
  if (name == "cp_sipp") return PlannerKind::cp_sipp;
  if (name == "acp_rrt") return PlannerKind::acp_rrt;
  if (name == "rrt_baseline") return PlannerKind::rrt_baseline;
  throw std::invalid_argument("unknown planner '" + name +
                              "' (spacetime, cp_sipp, acp_rrt, rrt_baseline)");
}

bool is_grid_planner(PlannerKind k) {
  return k == PlannerKind::spacetime || k == PlannerKind::cp_sipp;
}

Scenario scenario_from_json(const Json& j, const std::string& path) {
  Node root(j, path);
  root.only({"workspace", "horizon", "dt", "seed", "obstacles", "name", "description"});
  Scenario s;
  Node ws = root.at("workspace");
  ws.only({"width", "height", "resolution", "blocked"});
  s.workspace.width = ws.at("width").number();
  s.workspace.height = ws.at("height").number();
  s.workspace.grid_resolution = ws.number("resolution", 1.0);
  require(s.workspace.width > 0.0, ws.child_path("width"), "must be > 0");
  require(s.workspace.height > 0.0, ws.child_path("height"), "must be > 0");
  require(s.workspace.grid_resolution > 0.0, ws.child_path("resolution"), "must be > 0");
  if (ws.has("blocked")) {
    Node blocked = ws.at("blocked");
    for (std::size_t i = 0; i < blocked.array_size(); ++i) {
      Cell c = blocked.index(i).cell();
      if (!s.workspace.in_bounds(c)) throw ConfigError(blocked.index(i).path(), "cell outside the grid");
      s.workspace.static_blocked_cells.push_back(c);
    }
    auto& cells = s.workspace.static_blocked_cells;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
  s.horizon_T = root.at("horizon").number();
  s.dt = root.number("dt", 1.0);
  s.rng_seed = root.has("seed") ? root.at("seed").unsigned_integer() : 0;
  require(s.horizon_T > 0.0, root.child_path("horizon"), "must be > 0");
  require(s.dt > 0.0, root.child_path("dt"), "must be > 0");

  if (root.has("obstacles")) {
    Node obs = root.at("obstacles");
    for (std::size_t i = 0; i < obs.array_size(); ++i) {
      Node o = obs.index(i);
      o.only({"id", "radius", "motion"});
      ObstacleSpec spec;
      spec.id = o.integer("id", static_cast<int>(i));
      spec.radius = o.number("radius", 0.0);
      require(spec.radius >= 0.0, o.child_path("radius"), "must be >= 0");
      spec.motion = motion_from(o.at("motion"));
      s.obstacles.push_back(std::move(spec));
    }
  }
  try {
    s.validate();
  } catch (const ScenarioError& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json blocked = Json::array();
  for (Cell c : s.workspace.static_blocked_cells) blocked.push_back(cell_json(c));
  Json obstacles = Json::array();
  for (const ObstacleSpec& o : s.obstacles) {
    obstacles.push_back({{"id", o.id}, {"radius", o.radius}, {"motion", motion_json(o.motion)}});
  }
  return {{"workspace",
           {{"width", s.workspace.width},
            {"height", s.workspace.height},
            {"resolution", s.workspace.grid_resolution},
            {"blocked", blocked}}},
          {"horizon", s.horizon_T},
          {"dt", s.dt},
          {"seed", s.rng_seed},
          {"obstacles", obstacles}};
}

Json read_json_file(const std::filesystem::path& file, const std::string& path) {
  std::ifstream in(file);
  if (!in) throw ConfigError(path, "cannot open '" + file.string() + "'");
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, "'" + file.string() + "' is not valid JSON: " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& file) {
  return scenario_from_json(read_json_file(file, "scenario"), "scenario");
}

ExperimentSpec experiment_from_json(const Json& j, const std::filesystem::path& spec_dir) {
  Node root(j, "experiment");
  root.only({"scenario", "scenario_inline", "planner", "calibration_episodes", "test_trials", "seed",
             "output_dir", "predictor", "live_predictor", "grid", "rrt", "acp", "gate",
             "frame_times", "name", "description"});
  ExperimentSpec spec;
  spec.spec_dir = spec_dir;

  if (root.has("scenario_inline")) {
    spec.scenario = scenario_from_json(root.at("scenario_inline").json(), "experiment.scenario_inline");
  } else {
    spec.scenario_path = root.at("scenario").str();
    std::filesystem::path p = spec.scenario_path;
    if (p.is_relative()) p = spec_dir / p;
    spec.scenario = scenario_from_json(read_json_file(p, "experiment.scenario"), "scenario");
  }

  try {
    spec.planner = planner_kind_from_string(root.at("planner").str());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("experiment.planner", e.what());
  }
  spec.calibration_episodes = root.integer("calibration_episodes", 200);
  spec.test_trials = root.integer("test_trials", 100);
  require(spec.calibration_episodes >= 1, "experiment.calibration_episodes", "must be >= 1");
  require(spec.test_trials >= 1, "experiment.test_trials", "must be >= 1");
  spec.seed = root.has("seed") ? root.at("seed").unsigned_integer() : 0;
  if (root.has("output_dir")) spec.output_dir = root.at("output_dir").str();

  if (root.has("predictor")) {
    Node p = root.at("predictor");
    p.only({"kind", "noise_sigma", "lookback", "history_steps"});
    spec.predictor.predictor = predictor_from(p);
    spec.predictor.history_steps = p.integer("history_steps", 2);
    require(spec.predictor.history_steps >= spec.predictor.predictor.lookback - 1,
            p.child_path("history_steps"), "must be >= lookback - 1");
  }
  if (root.has("live_predictor")) {
    Node p = root.at("live_predictor");
    p.only({"kind", "noise_sigma", "lookback"});
    spec.live_predictor = predictor_from(p);
    require(spec.predictor.history_steps >= spec.live_predictor->lookback - 1,
            p.child_path("lookback"), "needs more history than predictor.history_steps provides");
  }

  const int steps = spec.scenario.steps();
  if (is_grid_planner(spec.planner)) {
    Node g = root.at("grid");
    g.only({"start", "goal", "ladder", "c_min", "gamma", "connectivity", "allow_wait", "T_steps",
            "robot_radius"});
    GridConfig& gc = spec.grid;
    gc.start = g.at("start").cell();
    gc.goal = g.at("goal").cell();
    if (g.has("ladder")) gc.ladder = g.at("ladder").numbers();
    gc.c_min = g.number("c_min", gc.ladder.empty() ? 0.0 : gc.ladder.back());
    gc.gamma = g.number("gamma", 0.0);
    if (g.has("connectivity")) {
      try {
        gc.connectivity = connectivity_from_string(g.at("connectivity").str());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(g.child_path("connectivity"), e.what());
      }
    }
    gc.allow_wait = g.boolean("allow_wait", true);
    gc.T_steps = g.integer("T_steps", steps + 1);
    gc.robot_radius = g.number("robot_radius", 0.0);
    const Workspace& ws = spec.scenario.workspace;
    require(ws.is_free(gc.start), g.child_path("start"), "must be a free cell inside the grid");
    require(ws.is_free(gc.goal), g.child_path("goal"), "must be a free cell inside the grid");
    require(gc.gamma >= 0.0 && gc.gamma <= 1.0, g.child_path("gamma"), "must lie in [0, 1]");
    require(gc.T_steps >= 1 && gc.T_steps <= steps + 1, g.child_path("T_steps"),
            "must lie in [1, horizon/dt + 1]");
    require(gc.robot_radius >= 0.0, g.child_path("robot_radius"), "must be >= 0");
    try {
      ConfidenceLadder{gc.ladder, gc.c_min}.validate();
      for (double c : gc.ladder) {
        if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("ladder levels must lie in (0, 1)");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(g.child_path("ladder"), e.what());
    }
  } else {
    Node r = root.at("rrt");
    r.only({"start", "goal", "v_max", "step_size", "horizon", "c_start", "c_end", "max_iterations",
            "goal_bias", "ladder", "node_only_check", "robot_radius", "baseline_retries",
            "collision_substeps"});
    RecedingConfig& rc = spec.receding;
    rc.mode = spec.planner == PlannerKind::acp_rrt ? RrtMode::acp : RrtMode::baseline;
    rc.start = r.at("start").vec2();
    Node goal = r.at("goal");
    goal.only({"center", "radius"});
    rc.rrt.goal = {goal.at("center").vec2(), goal.number("radius", 1.0)};
    rc.rrt.v_max = r.number("v_max", 1.0);
    rc.rrt.step_size = r.number("step_size", 1.0);
    rc.rrt.horizon_H = r.number("horizon", 50.0);
    rc.rrt.c_start = r.number("c_start", 0.95);
    rc.rrt.c_end = r.number("c_end", 0.6);
    rc.rrt.max_iterations = r.integer("max_iterations", 3000);
    rc.rrt.goal_bias = r.number("goal_bias", 0.05);
    rc.rrt.ladder = r.has("ladder") ? r.at("ladder").numbers()
                                    : std::vector<double>{0.95, 0.9, 0.8, 0.7, 0.6};
    rc.rrt.node_only_check = r.boolean("node_only_check", false);
    rc.rrt.robot_radius = r.number("robot_radius", 0.0);
    rc.baseline_retries = r.integer("baseline_retries", 3);
    rc.collision_substeps = r.integer("collision_substeps", 4);
    try {
      rc.rrt.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("experiment.rrt", e.what());
    }
    require(!rc.rrt.ladder.empty(), r.child_path("ladder"), "must not be empty");
    for (double c : rc.rrt.ladder) {
      require(c > 0.0 && c < 1.0, r.child_path("ladder"), "levels must lie in (0, 1)");
    }
    require(rc.rrt.horizon_H <= spec.scenario.horizon_T, r.child_path("horizon"),
            "must not exceed the scenario horizon");
    require(rc.baseline_retries >= 1, r.child_path("baseline_retries"), "must be >= 1");
    require(rc.collision_substeps >= 1, r.child_path("collision_substeps"), "must be >= 1");
    require(spec.scenario.workspace.contains(rc.start), r.child_path("start"),
            "must lie inside the workspace");

    if (root.has("acp")) {
      Node a = root.at("acp");
      a.only({"lambda0", "kappa", "lambda_min", "lambda_max", "alpha", "reference"});
      rc.acp.lambda = a.number("lambda0", 1.0);
      rc.acp.kappa = a.number("kappa", 0.05);
      rc.acp.lambda_min = a.number("lambda_min", 0.1);
      rc.acp.lambda_max = a.number("lambda_max", 10.0);
      rc.acp.alpha = a.number("alpha", 0.1);
      if (a.has("reference")) {
        std::string ref = a.at("reference").str();
        require(ref == "base_quantile" || ref == "robot_distance", a.child_path("reference"),
                "must be base_quantile or robot_distance");
        rc.robot_distance_reference = ref == "robot_distance";
      }
      try {
        rc.acp.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment.acp", e.what());
      }
    }
    if (root.has("gate")) {
      Node g = root.at("gate");
      g.only({"warmup", "block_length", "permutations", "alpha", "retest_every"});
      rc.gate.warmup_W0 = g.integer("warmup", 50);
      rc.gate.block_len_B = g.integer("block_length", 5);
      rc.gate.n_permutations_N = g.integer("permutations", 199);
      rc.gate.alpha_gate = g.number("alpha", 0.05);
      rc.gate_retest_every = g.integer("retest_every", 0);
      require(rc.gate_retest_every >= 0, g.child_path("retest_every"), "must be >= 0");
      try {
        rc.gate.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment.gate", e.what());
      }
    }
  }
  if (root.has("frame_times")) spec.frame_times = root.at("frame_times").numbers();

  spec.receding.predictor = spec.live_predictor.value_or(spec.predictor.predictor);
  spec.receding.history_steps = spec.predictor.history_steps;
  spec.receding.seed = spec.seed;
  spec.receding.gate.rng_seed = spec.seed;
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& file) {
  return experiment_from_json(read_json_file(file, "experiment"), file.parent_path());
}

Json experiment_to_json(const ExperimentSpec& spec) {
  Json j;
  j["planner"] = to_string(spec.planner);
  if (!spec.scenario_path.empty()) j["scenario"] = spec.scenario_path;
  j["scenario_inline"] = scenario_to_json(spec.scenario);
  j["calibration_episodes"] = spec.calibration_episodes;
  j["test_trials"] = spec.test_trials;
  j["seed"] = spec.seed;
  j["output_dir"] = spec.output_dir;
  Json p = predictor_json(spec.predictor.predictor);
  p["history_steps"] = spec.predictor.history_steps;
  j["predictor"] = p;
  j["live_predictor"] = predictor_json(spec.live_predictor.value_or(spec.predictor.predictor));
  if (is_grid_planner(spec.planner)) {
    const GridConfig& g = spec.grid;
    j["grid"] = {{"start", cell_json(g.start)},
                 {"goal", cell_json(g.goal)},
                 {"ladder", g.ladder},
                 {"c_min", g.c_min},
                 {"gamma", g.gamma},
                 {"connectivity", to_string(g.connectivity)},
                 {"allow_wait", g.allow_wait},
                 {"T_steps", g.T_steps},
                 {"robot_radius", g.robot_radius}};
  } else {
    const RecedingConfig& rc = spec.receding;
    j["rrt"] = {{"start", vec_json(rc.start)},
                {"goal", {{"center", vec_json(rc.rrt.goal.center)}, {"radius", rc.rrt.goal.radius}}},
                {"v_max", rc.rrt.v_max},
                {"step_size", rc.rrt.step_size},
                {"horizon", rc.rrt.horizon_H},
                {"c_start", rc.rrt.c_start},
                {"c_end", rc.rrt.c_end},
                {"max_iterations", rc.rrt.max_iterations},
                {"goal_bias", rc.rrt.goal_bias},
                {"ladder", rc.rrt.ladder},
                {"node_only_check", rc.rrt.node_only_check},
                {"robot_radius", rc.rrt.robot_radius},
                {"baseline_retries", rc.baseline_retries},
                {"collision_substeps", rc.collision_substeps}};
    j["acp"] = {{"lambda0", rc.acp.lambda},
                {"kappa", rc.acp.kappa},
                {"lambda_min", rc.acp.lambda_min},
                {"lambda_max", rc.acp.lambda_max},
                {"alpha", rc.acp.alpha},
                {"reference", rc.robot_distance_reference ? "robot_distance" : "base_quantile"}};
    j["gate"] = {{"warmup", rc.gate.warmup_W0},
                 {"block_length", rc.gate.block_len_B},
                 {"permutations", rc.gate.n_permutations_N},
                 {"alpha", rc.gate.alpha_gate},
                 {"retest_every", rc.gate_retest_every}};
  }
  j["frame_times"] = spec.frame_times;
  return j;
}

void set_json_path(Json& j, const std::string& dotted, const Json& value) {
  Json* cur = &j;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError(dotted, "empty field path");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur->is_object()) throw ConfigError(dotted, "'" + parts[i] + "' is not an object");
    cur = &(*cur)[parts[i]];
    if (cur->is_null()) *cur = Json::object();
  }
  if (!cur->is_object()) throw ConfigError(dotted, "parent is not an object");
  (*cur)[parts.back()] = value;
}

}  // namespace confplan::harness
