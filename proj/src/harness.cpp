#include "hsi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "detail/json_io.hpp"
#include "hsi/error.hpp"
#include "hsi/rng.hpp"

namespace hsi {

using detail::Json;

namespace {

const Json& cfield(const Json& j, const char* key) {
  return detail::field<ConfigError>(j, key);
}

double cnum(const Json& j, const char* what) { return detail::number<ConfigError>(j, what); }

Vec3 point2or3(const Json& j, const char* what) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3))
    throw ConfigError(std::string(what) + " must be [x, y] or [x, y, z]");
  return {cnum(j[0], what), cnum(j[1], what), j.size() == 3 ? cnum(j[2], what) : 0.0};
}

std::optional<double> optional_degrees(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return wrap_angle(deg_to_rad(cnum(j.at(key), key)));
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "hsi-scenario/1")
    throw ConfigError("scenario schema must be 'hsi-scenario/1'");

  ScenarioConfig c;
  c.id = detail::text<ConfigError>(cfield(j, "id"), "id");
  c.scene_path = base_dir / detail::text<ConfigError>(cfield(j, "scene"), "scene");
  c.task = detail::text<ConfigError>(cfield(j, "task"), "task");

  if (j.contains("nav")) {
    const Json& nav = j.at("nav");
    if (nav.contains("cell")) c.nav_cell = cnum(nav.at("cell"), "nav.cell");
    if (nav.contains("clearance")) c.clearance = cnum(nav.at("clearance"), "nav.clearance");
    if (nav.contains("layers")) {
      c.layers.clear();
      for (const Json& l : nav.at("layers"))
        c.layers.push_back({cnum(cfield(l, "ground_z"), "ground_z"), l.value("require_support", false)});
    }
  }

  const Json& start = cfield(j, "start");
  const int start_layer = start.value("layer", 0);
  if (start_layer < 0 || start_layer >= static_cast<int>(c.layers.size()))
    throw ConfigError("start layer out of range");
  const Vec3 sp = point2or3(cfield(start, "position"), "start.position");
  c.start.root_translation = {sp.x, sp.y, c.layers[static_cast<std::size_t>(start_layer)].ground_z + c.planner_config.pelvis_height};
  c.start.root_yaw = optional_degrees(start, "yaw_deg").value_or(0.0);

  for (const Json& g : cfield(j, "subgoals")) {
    SubGoal s;
    s.layer = g.value("layer", 0);
    if (s.layer < 0 || s.layer >= static_cast<int>(c.layers.size())) throw ConfigError("sub-goal layer out of range");
    const Vec3 p = point2or3(cfield(g, "position"), "subgoal.position");
    s.position = {p.x, p.y, c.layers[static_cast<std::size_t>(s.layer)].ground_z};
    s.facing = optional_degrees(g, "facing_deg");
    s.label = g.value("label", "arrive");
    s.description = g.value("description", "");
    c.subgoals.push_back(s);
  }
  if (j.contains("links"))
    for (const Json& l : j.at("links")) {
      VerticalLink v;
      v.lower_layer = l.value("lower_layer", 0);
      v.upper_layer = l.value("upper_layer", 1);
      v.bottom = point2or3(cfield(l, "bottom"), "link.bottom");
      v.top = point2or3(cfield(l, "top"), "link.top");
      c.links.push_back(v);
    }
  if (j.contains("obstacles"))
    for (const Json& o : j.at("obstacles")) {
      ObstacleInjection inj;
      inj.mesh_path = base_dir / detail::text<ConfigError>(cfield(o, "mesh"), "mesh");
      inj.spec.mesh = load_scene(inj.mesh_path);
      inj.spec.translation = point2or3(cfield(o, "position"), "obstacle.position");
      inj.spec.yaw = optional_degrees(o, "yaw_deg").value_or(0.0);
      inj.spec.tag = detail::text<ConfigError>(cfield(o, "tag"), "tag");
      inj.spec.seen = o.value("seen", true);
      if (o.contains("trigger")) {
        const Json& t = o.at("trigger");
        if (t.is_string() && t == "at_start") {
        } else if (t.is_object() && t.contains("within")) {
          inj.within = cnum(t.at("within"), "trigger.within");
        } else {
          throw ConfigError("obstacle trigger must be \"at_start\" or {\"within\": meters}");
        }
      }
      c.obstacles.push_back(std::move(inj));
    }
  if (j.contains("noise")) {
    const Json& n = j.at("noise");
    c.noise.translation_sigma = n.contains("translation_sigma") ? cnum(n.at("translation_sigma"), "translation_sigma") : 0.0;
    c.noise.yaw_sigma = n.contains("yaw_sigma") ? cnum(n.at("yaw_sigma"), "yaw_sigma") : 0.0;
    c.noise.p_extra = n.contains("p_extra") ? cnum(n.at("p_extra"), "p_extra") : 0.0;
  }
  if (j.contains("backend")) {
    const Json& b = j.at("backend");
    c.backend = b.value("kind", "rule");
    c.endpoint = b.value("endpoint", "");
  }
  c.critic = j.value("critic", true);
  c.planner = j.value("planner", true);
  if (j.contains("seeds")) {
    c.seeds.clear();
    for (const Json& s : j.at("seeds")) {
      if (!s.is_number_unsigned()) throw ConfigError("seeds must be non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (j.contains("frame_budget")) c.frame_budget = detail::integer<ConfigError>(j.at("frame_budget"), "frame_budget");
  validate(c);
  return c;
}

void validate(const ScenarioConfig& c) {
  if (c.id.empty()) throw ConfigError("scenario id is empty");
  if (c.task.empty()) throw ConfigError("task text is empty");
  if (c.subgoals.empty()) throw ConfigError("scenario needs at least one sub-goal");
  if (c.frame_budget <= 0) throw ConfigError("frame budget must be positive");
  if (!(c.nav_cell > 0) || !(c.clearance >= 0)) throw ConfigError("nav cell must be positive, clearance non-negative");
  if (c.backend != "rule" && c.backend != "remote") throw ConfigError("backend must be 'rule' or 'remote'");
  if (c.backend == "remote" && c.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
  if (c.seeds.empty()) throw ConfigError("scenario needs at least one seed");
  if (!std::filesystem::exists(c.scene_path)) throw ConfigError("scene file " + c.scene_path.string() + " not found");
  for (std::size_t i = 0; i < c.obstacles.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (c.obstacles[i].spec.tag == c.obstacles[k].spec.tag)
        throw ConfigError("duplicate obstacle tag '" + c.obstacles[i].spec.tag + "'");
  for (const VerticalLink& l : c.links)
    if (l.lower_layer < 0 || l.upper_layer < 0 || l.lower_layer >= static_cast<int>(c.layers.size()) ||
        l.upper_layer >= static_cast<int>(c.layers.size()) || l.lower_layer == l.upper_layer)
      throw ConfigError("vertical link names invalid layers");
  validate(c.noise);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

std::vector<ScenarioConfig> load_scenario_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("scenario directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no scenario files in " + dir.string());
  std::vector<ScenarioConfig> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

PreparedScenario prepare(const ScenarioConfig& config) {
  validate(config);
  PreparedScenario p{config, load_scene(config.scene_path), {}};
  const OccupancyGrid occ = voxelize(p.scene, config.nav_cell);
  for (const NavLayerConfig& l : config.layers) {
    NavParams params;
    params.ground_z = l.ground_z;
    params.require_support = l.require_support;
    p.nav.layers.push_back(nav_grid(occ, config.clearance, params));
  }
  p.nav.links = config.links;
  return p;
}

std::string RunTrace::events_jsonl() const {
  std::string out;
  for (const std::string& e : events) out += e + '\n';
  return out;
}

namespace {

bool same_pose(const HumanState& s, const ActionUnit& u) {
  return norm(s.root_translation - u.anchor_position) < 1e-9 && std::fabs(wrap_angle(s.root_yaw - u.anchor_yaw)) < 1e-9;
}

std::shared_ptr<AgentBackend> make_backend(const ScenarioConfig& c) {
  if (c.backend == "remote") return std::make_shared<RemoteBackend>(RemoteBackend::Options{c.endpoint});
  return std::make_shared<RuleBackend>(c.critic_config);
}

class Recorder {
 public:
  explicit Recorder(RunTrace& trace) : trace_(trace) {}
  void operator()(const char* kind, Json detail = Json::object()) {
    Json j;
    j["t"] = trace_.frames_generated;
    j["event"] = kind;
    for (auto& [k, v] : detail.items()) j[k] = v;
    trace_.events.push_back(j.dump());
  }

 private:
  RunTrace& trace_;
};

Json verbs(const std::deque<ActionUnit>& units) {
  Json out = Json::array();
  for (const ActionUnit& u : units) out.push_back(verb_name(u.verb));
  return out;
}

}  // namespace

RunTrace run_scenario(const PreparedScenario& sc, std::uint64_t seed, const RunOptions& options) {
  const ScenarioConfig& cfg = sc.config;
  RunTrace trace;
  Recorder record(trace);
  trace.metrics.scenario = cfg.id;
  trace.metrics.seed = seed;
  trace.metrics.critic = cfg.critic;
  trace.metrics.planner = cfg.planner;
  trace.metrics.setting = cfg.critic ? (cfg.planner ? "full" : "no_planner") : (cfg.planner ? "no_critic" : "no_agents");

  const std::shared_ptr<AgentBackend> backend = options.backend ? options.backend : make_backend(cfg);
  const StreamKey run_key = StreamKey(seed).child(cfg.id);
  PlannerConfig pc = cfg.planner_config;
  pc.ignore_obstacles = options.ignore_obstacles;
  const GoalTolerance tol{};

  std::vector<SceneMesh> versions{sc.scene};
  std::vector<bool> injected(cfg.obstacles.size(), false);
  std::vector<ObstacleExtent> extents;

  KeyPlan plan;
  try {
    plan = backend->navigate(TaskSpec{cfg.task, cfg.start, 0, cfg.subgoals, {}}, sc.nav);
  } catch (const Error& e) {
    record("error", {{"stage", "navigate"}, {"kind", error_kind(e)}, {"message", e.what()}});
    trace.error_kind = error_kind(e);
    trace.metrics.failed = true;
    trace.metrics.error = e.what();
    return trace;
  }
  {
    Json ms = Json::array();
    for (std::size_t k = 0; k < plan.milestones.size(); ++k)
      ms.push_back({{"label", plan.milestones[k].label}, {"waypoints", plan.trajectories[k].size()}});
    record("navigate", {{"milestones", ms}});
  }

  InteractionGraph graph = InteractionGraph::init(cfg.start, 0, plan, tol);
  std::map<std::size_t, std::uint64_t> attempts;
  std::deque<ActionUnit> pending;
  bool need_plan = true;
  std::size_t key = 0;

  try {
    while (key < plan.milestones.size() && trace.frames_generated < cfg.frame_budget) {
      const HumanState& head_state = graph.node(graph.head()).human;
      for (std::size_t o = 0; o < cfg.obstacles.size(); ++o) {
        if (injected[o] || !options.inject_obstacles) continue;
        const ObstacleInjection& inj = cfg.obstacles[o];
        if (inj.within && horizontal_distance(head_state.root_translation, inj.spec.translation) > *inj.within) continue;
        injected[o] = true;
        const SceneMesh posed = posed_obstacle(inj.spec);
        versions.push_back(merge_meshes(versions.back(), posed));
        trace.obstacles.push_back(inj.spec);
        extents.push_back(obstacle_extent(posed, inj.spec.tag));
        record("inject", {{"tag", inj.spec.tag}, {"scene_version", versions.size() - 1}});
        if (!options.ignore_obstacles) need_plan = true;
      }
      const int version = static_cast<int>(versions.size()) - 1;
      const SceneMesh& perceived = options.ignore_obstacles ? versions.front() : versions.back();
      const Milestone& goal = plan.milestones[key];
      const NodeId key_node = graph.key_order()[key + 1];

      PlanRequest request{&plan, key, options.ignore_obstacles ? std::vector<ObstacleExtent>{} : extents, pc};
      if (need_plan || pending.empty()) {
        ActionChain chain;
        if (cfg.planner) {
          chain = backend->plan_chain(head_state, request);
        } else {
          ActionUnit u;
          u.verb = Verb::custom_text;
          u.anchor_position = head_state.root_translation;
          u.anchor_yaw = head_state.root_yaw;
          u.target = goal.position + Vec3{0, 0, pc.pelvis_height};
          u.target_yaw = goal.facing.value_or(head_state.root_yaw);
          u.duration_frames = kMaxUnitFrames;
          u.description = goal.description.empty() ? goal.label : goal.description;
          chain.units.push_back(u);
        }
        pending.assign(chain.units.begin(), chain.units.end());
        need_plan = false;
        record("plan", {{"milestone", key}, {"units", verbs(pending)}});
      }

      ActionUnit unit = pending.front();
      pending.pop_front();
      const bool final_unit = pending.empty();

      const std::size_t depth = graph.current_path().edges.size();
      NoiseModel noise = cfg.noise;
      noise.seed = run_key.child(depth).child(attempts[depth]++).value();
      MotionClip clip;
      try {
        clip = execute_action(head_state, unit, noise, pc.generator, graph.head());
      } catch (const GeneratorError& e) {
        // Straight horizontal walk toward the milestone.
        record("fallback", {{"message", e.what()}});
        const Vec3 to{goal.position.x, goal.position.y, head_state.root_translation.z};
        unit.verb = Verb::walk_to;
        unit.anchor_position = head_state.root_translation;
        unit.anchor_yaw = head_state.root_yaw;
        unit.target = to;
        unit.target_yaw = horizontal_distance(to, head_state.root_translation) > 1e-9
                              ? std::atan2(to.y - head_state.root_translation.y, to.x - head_state.root_translation.x)
                              : head_state.root_yaw;
        unit.duration_frames = 0;
        clip = execute_action(head_state, unit, noise, pc.generator, graph.head());
      }
      const std::int64_t remaining = cfg.frame_budget - trace.frames_generated;
      if (clip.frame_count() > remaining) {
        clip.frames.resize(static_cast<std::size_t>(remaining) + 1);
        clip.nominal_frames = std::min<int>(clip.nominal_frames, static_cast<int>(remaining));
        clip.incomplete = true;
      }
      trace.frames_generated += clip.frame_count();
      ++trace.clips;
      const bool has_extra = clip.frame_count() > clip.nominal_frames;
      if (has_extra) ++trace.extra_clips;
      record("clip", {{"verb", verb_name(unit.verb)},
                      {"frames", clip.frame_count()},
                      {"nominal_frames", clip.nominal_frames},
                      {"incomplete", clip.incomplete},
                      {"source", clip.source_node}});

      const NodeId candidate = final_unit ? key_node : kNoKey;
      if (has_extra && clip.nominal_frames >= 1) {
        MotionClip planned = clip, extra = clip;
        planned.frames.resize(static_cast<std::size_t>(clip.nominal_frames) + 1);
        const NodeId mid = graph.extend(unit, planned, version, candidate);
        extra.frames.erase(extra.frames.begin(), extra.frames.begin() + clip.nominal_frames);
        extra.source_node = mid;
        extra.nominal_frames = 0;
        extra.label = "unplanned";
        ActionUnit gesture;
        gesture.verb = Verb::idle;
        gesture.anchor_position = gesture.target = planned.frames.back().root_translation;
        gesture.anchor_yaw = gesture.target_yaw = planned.frames.back().root_yaw;
        gesture.duration_frames = extra.frame_count();
        gesture.description = "unplanned gesture";
        graph.extend(gesture, extra, version, kNoKey);
      } else {
        graph.extend(unit, clip, version, candidate);
      }

      if (cfg.critic) {
        const CritiqueContext ctx{&plan.trajectories[key], &unit, &perceived, goal.position, &request};
        const Critique c = backend->critique(clip, ctx);
        record("critique", {{"verdict", verdict_name(c.verdict)},
                            {"kept_frame", c.kept_frame},
                            {"corrective_yaw", c.corrective_yaw},
                            {"camera", detail::to_json(c.camera.position)},
                            {"camera_degraded", c.camera.degraded}});
        if (c.verdict == Verdict::replan) {
          ++trace.replans;
          const std::size_t pruned = graph.prune_after(clip.source_node);
          ++trace.prune_events;
          trace.metrics.pruned += static_cast<std::int64_t>(pruned);
          record("prune", {{"after", clip.source_node}, {"count", pruned}});
          pending.clear();
          if (cfg.planner && c.adjusted_chain && !c.adjusted_chain->units.empty())
            pending.assign(c.adjusted_chain->units.begin(), c.adjusted_chain->units.end());
          need_plan = pending.empty();
        } else {
          (c.verdict == Verdict::accept ? trace.accepts : trace.backtracks)++;
          const Correction r = apply_correction(graph, clip, c, unit, version, candidate,
                                                cfg.critic_config.correction_window);
          if (r.pruned > 0) {
            ++trace.prune_events;
            trace.metrics.pruned += static_cast<std::int64_t>(r.pruned);
            record("prune", {{"after", clip.source_node}, {"kept_frame", c.kept_frame}, {"count", r.pruned}});
          }
          if (c.corrective_yaw != 0.0) record("correct", {{"yaw", c.corrective_yaw}, {"head", r.head}});
        }
        if (!pending.empty() && !same_pose(graph.node(graph.head()).human, pending.front())) need_plan = true;
      }

      if (graph.node(key_node).status == NodeStatus::reached) {
        record("milestone", {{"index", key}, {"label", goal.label}, {"node", key_node}});
        ++key;
        pending.clear();
        need_plan = true;
      } else if (pending.empty()) {
        if (!cfg.critic) {
          record("skip", {{"index", key}, {"label", goal.label}});
          ++key;
        }
        need_plan = true;
      }
    }
    if (key < plan.milestones.size()) record("budget_exhausted", {{"milestone", key}});
  } catch (const Error& e) {
    record("error", {{"stage", "loop"}, {"kind", error_kind(e)}, {"message", e.what()}});
    trace.error_kind = error_kind(e);
    trace.metrics.failed = true;
    trace.metrics.error = e.what();
  }

  graph.check_invariants();
  trace.graph = graph.export_trace();
  trace.path = path_clip(graph);
  const Skeleton& sk = Skeleton::canonical();
  trace.metrics.frames = trace.frames_generated;
  trace.metrics.goal_completion = goal_completion(graph, tol);
  trace.metrics.p_score = penetration_score(trace.path, sc.scene, sk);
  trace.metrics.fs = trace.path.frames.size() >= 2 ? foot_sliding(trace.path, sk) : 0.0;
  trace.metrics.pos = trace.obstacles.empty() ? 0.0 : penetration_obstacle_score(trace.path, trace.obstacles, sk);
  record("done", {{"goal_completion", trace.metrics.goal_completion}, {"frames", trace.frames_generated}});
  return trace;
}

RunTrace run_scenario(const ScenarioConfig& config, std::uint64_t seed, const RunOptions& options) {
  return run_scenario(prepare(config), seed, options);
}

namespace {

std::vector<std::vector<Vec3>> joint_tracks(const MotionClip& clip) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(clip.frames.size());
  for (const HumanState& s : clip.frames) out.push_back(forward_kinematics(s, Skeleton::canonical()));
  return out;
}

double track_divergence(const std::vector<std::vector<Vec3>>& a, const std::vector<std::vector<Vec3>>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double frame = 0.0;
    for (std::size_t j = 0; j < a[t].size(); ++j) frame += norm(a[t][j] - b[t][j]);
    sum += frame / static_cast<double>(a[t].size());
  }
  return sum / static_cast<double>(n);
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  for (std::thread& t : pool) t.join();
}

MetricsReport mean_of(const std::vector<MetricsReport>& rows, const std::string& setting) {
  MetricsReport m;
  m.scenario = "all";
  m.setting = setting;
  if (rows.empty()) return m;
  m.critic = rows.front().critic;
  m.planner = rows.front().planner;
  for (const MetricsReport& r : rows) {
    m.p_score += r.p_score;
    m.fs += r.fs;
    m.pos += r.pos;
    m.rds += r.rds;
    m.diversity += r.diversity;
    m.goal_completion += r.goal_completion;
    m.frames += r.frames;
    m.pruned += r.pruned;
    m.failed = m.failed || r.failed;
  }
  const double n = static_cast<double>(rows.size());
  m.p_score /= n;
  m.fs /= n;
  m.pos /= n;
  m.rds /= n;
  m.diversity /= n;
  m.goal_completion /= n;
  m.frames = static_cast<std::int64_t>(static_cast<double>(m.frames) / n);
  m.pruned = static_cast<std::int64_t>(static_cast<double>(m.pruned) / n);
  return m;
}

}  // namespace

SuiteReport run_suite(const std::vector<ScenarioConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      const std::vector<Ablation>& ablations, unsigned threads) {
  if (configs.empty()) throw ConfigError("suite needs at least one scenario");
  if (seeds.empty()) throw ConfigError("suite needs at least one seed");
  SuiteReport report;
  for (const Ablation& ab : ablations) {
    std::vector<MetricsReport> setting_rows;
    for (const ScenarioConfig& base : configs) {
      ScenarioConfig cfg = base;
      cfg.critic = ab.critic;
      cfg.planner = ab.planner;
      std::optional<PreparedScenario> prepared;
      std::string prepare_error;
      try {
        prepared = prepare(cfg);
      } catch (const Error& e) {
        prepare_error = e.what();
      }
      std::vector<MetricsReport> rows(seeds.size());
      std::vector<std::vector<std::vector<Vec3>>> tracks(seeds.size());
      parallel_for(seeds.size(), threads, [&](std::size_t i) {
        if (!prepared) {
          rows[i].scenario = cfg.id;
          rows[i].seed = seeds[i];
          rows[i].failed = true;
          rows[i].error = prepare_error;
          return;
        }
        RunTrace t = run_scenario(*prepared, seeds[i]);
        rows[i] = t.metrics;
        tracks[i] = joint_tracks(t.path);
      });
      double div = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < seeds.size(); ++a)
        for (std::size_t b = a + 1; b < seeds.size(); ++b) {
          div += track_divergence(tracks[a], tracks[b]);
          ++pairs;
        }
      for (MetricsReport& r : rows) {
        r.setting = ab.name;
        r.critic = ab.critic;
        r.planner = ab.planner;
        r.diversity = pairs ? div / static_cast<double>(pairs) : 0.0;
        report.rows.push_back(r);
        setting_rows.push_back(r);
      }
    }
    report.aggregate.push_back(mean_of(setting_rows, ab.name));
  }
  return report;
}

std::string SuiteReport::table_csv() const {
  std::ostringstream out;
  out << "setting,critic,planner,P-Score,FS,Diversity,POS,RDS,goal_completion\n";
  char buf[256];
  for (const MetricsReport& r : aggregate) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.setting.c_str(), r.critic, r.planner,
                  r.p_score, r.fs, r.diversity, r.pos, r.rds, r.goal_completion);
    out << buf;
  }
  return out.str();
}

ObstacleExperiment obstacle_experiment(const PreparedScenario& scenario, std::uint64_t seed, bool ignore_obstacles) {
  if (scenario.config.obstacles.empty()) throw ConfigError("obstacle experiment needs at least one obstacle");
  ObstacleExperiment x;
  RunOptions with;
  with.ignore_obstacles = ignore_obstacles;
  RunOptions without;
  without.inject_obstacles = false;
  x.with_obstacles = run_scenario(scenario, seed, with);
  x.without_obstacles = run_scenario(scenario, seed, without);
  const Skeleton& sk = Skeleton::canonical();
  std::vector<ObstacleSpec> all;
  for (const ObstacleInjection& o : scenario.config.obstacles) all.push_back(o.spec);
  x.pos = penetration_obstacle_score(x.with_obstacles.path, all, sk);
  x.rds = reaction_divergence(x.with_obstacles.path, x.without_obstacles.path, sk);
  x.with_obstacles.metrics.pos = x.pos;
  x.with_obstacles.metrics.rds = x.rds;
  return x;
}

std::string_view error_kind(const std::exception& e) {
  if (dynamic_cast<const TransportError*>(&e)) return "transport";
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const PlanningError*>(&e)) return "planning";
  if (dynamic_cast<const GeneratorError*>(&e)) return "generator";
  if (dynamic_cast<const GraphError*>(&e)) return "graph";
  if (dynamic_cast<const MetricError*>(&e)) return "metric";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const Error*>(&e)) return "internal";
  return "unexpected";
}

std::string clip_json(const MotionClip& clip) {
  Json j;
  j["fps"] = clip.fps;
  j["label"] = clip.label;
  Json frames = Json::array();
  for (const HumanState& s : clip.frames) frames.push_back(detail::to_json(s));
  j["frames"] = std::move(frames);
  return j.dump() + "\n";
}

MotionClip parse_clip_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("clip is not valid JSON: ") + e.what());
  }
  MotionClip clip;
  try {
    clip.fps = j.contains("fps") ? detail::integer<ConfigError>(j.at("fps"), "fps") : 30;
    clip.label = j.value("label", "");
    for (const Json& f : detail::field<ConfigError>(j, "frames")) clip.frames.push_back(detail::human_state<ConfigError>(f));
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  if (clip.frames.empty()) throw ParseError("clip has no frames");
  clip.nominal_frames = clip.frame_count();
  return clip;
}

}  // namespace hsi
