#include <regex>

#include "httplib.h"

#include "detail/json_io.hpp"
#include "hsi/agents.hpp"

namespace hsi {

using detail::Json;

namespace {

Json nav_summary(const NavMap& map) {
  Json layers = Json::array();
  for (const NavGrid& g : map.layers) {
    // Run lengths of alternating unwalkable/walkable cells, row-major from
    // (0, 0), starting with unwalkable.
    Json runs = Json::array();
    std::uint8_t cur = 0;
    std::int64_t run = 0;
    for (std::uint8_t b : g.walkable_bits) {
      if (b != cur) {
        runs.push_back(run);
        run = 0;
        cur = b;
      }
      ++run;
    }
    runs.push_back(run);
    layers.push_back({{"origin", {g.origin_x, g.origin_y}},
                      {"cell", g.cell},
                      {"nx", g.nx},
                      {"ny", g.ny},
                      {"ground_z", g.ground_z},
                      {"clearance", g.clearance},
                      {"walkable_runs", runs}});
  }
  Json links = Json::array();
  for (const VerticalLink& l : map.links)
    links.push_back({{"lower_layer", l.lower_layer},
                     {"upper_layer", l.upper_layer},
                     {"bottom", detail::to_json(l.bottom)},
                     {"top", detail::to_json(l.top)}});
  return {{"layers", layers}, {"links", links}};
}

Json polyline_json(const std::vector<Vec3>& pts) {
  Json out = Json::array();
  for (const Vec3& p : pts) out.push_back(detail::to_json(p));
  return out;
}

Json parse_body(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("response is not JSON: ") + e.what(), body);
  }
  if (!j.is_object()) throw SchemaError("response must be a JSON object", body);
  if (!j.contains("schema") || j.at("schema") != remote::kSchema)
    throw SchemaError(std::string("response schema must be '") + remote::kSchema + "'", body);
  return j;
}

std::vector<Vec3> polyline(const Json& j) {
  if (!j.is_array()) detail::fail("trajectory must be an array of points", j);
  std::vector<Vec3> pts;
  for (const Json& p : j) pts.push_back(detail::vec3(p, "waypoint"));
  return pts;
}

ActionChain chain_from(const Json& j, const std::string& body) {
  const Json& units = detail::field(j, "units");
  if (!units.is_array()) throw SchemaError("units must be an array", body);
  ActionChain chain;
  for (const Json& u : units) chain.units.push_back(detail::action_unit(u));
  return chain;
}

void validate_chain(const ActionChain& chain, const PlannerConfig& cfg, const std::string& body) {
  if (chain.units.empty()) throw ValidationError("action chain is empty", body);
  for (const ActionUnit& u : chain.units) {
    if (u.duration_frames < 0 || u.duration_frames > kMaxUnitFrames)
      throw ValidationError("unit '" + u.description + "' requests " + std::to_string(u.duration_frames) +
                                " frames; the bound is " + std::to_string(kMaxUnitFrames),
                            body);
    if (u.verb == Verb::custom_text) {
      if (u.duration_frames < 1) throw ValidationError("custom unit needs an explicit duration", body);
      continue;
    }
    if (nominal_duration(u, cfg.generator) > kMaxUnitFrames)
      throw ValidationError("unit '" + u.description + "' needs more than " + std::to_string(kMaxUnitFrames) +
                                " frames",
                            body);
  }
}

template <class F>
auto with_retries(int retries, F&& attempt) {
  for (int k = 0;; ++k) {
    try {
      return attempt();
    } catch (const BackendError&) {
      if (k >= retries) throw;
    }
  }
}

}  // namespace

namespace remote {

std::string navigate_request(const TaskSpec& task, const NavMap& map) {
  Json j;
  j["schema"] = kSchema;
  j["agent"] = "navigator";
  j["task"] = task.text;
  j["head"] = detail::to_json(task.start);
  j["scene_version"] = task.scene_version;
  Json goals = Json::array();
  for (const SubGoal& g : task.subgoals)
    goals.push_back({{"position", detail::to_json(g.position)},
                     {"facing", g.facing ? Json(*g.facing) : Json(nullptr)},
                     {"label", g.label},
                     {"layer", g.layer},
                     {"description", g.description}});
  j["annotations"] = {{"subgoals", goals}, {"interactive_tags", task.interactive_tags}};
  j["nav"] = nav_summary(map);
  return j.dump();
}

std::string plan_request(const HumanState& from, const PlanRequest& request) {
  if (!request.plan || request.milestone >= request.plan->milestones.size())
    throw PlanningError("plan request names no milestone");
  Json j;
  j["schema"] = kSchema;
  j["agent"] = "planner";
  j["head"] = detail::to_json(from);
  j["milestone"] = detail::to_json(request.plan->milestones[request.milestone]);
  j["trajectory"] = polyline_json(request.plan->trajectories.at(request.milestone));
  Json obstacles = Json::array();
  for (const ObstacleExtent& o : request.obstacles)
    obstacles.push_back(
        {{"tag", o.tag}, {"center", detail::to_json(o.center)}, {"radius", o.radius}, {"top", o.top}});
  j["obstacles"] = obstacles;
  j["history"] = {{"milestone_index", request.milestone},
                  {"milestones_total", request.plan->milestones.size()}};
  j["limits"] = {{"max_unit_frames", kMaxUnitFrames}, {"fps", request.config.generator.fps}};
  return j.dump();
}

std::string critique_request(const MotionClip& clip, const CritiqueContext& context) {
  Json j;
  j["schema"] = kSchema;
  j["agent"] = "critic";
  if (context.unit) j["unit"] = detail::to_json(*context.unit);
  j["trajectory"] = context.polyline ? polyline_json(*context.polyline) : Json::array();
  j["target"] = detail::to_json(context.target);
  Json roots = Json::array();
  for (const HumanState& s : clip.frames)
    roots.push_back({s.root_translation.x, s.root_translation.y, s.root_translation.z, s.root_yaw});
  j["clip"] = {{"fps", clip.fps},
               {"label", clip.label},
               {"nominal_frames", clip.nominal_frames},
               {"frame_count", clip.frame_count()},
               {"roots", roots}};
  j["history"] = {{"source_node", clip.source_node}, {"seed", clip.seed}};
  return j.dump();
}

KeyPlan decode_plan(const std::string& body, const TaskSpec& task, const NavMap& map) {
  const Json j = parse_body(body);
  KeyPlan plan;
  try {
    const Json& ms = detail::field(j, "milestones");
    const Json& ts = detail::field(j, "trajectories");
    if (!ms.is_array() || !ts.is_array()) detail::fail("milestones and trajectories must be arrays", j);
    for (const Json& m : ms) {
      Milestone out;
      out.position = detail::vec3(detail::field(m, "position"), "position");
      out.facing = detail::optional_number(m, "facing");
      out.label = detail::text(detail::field(m, "label"), "label");
      if (m.contains("layer")) out.layer = detail::integer(m.at("layer"), "layer");
      if (m.contains("description")) out.description = detail::text(m.at("description"), "description");
      plan.milestones.push_back(out);
    }
    for (const Json& t : ts) plan.trajectories.push_back(polyline(t));
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), body);
  }

  if (plan.milestones.empty()) throw ValidationError("plan has no milestones", body);
  if (plan.milestones.size() != plan.trajectories.size())
    throw ValidationError("plan needs one trajectory per milestone", body);
  Vec3 prev = ground_point(task.start, 0.94);
  for (std::size_t k = 0; k < plan.milestones.size(); ++k) {
    const Milestone& m = plan.milestones[k];
    const std::vector<Vec3>& line = plan.trajectories[k];
    if (m.layer < 0 || m.layer >= static_cast<int>(map.layers.size()))
      throw ValidationError("milestone '" + m.label + "' names a missing layer", body);
    const NavGrid& nav = map.layers[m.layer];
    const auto [ci, cj] = nav.cell_of(m.position.x, m.position.y);
    if (!nav.walkable(ci, cj)) throw ValidationError("milestone '" + m.label + "' is not reachable", body);
    if (line.size() < 2) throw ValidationError("trajectory " + std::to_string(k) + " has fewer than 2 points", body);
    if (horizontal_distance(line.front(), prev) > 2 * nav.cell)
      throw ValidationError("trajectory " + std::to_string(k) + " does not start at the previous position", body);
    if (horizontal_distance(line.back(), m.position) > 2 * nav.cell)
      throw ValidationError("trajectory " + std::to_string(k) + " does not end at its milestone", body);
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const Vec3 &a = line[s], &b = line[s + 1];
      if (std::fabs(a.z - b.z) > 1e-6) {
        const bool linked = std::any_of(map.links.begin(), map.links.end(), [&](const VerticalLink& l) {
          return horizontal_distance(l.bottom, a) < 0.5 && horizontal_distance(l.bottom, b) < 0.5;
        });
        if (!linked) throw ValidationError("vertical segment without a ladder or stairs link", body);
        continue;
      }
      const NavGrid& layer = map.layers[layer_for_height(map, a.z)];
      const auto [ai, aj] = layer.cell_of(a.x, a.y);
      const auto [bi, bj] = layer.cell_of(b.x, b.y);
      // Link landings may sit just off the walkable area; only fully walkable
      // segments are checked cell by cell.
      if (layer.walkable(ai, aj) && layer.walkable(bi, bj) && !line_of_sight(layer, a, b))
        throw ValidationError("trajectory " + std::to_string(k) + " crosses blocked cells", body);
    }
    prev = m.position;
  }
  return plan;
}

ActionChain decode_chain(const std::string& body, const PlannerConfig& config) {
  const Json j = parse_body(body);
  ActionChain chain;
  try {
    chain = chain_from(j, body);
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), body);
  }
  validate_chain(chain, config, body);
  return chain;
}

Critique decode_critique(const std::string& body, const MotionClip& clip) {
  const Json j = parse_body(body);
  Critique c;
  try {
    const std::string verdict = detail::text(detail::field(j, "verdict"), "verdict");
    if (verdict == "accept") c.verdict = Verdict::accept;
    else if (verdict == "backtrack") c.verdict = Verdict::backtrack;
    else if (verdict == "replan") c.verdict = Verdict::replan;
    else detail::fail("unknown verdict '" + verdict + "'", j);
    c.kept_frame = detail::integer(detail::field(j, "kept_frame"), "kept_frame");
    c.corrective_yaw = detail::number(detail::field(j, "corrective_yaw"), "corrective_yaw");
    if (j.contains("camera")) {
      const Json& cam = j.at("camera");
      c.camera.position = detail::vec3(detail::field(cam, "position"), "camera position");
      c.camera.look_at = detail::vec3(detail::field(cam, "look_at"), "camera look_at");
    }
    if (j.contains("adjusted_chain") && !j.at("adjusted_chain").is_null())
      c.adjusted_chain = chain_from(j.at("adjusted_chain"), body);
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), body);
  }
  if (c.kept_frame < 0 || c.kept_frame > clip.frame_count())
    throw ValidationError("kept frame " + std::to_string(c.kept_frame) + " outside the clip", body);
  if (!(c.corrective_yaw > -std::numbers::pi && c.corrective_yaw <= std::numbers::pi))
    throw ValidationError("corrective yaw outside (-pi, pi]", body);
  if (c.verdict == Verdict::accept && c.kept_frame != clip.frame_count())
    throw ValidationError("accept must keep the last frame", body);
  if (c.verdict == Verdict::replan && !c.adjusted_chain)
    throw ValidationError("replan verdict without an adjusted chain", body);
  if (c.adjusted_chain) validate_chain(*c.adjusted_chain, PlannerConfig{}, body);
  return c;
}

}  // namespace remote

RemoteBackend::RemoteBackend(Options options) : options_(std::move(options)) {
  static const std::regex url(R"(^http://([^:/]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint, m, url))
    throw ConfigError("remote endpoint must look like http://host[:port]/path, got '" + options_.endpoint + "'");
  host_ = m[1];
  port_ = m[2].matched ? std::stoi(m[2]) : 80;
  path_ = m[3].matched ? std::string(m[3]) : "/";
  if (options_.retries < 0) throw ConfigError("retries must be non-negative");
}

std::string RemoteBackend::post(const std::string& body) {
  httplib::Client client(host_, port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  auto res = client.Post(path_, body, "application/json");
  if (!res) throw TransportError("request to " + options_.endpoint + " failed: " + httplib::to_string(res.error()), "");
  if (res->status != 200)
    throw TransportError("endpoint answered HTTP " + std::to_string(res->status), res->body);
  return res->body;
}

KeyPlan RemoteBackend::navigate(const TaskSpec& task, const NavMap& map) {
  const std::string request = remote::navigate_request(task, map);
  return with_retries(options_.retries, [&] { return remote::decode_plan(post(request), task, map); });
}

ActionChain RemoteBackend::plan_chain(const HumanState& from, const PlanRequest& request) {
  const std::string body = remote::plan_request(from, request);
  return with_retries(options_.retries, [&] { return remote::decode_chain(post(body), request.config); });
}

Critique RemoteBackend::critique(const MotionClip& clip, const CritiqueContext& context) {
  const std::string body = remote::critique_request(clip, context);
  return with_retries(options_.retries, [&] { return remote::decode_critique(post(body), clip); });
}

}  // namespace hsi
