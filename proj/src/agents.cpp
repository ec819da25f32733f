#include "hsi/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

#include "hsi/error.hpp"

namespace hsi {

namespace {

constexpr double kPi = std::numbers::pi;

std::string describe(const Vec3& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.2f, %.2f, %.2f)", p.x, p.y, p.z);
  return buf;
}

Vec3 with_z(Vec3 v, double z) {
  v.z = z;
  return v;
}

// Closest point on segment ab to p.
Vec3 closest_on_segment(const Vec3& a, const Vec3& b, const Vec3& p, double* param = nullptr) {
  const Vec3 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  if (param) *param = t;
  return a + d * t;
}

double horizontal_segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  return horizontal_distance(closest_on_segment(with_z(a, 0), with_z(b, 0), with_z(p, 0)), p);
}

bool is_vertical(const Vec3& a, const Vec3& b) {
  return std::fabs(b.z - a.z) > 0.3 && horizontal_distance(a, b) < 0.3;
}

bool is_seated(const HumanState& s) { return s.angle(kLeftHip, 1) < -1.0 && s.angle(kLeftKnee, 1) > 1.0; }

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::backtrack: return "backtrack";
    case Verdict::replan: return "replan";
  }
  return "?";
}

bool line_of_sight(const NavGrid& nav, const Vec3& a, const Vec3& b) {
  const double len = horizontal_distance(a, b);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (nav.cell / 8.0))));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const auto [i, j] = nav.cell_of(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
    if (!nav.walkable(i, j)) return false;
  }
  return true;
}

std::vector<Vec3> find_path(const NavGrid& nav, const Vec3& from, const Vec3& to) {
  const auto [si, sj] = nav.cell_of(from.x, from.y);
  const auto [gi, gj] = nav.cell_of(to.x, to.y);
  if (!nav.walkable(si, sj)) throw PlanningError("start " + describe(from) + " is not walkable");
  if (!nav.walkable(gi, gj)) throw PlanningError("goal " + describe(to) + " is not walkable");

  const auto idx = [&nav](int i, int j) { return static_cast<std::size_t>(j) * nav.nx + i; };
  const std::size_t n = static_cast<std::size_t>(nav.nx) * nav.ny;
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> came(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  const auto h = [&](int i, int j) {
    const double dx = std::abs(i - gi), dy = std::abs(j - gj);
    return std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy);
  };
  using Entry = std::tuple<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[idx(si, sj)] = 0.0;
  open.emplace(h(si, sj), idx(si, sj));

  static constexpr int kDi[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  bool found = false;
  while (!open.empty()) {
    const auto [f, c] = open.top();
    open.pop();
    if (closed[c]) continue;
    closed[c] = 1;
    const int i = static_cast<int>(c % nav.nx), j = static_cast<int>(c / nav.nx);
    if (i == gi && j == gj) {
      found = true;
      break;
    }
    for (int k = 0; k < 8; ++k) {
      const int ni = i + kDi[k], nj = j + kDj[k];
      if (!nav.walkable(ni, nj)) continue;
      if (k >= 4 && (!nav.walkable(i + kDi[k], j) || !nav.walkable(i, j + kDj[k]))) continue;
      const double cost = g[c] + (k >= 4 ? std::numbers::sqrt2 : 1.0);
      const std::size_t nc = idx(ni, nj);
      if (cost < g[nc]) {
        g[nc] = cost;
        came[nc] = static_cast<std::int64_t>(c);
        open.emplace(cost + h(ni, nj), nc);
      }
    }
  }
  if (!found) throw PlanningError("no walkable route from " + describe(from) + " to " + describe(to));

  std::vector<Vec3> cells;
  for (std::int64_t c = static_cast<std::int64_t>(idx(gi, gj)); c >= 0; c = came[static_cast<std::size_t>(c)]) {
    const auto cc = static_cast<std::size_t>(c);
    cells.push_back(nav.center(static_cast<int>(cc % nav.nx), static_cast<int>(cc / nav.nx)));
  }
  std::reverse(cells.begin(), cells.end());
  cells.front() = with_z(from, nav.ground_z);
  if (cells.size() == 1) cells.push_back(with_z(to, nav.ground_z));
  else cells.back() = with_z(to, nav.ground_z);

  std::vector<Vec3> smooth{cells.front()};
  std::size_t k = 0;
  while (k + 1 < cells.size()) {
    std::size_t next = k + 1;
    for (std::size_t j = cells.size() - 1; j > k + 1; --j)
      if (line_of_sight(nav, cells[k], cells[j])) {
        next = j;
        break;
      }
    smooth.push_back(cells[next]);
    k = next;
  }
  return smooth;
}

int layer_for_height(const NavMap& map, double z) {
  if (map.layers.empty()) throw PlanningError("navigation map has no layers");
  int best = 0;
  for (int l = 1; l < static_cast<int>(map.layers.size()); ++l)
    if (std::fabs(map.layers[l].ground_z - z) < std::fabs(map.layers[best].ground_z - z)) best = l;
  return best;
}

ObstacleExtent obstacle_extent(const SceneMesh& posed, const std::string& tag) {
  ObstacleExtent e;
  e.tag = tag;
  const Vec3 lo = posed.bbox_min(), hi = posed.bbox_max();
  e.center = {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, lo.z};
  for (const Vec3& v : posed.vertices()) e.radius = std::max(e.radius, horizontal_distance(v, e.center));
  e.top = hi.z;
  return e;
}

KeyPlan navigate(const TaskSpec& task, const NavMap& map, double pelvis_height) {
  if (task.text.empty()) throw PlanningError("task text is empty");
  if (task.subgoals.empty()) throw PlanningError("task has no sub-goals");
  KeyPlan plan;
  Vec3 cur = ground_point(task.start, pelvis_height);
  int layer = layer_for_height(map, cur.z);
  cur.z = map.layers[layer].ground_z;
  std::string prev_label = "start";

  for (const SubGoal& goal : task.subgoals) {
    if (goal.layer < 0 || goal.layer >= static_cast<int>(map.layers.size()))
      throw PlanningError("sub-goal '" + goal.label + "' names missing layer " + std::to_string(goal.layer));
    const Vec3 target = with_z(goal.position, map.layers[goal.layer].ground_z);
    std::vector<Vec3> pts;
    try {
      if (goal.layer == layer) {
        pts = find_path(map.layers[layer], cur, target);
      } else {
        const auto link = std::find_if(map.links.begin(), map.links.end(), [&](const VerticalLink& l) {
          return (l.lower_layer == layer && l.upper_layer == goal.layer) ||
                 (l.upper_layer == layer && l.lower_layer == goal.layer);
        });
        if (link == map.links.end())
          throw PlanningError("no vertical link between layers " + std::to_string(layer) + " and " +
                              std::to_string(goal.layer));
        const NavGrid& lower = map.layers[link->lower_layer];
        const NavGrid& upper = map.layers[link->upper_layer];
        const Vec3 bottom = with_z(link->bottom, lower.ground_z);
        const Vec3 landing = with_z(link->bottom, upper.ground_z);
        const Vec3 top = with_z(link->top, upper.ground_z);
        if (link->lower_layer == layer) {
          pts = find_path(lower, cur, bottom);
          pts.push_back(landing);
          const auto rest = find_path(upper, top, target);
          pts.insert(pts.end(), rest.begin(), rest.end());
        } else {
          pts = find_path(upper, cur, top);
          pts.push_back(landing);
          const auto rest = find_path(lower, bottom, target);
          pts.insert(pts.end(), rest.begin(), rest.end());
        }
      }
    } catch (const PlanningError& e) {
      throw PlanningError("cannot route from '" + prev_label + "' to '" + goal.label + "': " + e.what());
    }
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec3& a, const Vec3& b) { return norm(a - b) < 1e-9; }),
              pts.end());
    if (pts.size() == 1) pts.push_back(pts.front());
    plan.milestones.push_back(Milestone{target, goal.facing, goal.label, goal.layer, goal.description});
    plan.trajectories.push_back(std::move(pts));
    cur = target;
    layer = goal.layer;
    prev_label = goal.label;
  }
  return plan;
}

namespace {

std::optional<Verb> milestone_verb(const std::string& label) {
  if (label == "arrive" || label == "climb") return std::nullopt;
  if (label == "sit") return Verb::sit;
  if (label == "stand") return Verb::stand;
  if (label == "reach") return Verb::reach;
  if (label == "idle") return Verb::idle;
  throw UnsupportedAction("milestone label '" + label + "' has no action mapping");
}

struct ChainBuilder {
  const PlannerConfig& cfg;
  ActionChain chain;
  Vec3 pos;
  double yaw;

  ActionUnit& add(Verb verb, const Vec3& target, double target_yaw, std::string description) {
    ActionUnit u;
    u.verb = verb;
    u.anchor_position = pos;
    u.anchor_yaw = yaw;
    u.target = target;
    u.target_yaw = wrap_angle(target_yaw);
    u.description = std::move(description);
    chain.units.push_back(std::move(u));
    pos = target;
    yaw = wrap_angle(target_yaw);
    return chain.units.back();
  }

  void turn(double heading, double threshold) {
    if (std::fabs(wrap_angle(heading - yaw)) > threshold)
      add(Verb::turn_to, pos, heading, "turn to " + std::to_string(static_cast<int>(std::lround(rad_to_deg(heading)))) + " deg");
  }

  void walk(const Vec3& a, const Vec3& b, const std::vector<ObstacleExtent>& obstacles) {
    const double length = horizontal_distance(a, b);
    if (length < 1e-9) return;
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    turn(heading, cfg.turn_threshold);
    const Vec3 u{(b.x - a.x) / length, (b.y - a.y) / length, 0.0};

    struct Span {
      double lo, hi;
      std::optional<ObstacleExtent> obstacle;
    };
    std::vector<Span> spans;
    if (!cfg.ignore_obstacles) {
      for (const ObstacleExtent& o : obstacles) {
        if (std::fabs(o.center.z - a.z) > 0.5) continue;
        if (horizontal_segment_distance(a, b, o.center) - o.radius > cfg.obstacle_distance) continue;
        const double along = (o.center.x - a.x) * u.x + (o.center.y - a.y) * u.y;
        const double half = o.radius + cfg.step_margin;
        const double lo = std::max(0.0, along - half), hi = std::min(length, along + half);
        if (hi <= lo) continue;
        spans.push_back({lo, hi, o});
      }
      std::sort(spans.begin(), spans.end(), [](const Span& x, const Span& y) { return x.lo < y.lo; });
      std::vector<Span> merged;
      for (const Span& s : spans) {
        if (!merged.empty() && s.lo <= merged.back().hi) {
          Span& m = merged.back();
          m.hi = std::max(m.hi, s.hi);
          ObstacleExtent& o = *m.obstacle;
          const double mid = (m.lo + m.hi) / 2;
          o.tag += "+" + s.obstacle->tag;
          o.top = std::max(o.top, s.obstacle->top);
          o.center = with_z(a + u * mid, std::min(o.center.z, s.obstacle->center.z));
          o.radius = std::max(0.0, (m.hi - m.lo) / 2 - cfg.step_margin);
        } else {
          merged.push_back(s);
        }
      }
      spans = std::move(merged);
    }

    const auto point_at = [&](double d) { return a + (b - a) * (d / length); };
    const auto plain = [&](double from, double to) {
      const double len = to - from;
      if (len < 1e-9) return;
      const int pieces = std::max(1, static_cast<int>(std::ceil(len / cfg.max_walk - 1e-9)));
      for (int k = 1; k <= pieces; ++k) {
        const Vec3 g = point_at(from + len * k / pieces);
        add(Verb::walk_to, g + Vec3{0, 0, cfg.pelvis_height}, heading, "walk to " + describe(g));
      }
    };
    double at = 0.0;
    for (const Span& s : spans) {
      plain(at, s.lo);
      const Vec3 g = point_at(s.hi);
      ActionUnit& unit = add(Verb::step_over, g + Vec3{0, 0, cfg.pelvis_height}, heading, "step over " + s.obstacle->tag);
      unit.obstacle = s.obstacle;
      at = s.hi;
    }
    plain(at, length);
  }

  void climb(const Vec3& a, const Vec3& b) {
    const double length = norm(b - a);
    const int pieces = std::max(1, static_cast<int>(std::ceil(length / cfg.max_climb - 1e-9)));
    for (int k = 1; k <= pieces; ++k) {
      const Vec3 g = a + (b - a) * (static_cast<double>(k) / pieces);
      add(Verb::climb_segment, g + Vec3{0, 0, cfg.pelvis_height}, yaw, "climb to height " + describe(g));
    }
  }
};

}  // namespace

ActionChain plan_chain(const HumanState& from, const PlanRequest& request) {
  if (!request.plan || request.milestone >= request.plan->milestones.size())
    throw PlanningError("plan request names no milestone");
  const PlannerConfig& cfg = request.config;
  const Milestone& goal = request.plan->milestones[request.milestone];
  const std::vector<Vec3>& line = request.plan->trajectories.at(request.milestone);
  const std::optional<Verb> verb = milestone_verb(goal.label);

  ChainBuilder b{cfg, {}, from.root_translation, from.root_yaw};
  const Vec3 ground = ground_point(from, cfg.pelvis_height);

  // Resume the polyline from the closest point to the current position.
  std::size_t seg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s + 1 < line.size(); ++s) {
    const double d = norm(closest_on_segment(line[s], line[s + 1], ground) - ground);
    if (d < best - 1e-12) {
      best = d;
      seg = s;
    }
  }
  std::vector<Vec3> route{line.size() > 1 ? closest_on_segment(line[seg], line[seg + 1], ground) : line.front()};
  route.front() = with_z(ground, route.front().z);
  for (std::size_t k = seg + 1; k < line.size(); ++k)
    if (norm(line[k] - route.back()) > 1e-6) route.push_back(line[k]);

  if (is_seated(from) && verb != Verb::sit) {
    b.add(Verb::stand, with_z(b.pos, route.front().z + cfg.pelvis_height), b.yaw, "stand up");
  }

  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    if (is_vertical(route[k], route[k + 1])) b.climb(route[k], route[k + 1]);
    else b.walk(route[k], route[k + 1], request.obstacles);
  }
  if (goal.facing) b.turn(*goal.facing, cfg.facing_threshold);

  if (verb == Verb::sit) {
    if (!is_seated(from) || !b.chain.units.empty())
      b.add(Verb::sit, with_z(b.pos, goal.position.z + cfg.pelvis_height - cfg.generator.sit_depth), b.yaw, "sit down")
          .duration_frames = cfg.generator.sit_frames;
  } else if (verb == Verb::stand) {
    if (is_seated(from))
      b.add(Verb::stand, with_z(b.pos, goal.position.z + cfg.pelvis_height), b.yaw, "stand up").duration_frames =
          cfg.generator.stand_frames;
  } else if (verb == Verb::reach) {
    b.add(Verb::reach, b.pos, b.yaw, goal.description.empty() ? "reach" : goal.description).duration_frames =
        cfg.generator.reach_frames;
  } else if (verb == Verb::idle) {
    b.add(Verb::idle, b.pos, b.yaw, "idle").duration_frames = cfg.generator.idle_frames;
  }
  if (b.chain.units.empty())
    b.add(Verb::idle, b.pos, b.yaw, "hold position").duration_frames = cfg.arrive_idle_frames;

  for (const ActionUnit& u : b.chain.units)
    if (nominal_duration(u, cfg.generator) > kMaxUnitFrames)
      throw PlanningError("planned unit '" + u.description + "' exceeds " + std::to_string(kMaxUnitFrames) +
                          " frames");
  return b.chain;
}

double deviation_score(const HumanState& state, const CritiqueContext& ctx, const CriticConfig& cfg) {
  const Vec3 g = ground_point(state, cfg.pelvis_height);
  double dist = 0.0;
  if (ctx.polyline && !ctx.polyline->empty()) {
    const std::vector<Vec3>& line = *ctx.polyline;
    double level = std::numeric_limits<double>::infinity();
    double any = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + 1 < line.size(); ++s) {
      const double zlo = std::min(line[s].z, line[s + 1].z) - 0.75, zhi = std::max(line[s].z, line[s + 1].z) + 0.75;
      if (g.z >= zlo && g.z <= zhi) level = std::min(level, horizontal_segment_distance(line[s], line[s + 1], g));
      any = std::min(any, norm(closest_on_segment(line[s], line[s + 1], g) - g));
    }
    if (line.size() == 1) any = norm(line.front() - g);
    dist = std::isfinite(level) ? level : any;
  }
  const double heading = ctx.unit ? std::fabs(wrap_angle(state.root_yaw - ctx.unit->target_yaw)) : 0.0;
  double penetration = 0.0;
  if (ctx.scene && !ctx.scene->empty()) {
    const std::vector<Vec3> pts = body_points(state, Skeleton::canonical());
    penetration = static_cast<double>(count_inside_closed(*ctx.scene, pts)) / static_cast<double>(pts.size());
  }
  return cfg.w_distance * dist + cfg.w_heading * heading + cfg.w_penetration * penetration;
}

Critique critique(const MotionClip& clip, const CritiqueContext& ctx, const CriticConfig& cfg) {
  if (clip.frames.empty()) throw ContractError("cannot critique an empty clip");
  if (cfg.stride < 1) throw ConfigError("critic stride must be positive");
  const int last = clip.frame_count();
  // Frames past the planned segment are not part of the requested action.
  const int eligible = clip.nominal_frames > 0 ? std::min(last, clip.nominal_frames) : last;

  Critique c;
  int kept = -1;
  for (int i = eligible; i >= 1; i -= cfg.stride)
    if (deviation_score(clip.frames[static_cast<std::size_t>(i)], ctx, cfg) <= cfg.threshold) {
      kept = i;
      break;
    }
  const HumanState& at = clip.frames[static_cast<std::size_t>(std::max(kept, 0))];
  if (ctx.scene) c.camera = place_camera(at, ctx.target + Vec3{0, 0, 0.5}, *ctx.scene);
  if (kept < 0) {
    c.verdict = Verdict::replan;
    c.kept_frame = 0;
    c.adjusted_chain = ctx.replan ? plan_chain(clip.frames.front(), *ctx.replan) : ActionChain{};
    return c;
  }
  c.kept_frame = kept;
  c.verdict = kept == last ? Verdict::accept : Verdict::backtrack;
  if (ctx.unit) {
    const double error = wrap_angle(ctx.unit->target_yaw - at.root_yaw);
    c.corrective_yaw = std::fabs(error) > cfg.correction_threshold ? error : 0.0;
  }
  return c;
}

CameraPose place_camera(const HumanState& head, const Vec3& target, const SceneMesh& scene,
                        const CameraConfig& cfg) {
  const Vec3 pelvis = head.root_translation;
  const Vec3 top = pelvis + Vec3{0, 0, cfg.head_height};
  const Vec3 mid = (pelvis + target) / 2.0;
  const double base = std::min(pelvis.z, target.z);
  const auto visible = [&scene](const Vec3& from, const Vec3& to) {
    const Vec3 d = to - from;
    const double len = norm(d);
    if (len < 1e-9) return true;
    const auto hit = raycast(scene, from, d);
    return !hit || *hit >= len - 1e-3;
  };

  CameraPose best;
  double best_angle = -1.0;
  for (int a = 0; a < cfg.azimuths; ++a) {
    const double theta = 2.0 * kPi * a / cfg.azimuths;
    const Vec3 cam{mid.x + cfg.radius * std::cos(theta), mid.y + cfg.radius * std::sin(theta), base + cfg.height};
    if (!visible(cam, top) || !visible(cam, pelvis) || !visible(cam, target)) continue;
    const Vec3 u = pelvis - cam, v = target - cam;
    const double nu = norm(u), nv = norm(v);
    const double angle = nu > 0 && nv > 0 ? std::acos(std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0)) : 0.0;
    if (angle > best_angle + 1e-12) {
      best_angle = angle;
      best = CameraPose{cam, mid, a, false};
    }
  }
  if (best_angle < 0) best = CameraPose{mid + Vec3{0, 0, cfg.overhead_height}, mid, -1, true};
  return best;
}

MotionClip correct_clip(const MotionClip& clip, int kept_frame, double yaw, int window) {
  if (kept_frame < 0 || kept_frame > clip.frame_count())
    throw ContractError("kept frame " + std::to_string(kept_frame) + " outside clip");
  MotionClip out = clip;
  out.frames.resize(static_cast<std::size_t>(kept_frame) + 1);
  out.nominal_frames = std::min(clip.nominal_frames, kept_frame);
  const int m = std::min(kept_frame, window);
  if (yaw != 0.0 && m > 0)
    for (int j = 1; j <= m; ++j) {
      HumanState& s = out.frames[static_cast<std::size_t>(kept_frame - m + j)];
      s.root_yaw = wrap_angle(s.root_yaw + yaw * j / m);
    }
  return out;
}

Correction apply_correction(InteractionGraph& graph, const MotionClip& clip, const Critique& critique,
                            const ActionUnit& unit, int scene_version, NodeId candidate, int window) {
  if (critique.verdict == Verdict::replan) throw ContractError("a replan verdict must go back to the planner");
  const int i = critique.kept_frame;
  Correction out;
  out.kept = correct_clip(clip, i, critique.corrective_yaw, window);

  const DirectedPath path = graph.current_path();
  const auto it = std::find(path.nodes.begin(), path.nodes.end(), clip.source_node);
  if (it == path.nodes.end() || it + 1 == path.nodes.end())
    throw ContractError("clip has not been added to the graph after its source node");
  const auto pos = static_cast<std::size_t>(it - path.nodes.begin());

  // Edge boundaries in clip frames.
  const int m = std::min(i, window);
  int cumulative = 0;
  for (std::size_t k = pos; k < path.edges.size(); ++k) {
    const MotionClip& part = *graph.edge(path.edges[k]).clip;
    const int start = cumulative;
    cumulative += part.frame_count();
    if (cumulative != i) continue;
    if (critique.corrective_yaw != 0.0 && part.frame_count() < m) break;
    out.pruned = graph.prune_after(path.nodes[k + 1]);
    if (critique.corrective_yaw != 0.0) {
      MotionClip amended = part;
      amended.frames.assign(out.kept.frames.begin() + start, out.kept.frames.end());
      amended.nominal_frames = std::min(part.nominal_frames, amended.frame_count());
      graph.amend_head(amended);
    }
    out.head = graph.head();
    return out;
  }

  out.pruned = graph.prune_after(clip.source_node);
  if (i >= 1) graph.extend(unit, out.kept, scene_version, candidate);
  out.head = graph.head();
  return out;
}

KeyPlan RuleBackend::navigate(const TaskSpec& task, const NavMap& map) {
  return hsi::navigate(task, map, critic_.pelvis_height);
}

ActionChain RuleBackend::plan_chain(const HumanState& from, const PlanRequest& request) {
  return hsi::plan_chain(from, request);
}

Critique RuleBackend::critique(const MotionClip& clip, const CritiqueContext& context) {
  return hsi::critique(clip, context, critic_);
}

}  // namespace hsi
