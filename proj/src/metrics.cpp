#include "hsi/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "hsi/error.hpp"

namespace hsi {

namespace {

double penetration(const MotionClip& clip, const SceneMesh& scene, const Skeleton& skeleton,
                   std::vector<std::string>* warnings) {
  if (clip.frames.empty()) throw MetricError("penetration needs a non-empty clip");
  if (warnings)
    for (const SceneObject& o : scene.objects())
      if (!o.closed) warnings->push_back("object '" + o.name + "' is open and was excluded");
  double total = 0.0;
  for (const HumanState& s : clip.frames) {
    const std::vector<Vec3> pts = body_points(s, skeleton);
    total += static_cast<double>(count_inside_closed(scene, pts)) / static_cast<double>(pts.size());
  }
  return total / static_cast<double>(clip.frames.size());
}

}  // namespace

double penetration_score(const MotionClip& clip, const SceneMesh& scene, const Skeleton& skeleton,
                         std::vector<std::string>* warnings) {
  return penetration(clip, scene, skeleton, warnings);
}

double penetration_obstacle_score(const MotionClip& clip, const std::vector<ObstacleSpec>& obstacles,
                                  const Skeleton& skeleton, std::vector<std::string>* warnings) {
  SceneMesh merged;
  for (const ObstacleSpec& o : obstacles) merged = merge_meshes(merged, posed_obstacle(o));
  return penetration(clip, merged, skeleton, warnings);
}

double foot_sliding(const MotionClip& clip, const Skeleton& skeleton, double contact_height) {
  if (clip.frames.size() < 2) throw MetricError("foot sliding needs at least two frames");
  double sum = 0.0;
  std::size_t contacts = 0;
  std::vector<Vec3> prev = forward_kinematics(clip.frames.front(), skeleton);
  for (std::size_t t = 1; t < clip.frames.size(); ++t) {
    std::vector<Vec3> cur = forward_kinematics(clip.frames[t], skeleton);
    for (int foot : {kLeftAnkle, kRightAnkle}) {
      if (cur[foot].z >= contact_height) continue;
      sum += horizontal_distance(cur[foot], prev[foot]);
      ++contacts;
    }
    prev = std::move(cur);
  }
  return contacts ? sum / static_cast<double>(contacts) : 0.0;
}

double reaction_divergence(const MotionClip& a, const MotionClip& b, const Skeleton& skeleton) {
  if (a.frames.empty() || b.frames.empty()) throw MetricError("reaction divergence needs non-empty clips");
  if (a.frames.front().shape != b.frames.front().shape)
    throw MetricError("clips use different body shapes");
  const std::size_t n = std::min(a.frames.size(), b.frames.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<Vec3> pa = forward_kinematics(a.frames[t], skeleton);
    const std::vector<Vec3> pb = forward_kinematics(b.frames[t], skeleton);
    double frame = 0.0;
    for (std::size_t j = 0; j < pa.size(); ++j) frame += norm(pa[j] - pb[j]);
    sum += frame / static_cast<double>(pa.size());
  }
  return sum / static_cast<double>(n);
}

double diversity(const std::vector<MotionClip>& clips, const Skeleton& skeleton) {
  if (clips.size() < 2) throw MetricError("diversity needs at least two clips");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < clips.size(); ++i)
    for (std::size_t j = i + 1; j < clips.size(); ++j) {
      sum += reaction_divergence(clips[i], clips[j], skeleton);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

double goal_completion(const InteractionGraph& graph, const GoalTolerance& tolerance) {
  const std::vector<NodeId>& keys = graph.key_order();
  if (keys.size() <= 1) return 1.0;
  const DirectedPath path = graph.current_path();
  std::size_t reached = 0;
  for (std::size_t k = 1; k < keys.size(); ++k) {
    const GraphNode& n = graph.node(keys[k]);
    const bool on_path = std::find(path.nodes.begin(), path.nodes.end(), n.id) != path.nodes.end();
    if (on_path && n.status == NodeStatus::reached && milestone_reached(n.human, *n.milestone, tolerance)) ++reached;
  }
  return static_cast<double>(reached) / static_cast<double>(keys.size() - 1);
}

MotionClip path_clip(const InteractionGraph& graph) {
  MotionClip out;
  out.label = "path";
  out.source_node = graph.initial();
  out.frames.push_back(graph.node(graph.initial()).human);
  for (EdgeId e : graph.current_path().edges) {
    const MotionClip& c = *graph.edge(e).clip;
    out.fps = c.fps;
    out.frames.insert(out.frames.end(), c.frames.begin() + 1, c.frames.end());
  }
  out.nominal_frames = out.frame_count();
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsReport>& rows) {
  std::ostringstream out;
  out << "scenario,seed,setting,critic,planner,p_score,fs,diversity,pos,rds,goal_completion,frames,pruned,failed,error\n";
  for (const MetricsReport& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.scenario << ',' << r.seed << ',' << r.setting << ',' << r.critic << ',' << r.planner << ','
        << fmt(r.p_score) << ',' << fmt(r.fs) << ',' << fmt(r.diversity) << ',' << fmt(r.pos) << ',' << fmt(r.rds)
        << ',' << fmt(r.goal_completion) << ',' << r.frames << ',' << r.pruned << ',' << r.failed << ',' << err
        << '\n';
  }
  return out.str();
}

std::string metrics_json(const std::vector<MetricsReport>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const MetricsReport& r : rows) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["setting"] = r.setting;
    j["critic"] = r.critic;
    j["planner"] = r.planner;
    j["p_score"] = r.p_score;
    j["fs"] = r.fs;
    j["diversity"] = r.diversity;
    j["pos"] = r.pos;
    j["rds"] = r.rds;
    j["goal_completion"] = r.goal_completion;
    j["frames"] = r.frames;
    j["pruned"] = r.pruned;
    j["failed"] = r.failed;
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace hsi
