#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsi/graph.hpp"
#include "hsi/kinematics.hpp"
#include "hsi/scene.hpp"

namespace hsi {

// Mean over frames of the fraction of body points strictly inside a closed
// scene object. Open objects are skipped and named in *warnings.
double penetration_score(const MotionClip& clip, const SceneMesh& scene, const Skeleton& skeleton,
                         std::vector<std::string>* warnings = nullptr);

// Mean horizontal displacement of an ankle over the frames where it is below
// contact_height, both feet pooled. Zero without contact frames.
double foot_sliding(const MotionClip& clip, const Skeleton& skeleton, double contact_height = 0.05);

// penetration_score restricted to the posed obstacles.
double penetration_obstacle_score(const MotionClip& clip, const std::vector<ObstacleSpec>& obstacles,
                                  const Skeleton& skeleton, std::vector<std::string>* warnings = nullptr);

// Mean per-joint world distance over the common prefix of two clips.
double reaction_divergence(const MotionClip& a, const MotionClip& b, const Skeleton& skeleton);

// Mean reaction_divergence over all unordered pairs.
double diversity(const std::vector<MotionClip>& clips, const Skeleton& skeleton);

// Fraction of planned milestones whose key node is on the executed path and
// satisfies the tolerance.
double goal_completion(const InteractionGraph& graph, const GoalTolerance& tolerance);

// Frames of every edge on the executed path joined into one clip.
MotionClip path_clip(const InteractionGraph& graph);

struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string setting;  // ablation row, e.g. "full", "no_critic"
  bool critic = true;
  bool planner = true;
  double p_score = 0.0;
  double fs = 0.0;
  double pos = 0.0;
  double rds = 0.0;
  double diversity = 0.0;
  double goal_completion = 0.0;
  std::int64_t frames = 0;
  std::int64_t pruned = 0;
  bool failed = false;
  std::string error;
};

// Comma-separated rows with a header line, and a JSON array of records.
std::string metrics_csv(const std::vector<MetricsReport>& rows);
std::string metrics_json(const std::vector<MetricsReport>& rows);

}  // namespace hsi
