#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/kinematics.hpp"
#include "hsi/math.hpp"

namespace hsi {

enum class Verb { walk_to, turn_to, step_over, sit, stand, climb_segment, reach, idle, custom_text };

std::string_view verb_name(Verb v);
std::optional<Verb> parse_verb(std::string_view name);

// Footprint summary of an obstacle a step_over unit has to clear.
struct ObstacleExtent {
  std::string tag;
  Vec3 center;          // ground-level center of the footprint
  double radius = 0.0;  // horizontal bounding radius
  double top = 0.0;     // world z of the highest point
};

// One atomic action. anchor_* is the root pose the planner expected at the
// start of the unit and target/target_yaw the root pose it expects at the
// end; the generator executes the displacement between them relative to the
// actual start pose.
struct ActionUnit {
  Verb verb = Verb::idle;
  Vec3 anchor_position;
  double anchor_yaw = 0.0;
  Vec3 target;
  double target_yaw = 0.0;
  int duration_frames = 0;
  std::optional<ObstacleExtent> obstacle;
  std::string description;

  bool operator==(const ActionUnit&) const = default;
};

struct ActionChain {
  std::vector<ActionUnit> units;
};

// A key sub-goal. position is the ground point (z is the floor height of the
// milestone's nav layer).
struct Milestone {
  Vec3 position;
  std::optional<double> facing;
  std::string label;
  int layer = 0;
  std::string description;

  bool operator==(const Milestone&) const = default;
};

// Milestones with one waypoint polyline per milestone (leading into it).
// Waypoints are ground points; a vertical segment marks a ladder climb.
struct KeyPlan {
  std::vector<Milestone> milestones;
  std::vector<std::vector<Vec3>> trajectories;
};

struct GoalTolerance {
  double horizontal = 0.5;
  double heading = deg_to_rad(30.0);
  double vertical = 0.75;
  double pelvis_height = 0.94;
};

// Ground point under the root of a standing body.
inline Vec3 ground_point(const HumanState& s, double pelvis_height) {
  return s.root_translation - Vec3{0, 0, pelvis_height};
}

bool milestone_reached(const HumanState& state, const Milestone& m, const GoalTolerance& tol);

}  // namespace hsi
