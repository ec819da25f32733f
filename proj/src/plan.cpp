#include "hsi/plan.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace hsi {

namespace {
constexpr std::array<std::pair<Verb, std::string_view>, 9> kVerbNames = {{
    {Verb::walk_to, "walk_to"}, {Verb::turn_to, "turn_to"}, {Verb::step_over, "step_over"},
    {Verb::sit, "sit"}, {Verb::stand, "stand"}, {Verb::climb_segment, "climb_segment"},
    {Verb::reach, "reach"}, {Verb::idle, "idle"}, {Verb::custom_text, "custom_text"},
}};
}  // namespace

std::string_view verb_name(Verb v) {
  for (const auto& [verb, name] : kVerbNames)
    if (verb == v) return name;
  return "unknown";
}

std::optional<Verb> parse_verb(std::string_view name) {
  for (const auto& [verb, n] : kVerbNames)
    if (n == name) return verb;
  return std::nullopt;
}

bool milestone_reached(const HumanState& state, const Milestone& m, const GoalTolerance& tol) {
  const Vec3 ground = ground_point(state, tol.pelvis_height);
  if (horizontal_distance(ground, m.position) > tol.horizontal) return false;
  if (std::fabs(ground.z - m.position.z) > tol.vertical) return false;
  if (m.facing && std::fabs(wrap_angle(state.root_yaw - *m.facing)) > tol.heading) return false;
  return true;
}

}  // namespace hsi
