#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>

#include "json.hpp"

#include "hsi/error.hpp"
#include "hsi/kinematics.hpp"
#include "hsi/plan.hpp"

namespace hsi::detail {

using Json = nlohmann::ordered_json;

inline Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

template <class E = SchemaError>
[[noreturn]] void fail(const std::string& what, const Json& context) {
  if constexpr (std::is_base_of_v<BackendError, E>)
    throw E(what, context.dump());
  else
    throw E(what);
}

template <class E = SchemaError>
const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail<E>(std::string("missing field '") + key + "'", j);
  return j.at(key);
}

template <class E = SchemaError>
double number(const Json& j, const char* what) {
  if (!j.is_number()) fail<E>(std::string(what) + " must be a number", j);
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail<E>(std::string(what) + " must be finite", j);
  return v;
}

template <class E = SchemaError>
std::string text(const Json& j, const char* what) {
  if (!j.is_string()) fail<E>(std::string(what) + " must be a string", j);
  return j.get<std::string>();
}

template <class E = SchemaError>
int integer(const Json& j, const char* what) {
  if (!j.is_number_integer()) fail<E>(std::string(what) + " must be an integer", j);
  return j.get<int>();
}

template <class E = SchemaError>
Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) fail<E>(std::string(what) + " must be a 3-element array", j);
  return {number<E>(j[0], what), number<E>(j[1], what), number<E>(j[2], what)};
}

template <class E = SchemaError>
std::optional<double> optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number<E>(j.at(key), key);
}

inline Json to_json(const HumanState& s) {
  Json j;
  j["root"] = to_json(s.root_translation);
  j["yaw"] = s.root_yaw;
  j["joints"] = s.joint_angles;
  j["shape"] = s.shape;
  return j;
}

template <class E = SchemaError>
HumanState human_state(const Json& j) {
  HumanState s;
  s.root_translation = vec3<E>(field<E>(j, "root"), "root");
  s.root_yaw = number<E>(field<E>(j, "yaw"), "yaw");
  if (j.contains("joints")) {
    const Json& a = j.at("joints");
    if (!a.is_array() || a.size() != static_cast<std::size_t>(kJointAngleCount))
      fail<E>("joints must hold " + std::to_string(kJointAngleCount) + " angles", j);
    for (std::size_t i = 0; i < a.size(); ++i) s.joint_angles[i] = number<E>(a[i], "joint angle");
  }
  if (j.contains("shape")) {
    const Json& a = j.at("shape");
    if (!a.is_array() || a.size() != static_cast<std::size_t>(kShapeCount))
      fail<E>("shape must hold " + std::to_string(kShapeCount) + " coefficients", j);
    for (std::size_t i = 0; i < a.size(); ++i) s.shape[i] = number<E>(a[i], "shape coefficient");
  }
  return s;
}

inline Json to_json(const Milestone& m) {
  Json j;
  j["position"] = to_json(m.position);
  j["facing"] = m.facing ? Json(*m.facing) : Json(nullptr);
  j["label"] = m.label;
  j["layer"] = m.layer;
  j["description"] = m.description;
  return j;
}

inline Json to_json(const ActionUnit& u) {
  Json j;
  j["verb"] = verb_name(u.verb);
  j["anchor"] = to_json(u.anchor_position);
  j["anchor_yaw"] = u.anchor_yaw;
  j["target"] = to_json(u.target);
  j["target_yaw"] = u.target_yaw;
  j["duration_frames"] = u.duration_frames;
  j["description"] = u.description;
  if (u.obstacle) {
    j["obstacle"] = {{"tag", u.obstacle->tag},
                     {"center", to_json(u.obstacle->center)},
                     {"radius", u.obstacle->radius},
                     {"top", u.obstacle->top}};
  }
  return j;
}

template <class E = SchemaError>
ActionUnit action_unit(const Json& j) {
  ActionUnit u;
  const std::string verb = text<E>(field<E>(j, "verb"), "verb");
  const auto v = parse_verb(verb);
  if (!v) fail<E>("unknown verb '" + verb + "'", j);
  u.verb = *v;
  u.anchor_position = vec3<E>(field<E>(j, "anchor"), "anchor");
  u.anchor_yaw = number<E>(field<E>(j, "anchor_yaw"), "anchor_yaw");
  u.target = vec3<E>(field<E>(j, "target"), "target");
  u.target_yaw = number<E>(field<E>(j, "target_yaw"), "target_yaw");
  if (j.contains("duration_frames")) u.duration_frames = integer<E>(j.at("duration_frames"), "duration_frames");
  if (j.contains("description")) u.description = text<E>(j.at("description"), "description");
  if (j.contains("obstacle") && !j.at("obstacle").is_null()) {
    const Json& o = j.at("obstacle");
    u.obstacle = ObstacleExtent{text<E>(field<E>(o, "tag"), "tag"), vec3<E>(field<E>(o, "center"), "center"),
                                number<E>(field<E>(o, "radius"), "radius"), number<E>(field<E>(o, "top"), "top")};
  }
  return u;
}

}  // namespace hsi::detail
