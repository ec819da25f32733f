#include "hsi/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "hsi/error.hpp"

namespace hsi {

namespace {

// Toe clearance above the ground in the canonical standing pose.
constexpr double kToeClearance = 0.02;

Skeleton make_canonical() {
  std::vector<int> parents = {-1, 0, 1, 2, 3, 4,     // pelvis, spine x3, neck, head
                              3, 6, 7, 8,            // left arm
                              3, 10, 11, 12,         // right arm
                              0, 14, 15, 16,         // left leg
                              0, 18, 19, 20};        // right leg
  std::vector<Vec3> offsets = {
      {0, 0, 0},        {0, 0, 0.10},     {0, 0, 0.12},   {0, 0, 0.12},   {0, 0, 0.14},  {0, 0, 0.12},
      {0, 0.06, 0.08},  {0, 0.12, 0},     {0, 0, -0.28},  {0, 0, -0.25},
      {0, -0.06, 0.08}, {0, -0.12, 0},    {0, 0, -0.28},  {0, 0, -0.25},
      {0, 0.09, -0.08}, {0, 0, -0.42},    {0, 0, -0.40},  {0.14, 0, -0.02},
      {0, -0.09, -0.08}, {0, 0, -0.42},   {0, 0, -0.40},  {0.14, 0, -0.02},
  };
  return Skeleton(std::move(parents), std::move(offsets), 8);
}

}  // namespace

const Skeleton& Skeleton::canonical() {
  static const Skeleton skeleton = make_canonical();
  return skeleton;
}

Skeleton::Skeleton(std::vector<int> parents, std::vector<Vec3> offsets, int samples_per_bone)
    : parents_(std::move(parents)), offsets_(std::move(offsets)), samples_per_bone_(samples_per_bone) {
  if (parents_.empty() || parents_.size() != offsets_.size() || parents_[0] != -1 || samples_per_bone_ < 1)
    throw InvalidState("malformed skeleton");
  for (int j = 1; j < joint_count(); ++j)
    if (parents_[j] < 0 || parents_[j] >= j) throw InvalidState("skeleton joints must be topologically ordered");

  samples_.reserve(static_cast<std::size_t>(bone_count() * samples_per_bone_));
  for (int j = 1; j < joint_count(); ++j)
    for (int k = 0; k < samples_per_bone_; ++k)
      samples_.push_back(offsets_[j] * ((k + 0.5) / samples_per_bone_));

  std::vector<double> rest_z(joint_count(), 0.0);
  double lowest = 0.0;
  for (int j = 1; j < joint_count(); ++j) {
    rest_z[j] = rest_z[parents_[j]] + offsets_[j].z;
    lowest = std::min(lowest, rest_z[j]);
  }
  standing_pelvis_height_ = -lowest + kToeClearance;
}

std::span<const Vec3> Skeleton::bone_samples(int joint) const {
  return std::span<const Vec3>(samples_).subspan(static_cast<std::size_t>((joint - 1) * samples_per_bone_),
                                                 static_cast<std::size_t>(samples_per_bone_));
}

void validate_state(const HumanState& state, const Skeleton& skeleton) {
  if (static_cast<int>(state.joint_angles.size()) != 3 * skeleton.bone_count())
    throw InvalidState("joint angle count does not match skeleton");
  if (state.shape.size() != static_cast<std::size_t>(kShapeCount)) throw InvalidState("shape vector has wrong length");
  if (!is_finite(state.root_translation) || !std::isfinite(state.root_yaw))
    throw InvalidState("non-finite root pose");
  for (double a : state.joint_angles)
    if (!std::isfinite(a)) throw InvalidState("non-finite joint angle");
  for (double b : state.shape)
    if (!std::isfinite(b)) throw InvalidState("non-finite shape coefficient");
}

WorldPose world_pose(const HumanState& state, const Skeleton& skeleton) {
  validate_state(state, skeleton);
  const int n = skeleton.joint_count();
  const double scale = shape_scale(state);
  WorldPose pose;
  pose.positions.resize(n);
  pose.rotations.resize(n);
  pose.positions[0] = state.root_translation;
  pose.rotations[0] = rot_z(state.root_yaw);
  for (int j = 1; j < n; ++j) {
    const int p = skeleton.parent(j);
    const double* a = &state.joint_angles[3 * (j - 1)];
    pose.positions[j] = pose.positions[p] + pose.rotations[p] * (skeleton.offset(j) * scale);
    pose.rotations[j] = pose.rotations[p] * (rot_x(a[0]) * rot_y(a[1]) * rot_z(a[2]));
  }
  return pose;
}

std::vector<Vec3> forward_kinematics(const HumanState& state, const Skeleton& skeleton) {
  return world_pose(state, skeleton).positions;
}

std::vector<Vec3> body_points(const HumanState& state, const Skeleton& skeleton) {
  const WorldPose pose = world_pose(state, skeleton);
  const double scale = shape_scale(state);
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(skeleton.body_point_count()));
  for (int j = 1; j < skeleton.joint_count(); ++j) {
    const int p = skeleton.parent(j);
    for (const Vec3& local : skeleton.bone_samples(j))
      points.push_back(pose.positions[p] + pose.rotations[p] * (local * scale));
  }
  return points;
}

HumanState apply_delta(const HumanState& state, const StateDelta& delta) {
  if (delta.joint_angles.size() != state.joint_angles.size())
    throw InvalidDelta("delta joint dimension does not match state");
  if (!is_finite(delta.translation) || !std::isfinite(delta.yaw))
    throw InvalidDelta("non-finite root delta");
  for (double a : delta.joint_angles)
    if (!std::isfinite(a)) throw InvalidDelta("non-finite joint delta");

  HumanState out = state;
  out.root_translation += delta.translation;
  out.root_yaw = wrap_angle(state.root_yaw + delta.yaw);
  for (std::size_t i = 0; i < out.joint_angles.size(); ++i) out.joint_angles[i] += delta.joint_angles[i];
  return out;
}

}  // namespace hsi
