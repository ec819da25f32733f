#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsi/math.hpp"

namespace hsi {

inline constexpr int kJointCount = 22;
inline constexpr int kJointAngleCount = 3 * (kJointCount - 1);
inline constexpr int kShapeCount = 10;

// Canonical joint indices. Parents always precede children.
enum Joint : int {
  kPelvis = 0, kSpine1, kSpine2, kSpine3, kNeck, kHead,
  kLeftClavicle, kLeftShoulder, kLeftElbow, kLeftWrist,
  kRightClavicle, kRightShoulder, kRightElbow, kRightWrist,
  kLeftHip, kLeftKnee, kLeftAnkle, kLeftToe,
  kRightHip, kRightKnee, kRightAnkle, kRightToe,
};

// Root pose plus per-joint intrinsic XYZ Euler angles. World frame is z-up;
// the body faces +x at yaw 0 with +y to its left.
struct HumanState {
  Vec3 root_translation;
  double root_yaw = 0.0;
  std::vector<double> joint_angles = std::vector<double>(kJointAngleCount, 0.0);
  std::vector<double> shape = std::vector<double>(kShapeCount, 0.0);

  double& angle(int joint, int axis) { return joint_angles[3 * (joint - 1) + axis]; }
  double angle(int joint, int axis) const { return joint_angles[3 * (joint - 1) + axis]; }

  bool operator==(const HumanState&) const = default;
};

struct StateDelta {
  Vec3 translation;
  double yaw = 0.0;
  std::vector<double> joint_angles = std::vector<double>(kJointAngleCount, 0.0);
};

class Skeleton {
 public:
  // The fixed 22-joint humanoid used throughout the library.
  static const Skeleton& canonical();

  Skeleton(std::vector<int> parents, std::vector<Vec3> offsets, int samples_per_bone);

  int joint_count() const { return static_cast<int>(parents_.size()); }
  int bone_count() const { return joint_count() - 1; }
  int samples_per_bone() const { return samples_per_bone_; }
  int body_point_count() const { return bone_count() * samples_per_bone_; }

  int parent(int joint) const { return parents_[joint]; }
  const Vec3& offset(int joint) const { return offsets_[joint]; }
  // Local sample offsets of the bone ending at `joint`, in the parent's frame.
  std::span<const Vec3> bone_samples(int joint) const;

  // Standing pelvis height above the ground for a zero pose with zero shape.
  double standing_pelvis_height() const { return standing_pelvis_height_; }

  bool operator==(const Skeleton& o) const {
    return parents_ == o.parents_ && offsets_ == o.offsets_ && samples_per_bone_ == o.samples_per_bone_;
  }

 private:
  std::vector<int> parents_;
  std::vector<Vec3> offsets_;
  int samples_per_bone_;
  std::vector<Vec3> samples_;  // (joint - 1) * samples_per_bone + k
  double standing_pelvis_height_;
};

// Per-joint world transforms.
struct WorldPose {
  std::vector<Vec3> positions;
  std::vector<Mat3> rotations;
};

void validate_state(const HumanState& state, const Skeleton& skeleton);

// Uniform bone scale derived from the first shape coefficient.
inline double shape_scale(const HumanState& s) { return 1.0 + 0.05 * s.shape[0]; }

WorldPose world_pose(const HumanState& state, const Skeleton& skeleton);
std::vector<Vec3> forward_kinematics(const HumanState& state, const Skeleton& skeleton);
std::vector<Vec3> body_points(const HumanState& state, const Skeleton& skeleton);
HumanState apply_delta(const HumanState& state, const StateDelta& delta);

// A realized action: frames[0] is the source node's state and frames[k] the
// state k frames later, so frame_count() == frames.size() - 1 is the number of
// generated frames. Frames past nominal_frames belong to an unplanned segment.
struct MotionClip {
  std::vector<HumanState> frames;
  int fps = 30;
  std::string label;
  std::uint64_t seed = 0;
  std::int64_t source_node = -1;
  int nominal_frames = 0;
  bool incomplete = false;

  int frame_count() const { return static_cast<int>(frames.size()) - 1; }
  bool operator==(const MotionClip&) const = default;
};

inline constexpr int kMaxUnitFrames = 90;

}  // namespace hsi
