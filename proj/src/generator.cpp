#include "hsi/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hsi/error.hpp"
#include "hsi/rng.hpp"

namespace hsi {

namespace {

using Angles = std::vector<double>;
constexpr double kPi = std::numbers::pi;
constexpr int kBlendFrames = 6;
// Horizontal reach of body points from the root in the tucked pose.
constexpr double kBodyReach = 0.45;

void set(Angles& a, int joint, int axis, double v) { a[static_cast<std::size_t>(3 * (joint - 1) + axis)] = v; }

Angles zero_pose() { return Angles(kJointAngleCount, 0.0); }

Angles walk_pose(double phase) {
  Angles a = zero_pose();
  const double s = std::sin(phase);
  set(a, kLeftHip, 1, -0.35 * s);
  set(a, kRightHip, 1, 0.35 * s);
  set(a, kLeftKnee, 1, 0.5 * std::max(0.0, s));
  set(a, kRightKnee, 1, 0.5 * std::max(0.0, -s));
  set(a, kLeftShoulder, 1, 0.2 * s);
  set(a, kRightShoulder, 1, -0.2 * s);
  return a;
}

Angles tuck_pose() {
  Angles a = zero_pose();
  for (int hip : {kLeftHip, kRightHip}) set(a, hip, 1, -1.2);
  for (int knee : {kLeftKnee, kRightKnee}) set(a, knee, 1, 2.0);
  for (int sh : {kLeftShoulder, kRightShoulder}) set(a, sh, 1, -0.3);
  return a;
}

Angles seated_pose() {
  Angles a = zero_pose();
  for (int hip : {kLeftHip, kRightHip}) set(a, hip, 1, -kPi / 2);
  for (int knee : {kLeftKnee, kRightKnee}) set(a, knee, 1, kPi / 2);
  set(a, kSpine1, 1, -0.1);
  return a;
}

Angles climb_pose(double phase) {
  Angles a = zero_pose();
  const double s = std::sin(phase);
  set(a, kLeftShoulder, 1, -2.6 + 0.3 * s);
  set(a, kRightShoulder, 1, -2.6 - 0.3 * s);
  set(a, kLeftHip, 1, -0.6 - 0.4 * s);
  set(a, kRightHip, 1, -0.6 + 0.4 * s);
  set(a, kLeftKnee, 1, 0.8 + 0.4 * s);
  set(a, kRightKnee, 1, 0.8 - 0.4 * s);
  return a;
}

Angles reach_pose() {
  Angles a = zero_pose();
  set(a, kRightShoulder, 1, -1.5);
  set(a, kRightElbow, 1, -0.1);
  return a;
}

Angles gesture_pose(double phase) {
  Angles a = zero_pose();
  const double s = std::sin(phase);
  set(a, kRightShoulder, 0, -1.2 * s);
  set(a, kRightElbow, 1, -1.0 * s);
  set(a, kNeck, 1, 0.15 * s);
  return a;
}

Angles lerp(const Angles& a, const Angles& b, double t) {
  Angles out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + (b[i] - a[i]) * t;
  return out;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Nominal frame in the start pose's heading frame: the start is the origin
// facing +x.
struct LocalFrame {
  Vec3 position;
  double yaw = 0.0;
  Angles joints;
};

int frames_for(double amount, double rate, int fps) {
  return std::max(1, static_cast<int>(std::ceil(amount / rate * fps - 1e-9)));
}

// Lowest body point relative to the pelvis in the tucked pose.
double tuck_depth() {
  static const double depth = [] {
    HumanState s;
    s.joint_angles = tuck_pose();
    double lowest = 0.0;
    for (const Vec3& p : body_points(s, Skeleton::canonical())) lowest = std::min(lowest, p.z);
    return -lowest;
  }();
  return depth;
}

}  // namespace

void validate(const NoiseModel& noise) {
  if (!(noise.translation_sigma >= 0.0) || !(noise.yaw_sigma >= 0.0))
    throw ConfigError("noise sigmas must be non-negative");
  if (!(noise.p_extra >= 0.0 && noise.p_extra <= 1.0)) throw ConfigError("p_extra must lie in [0, 1]");
}

void validate(const GeneratorConfig& c) {
  if (c.fps <= 0 || !(c.walk_speed > 0) || !(c.turn_rate > 0) || !(c.step_clearance > 0) || !(c.sit_depth > 0) ||
      !(c.climb_speed > 0) || !(c.stride_length > 0))
    throw ConfigError("generator parameters must be positive");
  if (c.extra_min_frames < 1 || c.extra_max_frames < c.extra_min_frames)
    throw ConfigError("extra segment frame range is invalid");
}

LocalMotion local_motion(const ActionUnit& unit, [[maybe_unused]] const GeneratorConfig& config) {
  const Vec3 rel = yaw_rotate(unit.target - unit.anchor_position, -unit.anchor_yaw);
  const double turn = wrap_angle(unit.target_yaw - unit.anchor_yaw);
  switch (unit.verb) {
    case Verb::walk_to:
    case Verb::step_over:
    case Verb::custom_text: {
      const double dist = std::hypot(rel.x, rel.y);
      return {rel, dist > 1e-9 ? std::atan2(rel.y, rel.x) : turn};
    }
    case Verb::turn_to: return {{}, turn};
    case Verb::climb_segment: return {rel, turn};
    case Verb::sit:
    case Verb::stand: return {{0, 0, rel.z}, 0.0};
    case Verb::reach:
    case Verb::idle: return {{}, 0.0};
  }
  return {};
}

int nominal_duration(const ActionUnit& unit, const GeneratorConfig& config) {
  const LocalMotion m = local_motion(unit, config);
  auto or_default = [&unit](int fallback) { return unit.duration_frames > 0 ? unit.duration_frames : fallback; };
  switch (unit.verb) {
    case Verb::walk_to:
    case Verb::step_over:
    case Verb::custom_text:
      return frames_for(std::hypot(m.displacement.x, m.displacement.y), config.walk_speed, config.fps);
    case Verb::turn_to: return frames_for(std::fabs(m.yaw_change), config.turn_rate, config.fps);
    case Verb::climb_segment: return frames_for(norm(m.displacement), config.climb_speed, config.fps);
    case Verb::sit: return or_default(config.sit_frames);
    case Verb::stand: return or_default(config.stand_frames);
    case Verb::reach: return or_default(config.reach_frames);
    case Verb::idle: return or_default(config.idle_frames);
  }
  return 1;
}

namespace {

std::vector<LocalFrame> nominal_frames(const HumanState& start, const ActionUnit& unit, const GeneratorConfig& config,
                                       int duration) {
  const LocalMotion m = local_motion(unit, config);
  const Angles& start_joints = start.joint_angles;
  std::vector<LocalFrame> out(static_cast<std::size_t>(duration) + 1);

  auto blend_in = [&](const Angles& pose, int k) {
    return lerp(start_joints, pose, std::min(1.0, static_cast<double>(k) / kBlendFrames));
  };

  const double horizontal = std::hypot(m.displacement.x, m.displacement.y);
  switch (unit.verb) {
    case Verb::walk_to:
    case Verb::step_over:
    case Verb::custom_text: {
      const int turn_frames = std::min(duration, 10);
      const int cycles = std::max(1, static_cast<int>(std::lround(horizontal / config.stride_length)));
      // Step-over: full tuck and lift while any body point can be above the
      // footprint, easing in and out along a clipped parabola.
      double lift = 0.0, q = 1.0;
      if (unit.verb == Verb::step_over && unit.obstacle && horizontal > 1e-9) {
        const Vec3 c = yaw_rotate(unit.obstacle->center - unit.anchor_position, -unit.anchor_yaw);
        const double along = (c.x * m.displacement.x + c.y * m.displacement.y) / horizontal;
        const double half = unit.obstacle->radius + kBodyReach;
        const double s1 = std::clamp((along - half) / horizontal, 0.05, 0.5);
        const double s2 = std::clamp((along + half) / horizontal, 0.5, 0.95);
        q = std::min(4 * s1 * (1 - s1), 4 * s2 * (1 - s2));
        const double ground = start.root_translation.z - Skeleton::canonical().standing_pelvis_height();
        const double needed = unit.obstacle->top + config.step_clearance - ground;
        lift = std::max(0.0, needed - (Skeleton::canonical().standing_pelvis_height() - tuck_depth()));
      }
      for (int k = 0; k <= duration; ++k) {
        const double s = static_cast<double>(k) / duration;
        LocalFrame& f = out[static_cast<std::size_t>(k)];
        f.position = m.displacement * s;
        f.yaw = m.yaw_change * std::min(1.0, static_cast<double>(k) / turn_frames);
        Angles pose = walk_pose(2 * kPi * cycles * s);
        if (unit.verb == Verb::step_over) {
          const double w = std::clamp(4 * s * (1 - s) / q, 0.0, 1.0);
          f.position.z += lift * w;
          pose = lerp(pose, tuck_pose(), w);
        }
        f.joints = blend_in(pose, k);
      }
      break;
    }
    case Verb::turn_to:
      for (int k = 0; k <= duration; ++k) {
        LocalFrame& f = out[static_cast<std::size_t>(k)];
        f.yaw = m.yaw_change * k / duration;
        f.joints = blend_in(zero_pose(), k);
      }
      break;
    case Verb::climb_segment: {
      const int cycles = std::max(1, static_cast<int>(std::lround(norm(m.displacement) / 0.5)));
      for (int k = 0; k <= duration; ++k) {
        const double s = static_cast<double>(k) / duration;
        LocalFrame& f = out[static_cast<std::size_t>(k)];
        f.position = m.displacement * s;
        f.yaw = m.yaw_change * s;
        f.joints = blend_in(climb_pose(2 * kPi * cycles * s), k);
      }
      break;
    }
    case Verb::sit:
    case Verb::stand: {
      const Angles target = unit.verb == Verb::sit ? seated_pose() : zero_pose();
      for (int k = 0; k <= duration; ++k) {
        const double s = smoothstep(static_cast<double>(k) / duration);
        LocalFrame& f = out[static_cast<std::size_t>(k)];
        f.position = m.displacement * s;
        f.joints = lerp(start_joints, target, s);
      }
      break;
    }
    case Verb::reach:
    case Verb::idle: {
      const Angles target = unit.verb == Verb::reach ? reach_pose() : zero_pose();
      for (int k = 0; k <= duration; ++k) {
        const double s = smoothstep(static_cast<double>(k) / duration);
        out[static_cast<std::size_t>(k)].joints = lerp(start_joints, target, s);
      }
      break;
    }
  }
  return out;
}

}  // namespace

MotionClip execute_action(const HumanState& state, const ActionUnit& unit, const NoiseModel& noise,
                          const GeneratorConfig& config, std::int64_t source_node) {
  validate_state(state, Skeleton::canonical());
  validate(noise);
  validate(config);
  if (unit.verb == Verb::custom_text)
    throw GeneratorError("custom action '" + unit.description +
                         "' cannot be synthesized procedurally; use a remote generator");

  const int wanted = nominal_duration(unit, config);
  const bool truncated = wanted > kMaxUnitFrames;
  std::vector<LocalFrame> local = nominal_frames(state, unit, config, wanted);
  if (truncated) local.resize(kMaxUnitFrames + 1);
  const int nominal = static_cast<int>(local.size()) - 1;

  const StreamKey key(noise.seed);
  if (!truncated && noise.p_extra > 0.0 && key.child("extra").uniform(0) < noise.p_extra) {
    const auto extra = static_cast<int>(
        key.child("extra").uniform_int(1, config.extra_min_frames, config.extra_max_frames));
    const LocalFrame last = local.back();
    for (int k = 1; k <= extra; ++k) {
      LocalFrame f = last;
      f.joints = lerp(last.joints, gesture_pose(kPi * k / extra), std::sin(kPi * k / extra));
      local.push_back(std::move(f));
    }
  }

  const double step = 1.0 / std::sqrt(static_cast<double>(config.fps));
  const StreamKey yaw_key = key.child("yaw"), long_key = key.child("longitudinal"), lat_key = key.child("lateral");

  MotionClip clip;
  clip.fps = config.fps;
  clip.label = std::string(verb_name(unit.verb));
  clip.seed = noise.seed;
  clip.source_node = source_node;
  clip.nominal_frames = nominal;
  clip.incomplete = truncated;
  clip.frames.reserve(local.size());
  clip.frames.push_back(state);

  // offset accumulates the deviation from the nominal local trajectory.
  Vec3 offset;
  double drift = 0.0;
  for (std::size_t k = 1; k < local.size(); ++k) {
    const auto counter = static_cast<std::uint64_t>(k);
    drift += noise.yaw_sigma * step * (noise.yaw_sigma > 0 ? yaw_key.normal(counter) : 0.0);
    const Vec3 nominal_step = local[k].position - local[k - 1].position;
    offset += yaw_rotate(nominal_step, drift) - nominal_step;
    if (noise.translation_sigma > 0) {
      const Vec3 body{noise.translation_sigma * step * long_key.normal(counter),
                      noise.translation_sigma * step * lat_key.normal(counter), 0.0};
      offset += yaw_rotate(body, local[k].yaw + drift);
    }

    HumanState s = state;
    s.root_translation = state.root_translation + yaw_rotate(local[k].position + offset, state.root_yaw);
    s.root_yaw = wrap_angle(state.root_yaw + local[k].yaw + drift);
    s.joint_angles = local[k].joints;
    clip.frames.push_back(std::move(s));
  }
  return clip;
}

DriftStatistics drift_statistics(const NoiseModel& noise, int runs, const ActionUnit& unit,
                                 const GeneratorConfig& config) {
  if (runs < 30) throw ConfigError("drift statistics need at least 30 runs");
  HumanState start;
  start.root_translation = unit.anchor_position;
  start.root_yaw = unit.anchor_yaw;

  NoiseModel quiet;
  const MotionClip reference = execute_action(start, unit, quiet, config);
  const HumanState& ref_end = reference.frames.back();

  DriftStatistics stats;
  stats.runs = runs;
  std::vector<double> longitudinal, lateral, yaw;
  for (int r = 0; r < runs; ++r) {
    NoiseModel n = noise;
    n.seed = StreamKey(noise.seed).child(static_cast<std::uint64_t>(r)).value();
    const MotionClip clip = execute_action(start, unit, n, config);
    const HumanState& end = clip.frames.at(std::min(clip.frames.size() - 1, reference.frames.size() - 1));
    const Vec3 err = yaw_rotate(end.root_translation - ref_end.root_translation, -ref_end.root_yaw);
    longitudinal.push_back(err.x);
    lateral.push_back(err.y);
    yaw.push_back(wrap_angle(end.root_yaw - ref_end.root_yaw));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  stats.mean_longitudinal = mean(longitudinal);
  stats.mean_lateral = mean(lateral);
  stats.mean_yaw_error = mean(yaw);
  double ss = 0, ys = 0;
  for (int r = 0; r < runs; ++r) {
    ss += (longitudinal[r] - stats.mean_longitudinal) * (longitudinal[r] - stats.mean_longitudinal);
    ss += (lateral[r] - stats.mean_lateral) * (lateral[r] - stats.mean_lateral);
    ys += (yaw[r] - stats.mean_yaw_error) * (yaw[r] - stats.mean_yaw_error);
  }
  stats.stddev = std::sqrt(ss / (2.0 * runs - 2.0));
  stats.yaw_stddev = std::sqrt(ys / (runs - 1.0));
  return stats;
}

}  // namespace hsi
