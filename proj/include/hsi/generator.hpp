#pragma once

#include <cstdint>
#include <numbers>

#include "hsi/kinematics.hpp"
#include "hsi/plan.hpp"

namespace hsi {

// Stochastic drift applied on top of the procedural motion. Drift is a
// per-frame Gaussian random walk: each frame adds N(0, sigma^2 / fps) to the
// heading and to the body-frame longitudinal/lateral position, so endpoint
// error after T seconds has standard deviation sigma * sqrt(T) per axis.
struct NoiseModel {
  double translation_sigma = 0.0;  // m / sqrt(s)
  double yaw_sigma = 0.0;          // rad / sqrt(s)
  double p_extra = 0.0;            // chance of an appended unplanned idle gesture
  std::uint64_t seed = 0;
};

struct GeneratorConfig {
  int fps = 30;
  double walk_speed = 1.0;                     // m/s
  double turn_rate = std::numbers::pi / 2.0;   // rad/s
  double step_clearance = 0.4;                 // m above an obstacle's top
  double sit_depth = 0.35;                     // pelvis drop the planner asks for when seating, m
  double climb_speed = 0.5;                    // m/s
  double stride_length = 1.2;                  // m per gait cycle
  int sit_frames = 45;
  int stand_frames = 45;
  int reach_frames = 30;
  int idle_frames = 30;
  int extra_min_frames = 15;
  int extra_max_frames = 45;
};

void validate(const NoiseModel& noise);
void validate(const GeneratorConfig& config);

// Nominal duration in frames the generator needs for unit, before the 3 s cap.
int nominal_duration(const ActionUnit& unit, const GeneratorConfig& config);

// Root displacement of unit expressed in the anchor's heading frame, plus the
// heading change. Shared by the generator and the planner's pose prediction.
struct LocalMotion {
  Vec3 displacement;
  double yaw_change = 0.0;
};
LocalMotion local_motion(const ActionUnit& unit, const GeneratorConfig& config);

// Synthesizes the clip realizing unit from state. frames[0] == state exactly.
// Units needing more than kMaxUnitFrames are truncated and flagged incomplete.
// custom_text throws GeneratorError (needs a remote generator).
MotionClip execute_action(const HumanState& state, const ActionUnit& unit, const NoiseModel& noise,
                          const GeneratorConfig& config, std::int64_t source_node = -1);

struct DriftStatistics {
  double mean_longitudinal = 0.0;
  double mean_lateral = 0.0;
  double stddev = 0.0;  // pooled over both horizontal axes
  double mean_yaw_error = 0.0;
  double yaw_stddev = 0.0;
  int runs = 0;
};

// Endpoint error of unit over `runs` seeds relative to the noise-free endpoint.
DriftStatistics drift_statistics(const NoiseModel& noise, int runs, const ActionUnit& unit,
                                 const GeneratorConfig& config = {});

}  // namespace hsi
