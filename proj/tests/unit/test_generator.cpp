#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hsi/error.hpp"
#include "hsi/generator.hpp"

using namespace hsi;

namespace {

HumanState standing(double x = 0, double y = 0, double yaw = 0) {
  HumanState s;
  s.root_translation = {x, y, 0.94};
  s.root_yaw = yaw;
  return s;
}

ActionUnit unit_from(const HumanState& s, Verb verb, Vec3 target, double target_yaw) {
  ActionUnit u;
  u.verb = verb;
  u.anchor_position = s.root_translation;
  u.anchor_yaw = s.root_yaw;
  u.target = target;
  u.target_yaw = target_yaw;
  return u;
}

}  // namespace

TEST_CASE("turn_to 90 degrees takes 30 frames") {
  const HumanState s = standing(1, 2, 0.3);
  const ActionUnit u = unit_from(s, Verb::turn_to, s.root_translation, 0.3 + std::numbers::pi / 2);
  const MotionClip c = execute_action(s, u, {}, {});
  CHECK(c.frame_count() == 30);
  CHECK(c.frames.front() == s);
  CHECK(std::fabs(c.frames.back().root_yaw - (0.3 + std::numbers::pi / 2)) < 1e-12);
  CHECK(norm(c.frames.back().root_translation - s.root_translation) < 1e-12);
}

TEST_CASE("walk_to 2 m ahead takes 60 frames and lands on target") {
  const double yaw = 0.7;
  const HumanState s = standing(-1, 3, yaw);
  const Vec3 target = s.root_translation + Vec3{2 * std::cos(yaw), 2 * std::sin(yaw), 0};
  const MotionClip c = execute_action(s, unit_from(s, Verb::walk_to, target, yaw), {}, {});
  CHECK(c.frame_count() == 60);
  CHECK(c.nominal_frames == 60);
  CHECK_FALSE(c.incomplete);
  CHECK(norm(c.frames.back().root_translation - target) < 1e-9);
  CHECK(std::fabs(c.frames.back().root_yaw - yaw) < 1e-12);
}

TEST_CASE("displacement is relative to the actual start pose") {
  const HumanState anchor = standing(0, 0, 0);
  const ActionUnit u = unit_from(anchor, Verb::walk_to, {1.5, 0, 0.94}, 0);
  const HumanState off = standing(0.3, -0.2, std::numbers::pi / 2);
  const MotionClip c = execute_action(off, u, {}, {});
  CHECK(norm(c.frames.back().root_translation - Vec3{0.3, 1.3, 0.94}) < 1e-9);
}

TEST_CASE("long units are capped at three seconds") {
  const HumanState s = standing();
  const MotionClip c = execute_action(s, unit_from(s, Verb::walk_to, {5, 0, 0.94}, 0), {}, {});
  CHECK(c.frame_count() == kMaxUnitFrames);
  CHECK(c.incomplete);
  CHECK(norm(c.frames.back().root_translation - Vec3{3, 0, 0.94}) < 1e-9);
}

TEST_CASE("sit lowers the pelvis and ends in the seated pose") {
  const HumanState s = standing();
  const MotionClip c = execute_action(s, unit_from(s, Verb::sit, {0, 0, 0.59}, 0), {}, {});
  CHECK(c.frame_count() == 45);
  CHECK(c.frames.back().root_translation.z == doctest::Approx(0.59));
  CHECK(c.frames.back().joint_angles[3 * (kLeftHip - 1) + 1] == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("climb moves along the full segment") {
  const HumanState s = standing();
  const MotionClip c = execute_action(s, unit_from(s, Verb::climb_segment, {0, 0, 2.44}, 0), {}, {});
  CHECK(c.frame_count() == 90);
  CHECK(norm(c.frames.back().root_translation - Vec3{0, 0, 2.44}) < 1e-9);
}

TEST_CASE("step_over lifts the body above the obstacle") {
  const HumanState s = standing();
  ActionUnit u = unit_from(s, Verb::step_over, {2, 0, 0.94}, 0);
  u.obstacle = ObstacleExtent{"box", {1, 0, 0}, 0.2, 0.3};
  const MotionClip c = execute_action(s, u, {}, {});
  double lowest_over = 1e9;
  for (const HumanState& f : c.frames)
    for (const Vec3& p : body_points(f, Skeleton::canonical()))
      if (std::hypot(p.x - 1, p.y) < 0.2) lowest_over = std::min(lowest_over, p.z);
  CHECK(lowest_over > 0.3);
  CHECK(norm(c.frames.back().root_translation - Vec3{2, 0, 0.94}) < 1e-9);
}

TEST_CASE("generation is deterministic for a seed") {
  const HumanState s = standing();
  const ActionUnit u = unit_from(s, Verb::walk_to, {2, 1, 0.94}, 0);
  NoiseModel n{0.1, 0.2, 0.5, 77};
  CHECK(execute_action(s, u, n, {}) == execute_action(s, u, n, {}));
  NoiseModel m = n;
  m.seed = 78;
  CHECK(execute_action(s, u, n, {}).frames.back() != execute_action(s, u, m, {}).frames.back());
}

TEST_CASE("translation drift grows like a random walk") {
  const HumanState s = standing();
  const ActionUnit u = unit_from(s, Verb::walk_to, {2, 0, 0.94}, 0);
  const DriftStatistics d = drift_statistics({0.1, 0.0, 0.0, 5}, 400, u);
  const double expected = 0.1 * std::sqrt(2.0);
  CHECK(d.stddev == doctest::Approx(expected).epsilon(0.15));
  CHECK(std::fabs(d.mean_longitudinal) < 3 * expected / std::sqrt(400.0));
  CHECK(std::fabs(d.mean_lateral) < 3 * expected / std::sqrt(400.0));
  CHECK(d.yaw_stddev == 0.0);
}

TEST_CASE("yaw drift grows like a random walk") {
  const HumanState s = standing();
  const ActionUnit u = unit_from(s, Verb::walk_to, {2, 0, 0.94}, 0);
  const DriftStatistics d = drift_statistics({0.0, 0.15, 0.0, 9}, 400, u);
  CHECK(d.yaw_stddev == doctest::Approx(0.15 * std::sqrt(2.0)).epsilon(0.15));
  CHECK_THROWS_AS(drift_statistics({}, 10, u), ConfigError);
}

TEST_CASE("p_extra = 1 appends an unplanned segment every time") {
  const HumanState s = standing();
  const ActionUnit u = unit_from(s, Verb::walk_to, {1, 0, 0.94}, 0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MotionClip c = execute_action(s, u, {0, 0, 1.0, seed}, {});
    CHECK(c.frame_count() > c.nominal_frames);
    CHECK(c.frame_count() - c.nominal_frames >= 15);
    CHECK(c.frame_count() - c.nominal_frames <= 45);
    CHECK(c.frames.back().root_translation == c.frames[static_cast<std::size_t>(c.nominal_frames)].root_translation);
  }
  CHECK(execute_action(s, u, {0, 0, 0.0, 3}, {}).frame_count() == 30);
}

TEST_CASE("invalid requests") {
  const HumanState s = standing();
  ActionUnit u = unit_from(s, Verb::custom_text, {1, 0, 0.94}, 0);
  u.description = "wave";
  CHECK_THROWS_AS(execute_action(s, u, {}, {}), GeneratorError);
  const ActionUnit w = unit_from(s, Verb::walk_to, {1, 0, 0.94}, 0);
  CHECK_THROWS_AS(execute_action(s, w, {-1, 0, 0, 0}, {}), ConfigError);
  CHECK_THROWS_AS(execute_action(s, w, {0, 0, 1.5, 0}, {}), ConfigError);
  GeneratorConfig bad;
  bad.fps = 0;
  CHECK_THROWS_AS(execute_action(s, w, {}, bad), ConfigError);
  HumanState broken = s;
  broken.root_yaw = NAN;
  CHECK_THROWS_AS(execute_action(broken, w, {}, {}), InvalidState);
}
