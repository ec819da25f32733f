// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hsi/error.hpp"
#include "hsi/generator.hpp"
#include "hsi/graph.hpp"
#include "hsi/harness.hpp"
#include "hsi/kinematics.hpp"
#include "hsi/metrics.hpp"
#include "hsi/preference_opt.hpp"
#include "hsi/scene.hpp"

using namespace hsi;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(HSI_SOURCE_DIR) / "data" / "scenarios";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. metric oracles ----

struct OrientedBox {
  Vec3 center, half;
  double yaw = 0;
};

double box_sdf(const OrientedBox& b, const Vec3& p) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double dx = p.x - b.center.x, dy = p.y - b.center.y;
  const double q[3] = {std::fabs(c * dx + s * dy) - b.half.x, std::fabs(-s * dx + c * dy) - b.half.y,
                       std::fabs(p.z - b.center.z) - b.half.z};
  const double outside = std::sqrt(std::pow(std::max(q[0], 0.0), 2) + std::pow(std::max(q[1], 0.0), 2) +
                                   std::pow(std::max(q[2], 0.0), 2));
  return outside + std::min(std::max({q[0], q[1], q[2]}), 0.0);
}

// Signed distance sampled on a 1 cm lattice, trilinearly interpolated.
struct VoxelSdf {
  std::vector<OrientedBox> boxes;
  static constexpr double kCell = 0.01;

  double node(long i, long j, long k) const {
    const Vec3 p{i * kCell, j * kCell, k * kCell};
    double d = 1e9;
    for (const OrientedBox& b : boxes) d = std::min(d, box_sdf(b, p));
    return d;
  }
  bool inside(const Vec3& p) const {
    const double fx = p.x / kCell, fy = p.y / kCell, fz = p.z / kCell;
    const long i = static_cast<long>(std::floor(fx)), j = static_cast<long>(std::floor(fy)),
               k = static_cast<long>(std::floor(fz));
    const double tx = fx - i, ty = fy - j, tz = fz - k;
    double v = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          v += (a ? tx : 1 - tx) * (b ? ty : 1 - ty) * (c ? tz : 1 - tz) * node(i + a, j + b, k + c);
    return v < 0;
  }
  double fraction(const MotionClip& clip, const Skeleton& sk) const {
    double sum = 0;
    for (const HumanState& s : clip.frames) {
      const auto pts = body_points(s, sk);
      int n = 0;
      for (const Vec3& p : pts) n += inside(p);
      sum += static_cast<double>(n) / pts.size();
    }
    return sum / clip.frames.size();
  }
};

Outcome metric_oracles() {
  const Skeleton& sk = Skeleton::canonical();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double tol = 1.0 / sk.body_point_count();
  double worst_p = 0, worst_pos = 0, touched = 0;
  for (int f = 0; f < 20; ++f) {
    const int parts = f % 2 == 0 ? 1 : 2 + (f % 3 == 0);
    VoxelSdf oracle;
    std::vector<ObstacleSpec> specs;
    SceneMesh scene;
    for (int b = 0; b < parts; ++b) {
      const Vec3 half{0.35 + 0.25 * u(rng), 0.35 + 0.25 * u(rng), 0.45 + 0.35 * u(rng)};
      const Vec3 center{0.4 * u(rng), 0.4 * u(rng), half.z + 0.15 * (1 + u(rng))};
      const double yaw = std::numbers::pi * u(rng);
      const std::string tag = "part" + std::to_string(b);
      oracle.boxes.push_back({center, half, yaw});
      specs.push_back({make_box(Vec3{} - half, half, tag), center, yaw, tag, true});
      const SceneMesh posed = posed_obstacle(specs.back());
      scene = b == 0 ? posed : merge_meshes(scene, posed);
    }
    MotionClip clip;
    for (int t = 0; t < 12; ++t) {
      HumanState s;
      s.root_translation = {0.7 * u(rng), 0.7 * u(rng), 0.9 + 0.3 * u(rng)};
      s.root_yaw = std::numbers::pi * u(rng);
      for (double& a : s.joint_angles) a = 0.6 * u(rng);
      clip.frames.push_back(s);
    }
    const double expect = oracle.fraction(clip, sk);
    touched += expect;
    worst_p = std::max(worst_p, std::fabs(penetration_score(clip, scene, sk) - expect));
    worst_pos = std::max(worst_pos, std::fabs(penetration_obstacle_score(clip, specs, sk) - expect));
  }

  double worst_rds = 0;
  for (int trial = 0; trial < 20; ++trial) {
    MotionClip a, b;
    const Vec3 offset{u(rng), u(rng), 0.5 * u(rng)};
    for (int t = 0; t < 15; ++t) {
      HumanState s;
      s.root_translation = {3 * u(rng), 3 * u(rng), 0.94};
      s.root_yaw = 3 * u(rng);
      for (double& x : s.joint_angles) x = 0.5 * u(rng);
      a.frames.push_back(s);
      s.root_translation = s.root_translation + offset;
      b.frames.push_back(s);
    }
    worst_rds = std::max(worst_rds, std::fabs(reaction_divergence(a, b, sk) - norm(offset)));
  }
  return {worst_p <= tol && worst_pos <= tol && touched > 1.0 && worst_rds < 1e-9,
          fmt("max |P-Score - oracle| %.5f, max |POS - oracle| %.5f (tol %.5f), max RDS offset error %.2e", worst_p,
              worst_pos, tol, worst_rds)};
}

// ---- 2-4. preference optimization ----

Outcome dpo_exactness() {
  using namespace dpo;
  const DenoiserModel m = DenoiserModel::random(3);
  PreferencePair p = synth_pairs(1, 5)[0];
  p.dispreferred = p.preferred;
  const double tie = dpo_loss(m, p, 5000.0, draw_noise(1, 0, 50), make_schedule());
  const double e1 = dpo_objective(1.0, 2.0, 2.0);
  const double want = std::log1p(std::exp(-1.0));
  const bool ok = std::fabs(tie - std::log(2.0)) < 1e-12 && std::fabs(e1 - want) < 1e-9 &&
                  std::fabs(e1 - 0.313262) < 1e-6;
  return {ok, fmt("tie loss - ln 2 = %.2e, loss(beta 2, dL -1) = %.9f", tie - std::log(2.0), e1)};
}

Outcome dpo_gradient() {
  using namespace dpo;
  const DenoiserModel m = DenoiserModel::random(17, 0.3);
  const DenoiserModel ref = DenoiserModel::random(18, 0.3);
  const Schedule s = make_schedule();
  const auto batch = synth_pairs(6, 19);
  std::vector<NoiseDraw> draws;
  for (std::uint64_t i = 0; i < batch.size(); ++i) draws.push_back(draw_noise(20, i, 50));
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> pick(0, kParams - 1);
  const double h = 1e-5;
  double worst = 0;
  int sampled = 0;
  for (const DenoiserModel* r : {static_cast<const DenoiserModel*>(nullptr), &ref}) {
    const LossAndGradient lg = gradient(m, batch, draws, 2.0, s, r);
    auto mean_loss = [&](const DenoiserModel& x) {
      double sum = 0;
      for (std::size_t i = 0; i < batch.size(); ++i) sum += dpo_loss(x, batch[i], 2.0, draws[i], s, r);
      return sum / batch.size();
    };
    for (int trial = 0; trial < 40; ++trial, ++sampled) {
      const int i = pick(rng);
      DenoiserModel up = m, down = m;
      up.params[i] += h;
      down.params[i] -= h;
      const double fd = (mean_loss(up) - mean_loss(down)) / (2 * h);
      const double scale = std::max({std::fabs(fd), std::fabs(lg.gradient[i]), 1e-6});
      worst = std::max(worst, std::fabs(fd - lg.gradient[i]) / scale);
    }
  }
  return {worst < 1e-4 && sampled >= 50, fmt("%d parameters, max relative error %.2e", sampled, worst)};
}

Outcome dpo_training() {
  using namespace dpo;
  const auto train_set = synth_pairs(200, 101);
  const auto held = synth_pairs(200, 202);
  std::vector<PreferencePair> swapped = train_set;
  for (PreferencePair& p : swapped) std::swap(p.preferred, p.dispreferred);
  DpoConfig cfg = DpoConfig::toy();
  cfg.steps = 1000;
  cfg.seed = 7;
  const DenoiserModel init = DenoiserModel::random(303);
  const double before = eval_preference_accuracy(init, held, cfg);
  const TrainResult trained = train(init, train_set, cfg);
  const double after = eval_preference_accuracy(trained.model, held, cfg);
  const double margin = preference_margin(trained.model, held, cfg);
  const double swapped_margin = preference_margin(train(init, swapped, cfg).model, held, cfg);
  const bool ok = std::fabs(before - 0.5) <= 0.1 && after >= 0.9 && margin > 0 && swapped_margin < 0;
  return {ok, fmt("held-out accuracy %.3f untrained, %.3f after %d steps; margin %+.4f, swapped %+.4f", before, after,
                  cfg.steps, margin, swapped_margin)};
}

// ---- 5-6. closed loop ----

Outcome critic_value() {
  const auto configs = load_scenario_dir(kScenarios / "interaction");
  bool calibrated = configs.size() == 6;
  for (const ScenarioConfig& c : configs)
    calibrated = calibrated && c.noise.yaw_sigma == 0.15 && c.noise.p_extra == 0.3;
  std::vector<std::uint64_t> seeds(50);
  for (std::uint64_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  const SuiteReport r = run_suite(configs, seeds, {{"full", true, true}, {"no_critic", false, true}});
  const double with = r.aggregate[0].goal_completion, without = r.aggregate[1].goal_completion;
  return {calibrated && with >= 0.9 && with - without >= 0.2,
          fmt("goal completion %.3f with critic, %.3f without (%zu runs each)", with, without,
              r.rows.size() / 2)};
}

Outcome obstacle_perception() {
  const auto configs = load_scenario_dir(kScenarios / "obstacle");
  bool ok = configs.size() == 6;
  std::string detail;
  for (const ScenarioConfig& c : configs) {
    const PreparedScenario p = prepare(c);
    double pos = 0, rds = 0, blind = 0;
    const int n = 10;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
      const ObstacleExperiment seen = obstacle_experiment(p, seed, false);
      const ObstacleExperiment ignored = obstacle_experiment(p, seed, true);
      pos += seen.pos / n;
      rds += seen.rds / n;
      blind += ignored.pos / n;
    }
    const bool pass = pos <= 0.01 && rds > 0.05 && blind > 0 && blind >= 5 * pos;
    ok = ok && pass;
    detail += fmt("%s%s POS %.4f RDS %.3f ignoring POS %.4f", detail.empty() ? "" : "; ", c.id.c_str(), pos, rds,
                  blind);
  }
  return {ok, detail};
}

// ---- 7. determinism ----

Outcome determinism() {
  bool ok = true;
  for (const char* rel : {"interaction/rooftop_climb.json", "interaction/office_sit_stand.json",
                          "obstacle/hallway_two_pumpkins.json"}) {
    const ScenarioConfig c = load_scenario(kScenarios / rel);
    const RunTrace a = run_scenario(c, 13);
    const RunTrace b = run_scenario(c, 13);
    ok = ok && a.events_jsonl() == b.events_jsonl() && a.graph == b.graph && a.path == b.path &&
         metrics_csv({a.metrics}) == metrics_csv({b.metrics});
  }
  HumanState s;
  s.root_translation = {0, 0, 0.94};
  ActionUnit u;
  u.verb = Verb::walk_to;
  u.anchor_position = s.root_translation;
  u.target = {2.5, 1, 0.94};
  u.target_yaw = std::atan2(1, 2.5);
  int clips = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed, ++clips) {
    const NoiseModel n{0.1, 0.2, 0.5, seed};
    ok = ok && execute_action(s, u, n, {}) == execute_action(s, u, n, {});
  }
  return {ok, fmt("3 scenarios traced twice, %d noisy clips regenerated", clips)};
}

// ---- 8. graph fuzzing ----

Outcome graph_fuzz() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto at = [](double x, double y) {
    HumanState s;
    s.root_translation = {x, y, 0.94};
    return s;
  };
  KeyPlan plan;
  for (int k = 1; k <= 4; ++k) {
    plan.milestones.push_back({{1.0 * k, 0, 0}, std::nullopt, "arrive", 0, ""});
    plan.trajectories.push_back({{1.0 * k, 0, 0}});
  }
  int violations = 0;
  long ops = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    auto g = InteractionGraph::init(at(0, 0), 0, plan);
    for (int op = 0; op < 30; ++op, ++ops) {
      const DirectedPath before = g.current_path();
      if (u(rng) < 0.6 || before.nodes.size() == 1) {
        const HumanState from = g.node(g.head()).human;
        const double step = u(rng) < 0.7 ? 1.0 : 0.4;
        const HumanState to = at(from.root_translation.x + step, u(rng) < 0.8 ? 0.0 : 0.3);
        MotionClip c;
        c.source_node = g.head();
        for (int t = 0; t <= 5; ++t) {
          HumanState f = from;
          f.root_translation = from.root_translation * (1 - t / 5.0) + to.root_translation * (t / 5.0);
          c.frames.push_back(t == 5 ? to : f);
        }
        c.nominal_frames = 5;
        ActionUnit a;
        a.verb = Verb::walk_to;
        g.extend(a, c, 0, u(rng) < 0.1 ? kNoKey : kNextKey);
      } else {
        const NodeId keep = before.nodes[static_cast<std::size_t>(u(rng) * before.nodes.size())];
        g.prune_after(keep);
        const std::string once = g.export_trace();
        violations += g.prune_after(keep) != 0 || g.export_trace() != once;
      }
      try {
        g.check_invariants();
      } catch (const GraphError&) {
        ++violations;
      }
      const DirectedPath p = g.current_path();
      violations += p.nodes.front() != 0 || p.nodes.back() != g.head();
      std::size_t executed = 0;
      for (const GraphEdge& e : g.edges()) executed += e.status == EdgeStatus::executed;
      violations += executed != p.edges.size();
      for (std::size_t i = 0; i < p.edges.size(); ++i) {
        const GraphEdge& e = g.edge(p.edges[i]);
        violations += e.from != p.nodes[i] || e.to != p.nodes[i + 1] || e.status != EdgeStatus::executed;
      }
      std::size_t keys = 0, reached_keys = 0, keys_on_path = 0;
      for (const GraphNode& n : g.nodes()) {
        keys += n.kind == NodeKind::key;
        reached_keys += n.kind == NodeKind::key && n.status == NodeStatus::reached;
      }
      for (NodeId id : p.nodes) keys_on_path += g.node(id).kind == NodeKind::key;
      violations += keys != plan.milestones.size() + 1 || reached_keys != keys_on_path ||
                    g.reached_milestones() + 1 != keys_on_path;
    }
  }
  return {violations == 0, fmt("1000 sequences, %ld operations, %d violations", ops, violations)};
}

// ---- 9. kinematics ----

using M3 = std::array<std::array<double, 3>, 3>;

M3 mul(const M3& a, const M3& b) {
  M3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

M3 axis_rotation(int axis, double a) {
  const double c = std::cos(a), s = std::sin(a);
  const int i = (axis + 1) % 3, j = (axis + 2) % 3;
  M3 r{};
  r[axis][axis] = 1;
  r[i][i] = c;
  r[i][j] = -s;
  r[j][i] = s;
  r[j][j] = c;
  return r;
}

Outcome kinematics() {
  const Skeleton& sk = Skeleton::canonical();
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_fk = 0, worst_len = 0, worst_delta = 0;
  for (int trial = 0; trial < 100; ++trial) {
    HumanState s;
    s.root_translation = {3 * u(rng), 3 * u(rng), 1 + 0.2 * u(rng)};
    s.root_yaw = std::numbers::pi * u(rng);
    for (double& a : s.joint_angles) a = 1.5 * u(rng);
    s.shape[0] = u(rng);
    const double scale = 1 + 0.05 * s.shape[0];
    std::vector<M3> rot(sk.joint_count());
    std::vector<std::array<double, 3>> pos(sk.joint_count());
    rot[0] = axis_rotation(2, s.root_yaw);
    pos[0] = {s.root_translation.x, s.root_translation.y, s.root_translation.z};
    for (int j = 1; j < sk.joint_count(); ++j) {
      const int p = sk.parent(j);
      const double o[3] = {sk.offset(j).x * scale, sk.offset(j).y * scale, sk.offset(j).z * scale};
      for (int r = 0; r < 3; ++r)
        pos[j][r] = pos[p][r] + rot[p][r][0] * o[0] + rot[p][r][1] * o[1] + rot[p][r][2] * o[2];
      const double* a = &s.joint_angles[3 * (j - 1)];
      rot[j] = mul(rot[p], mul(axis_rotation(0, a[0]), mul(axis_rotation(1, a[1]), axis_rotation(2, a[2]))));
    }
    const auto fk = forward_kinematics(s, sk);
    for (int j = 0; j < sk.joint_count(); ++j) {
      worst_fk = std::max(worst_fk, norm(fk[j] - Vec3{pos[j][0], pos[j][1], pos[j][2]}));
      if (j > 0)
        worst_len = std::max(worst_len, std::fabs(norm(fk[j] - fk[sk.parent(j)]) - norm(sk.offset(j)) * scale));
    }

    if (!(apply_delta(s, StateDelta{}) == s)) worst_delta = 1;
    StateDelta d1, d2, sum;
    d1.translation = {u(rng), u(rng), u(rng)};
    d2.translation = {u(rng), u(rng), u(rng)};
    d1.yaw = 3 * u(rng);
    d2.yaw = 3 * u(rng);
    sum.translation = d1.translation + d2.translation;
    sum.yaw = d1.yaw + d2.yaw;
    for (int i = 0; i < kJointAngleCount; ++i) {
      d1.joint_angles[i] = 0.3 * u(rng);
      d2.joint_angles[i] = 0.3 * u(rng);
      sum.joint_angles[i] = d1.joint_angles[i] + d2.joint_angles[i];
    }
    const HumanState two = apply_delta(apply_delta(s, d1), d2), one = apply_delta(s, sum);
    worst_delta = std::max({worst_delta, norm(two.root_translation - one.root_translation),
                            std::fabs(wrap_angle(two.root_yaw - one.root_yaw))});
    for (int i = 0; i < kJointAngleCount; ++i)
      worst_delta = std::max(worst_delta, std::fabs(two.joint_angles[i] - one.joint_angles[i]));
  }
  return {worst_fk < 1e-9 && worst_len < 1e-9 && worst_delta < 1e-12,
          fmt("100 poses: FK error %.2e m, bone length error %.2e m, delta error %.2e", worst_fk, worst_len,
              worst_delta)};
}

// ---- 10. zero noise ----

Outcome zero_noise() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    HumanState s;
    s.root_translation = {3 * u(rng), 3 * u(rng), 0.94};
    s.root_yaw = std::numbers::pi * u(rng);
    ActionUnit a;
    a.anchor_position = s.root_translation;
    a.anchor_yaw = s.root_yaw;
    if (trial % 2 == 0) {
      const double heading = std::numbers::pi * u(rng), dist = 1.4 * (1 + u(rng));
      a.verb = Verb::walk_to;
      a.target = s.root_translation + Vec3{dist * std::cos(heading), dist * std::sin(heading), 0};
      a.target_yaw = heading;
    } else {
      a.verb = Verb::turn_to;
      a.target = s.root_translation;
      a.target_yaw = std::numbers::pi * u(rng);
    }
    const MotionClip c = execute_action(s, a, {}, {});
    worst = std::max({worst, norm(c.frames.back().root_translation - a.target),
                      std::fabs(wrap_angle(c.frames.back().root_yaw - a.target_yaw))});
  }
  auto configs = load_scenario_dir(kScenarios / "interaction");
  const auto obstacles = load_scenario_dir(kScenarios / "obstacle");
  configs.insert(configs.end(), obstacles.begin(), obstacles.end());
  int clips = 0, accepts = 0, prunes = 0;
  for (ScenarioConfig& c : configs) {
    c.noise = {};
    c.critic = true;
    const PreparedScenario p = prepare(c);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const RunTrace t = run_scenario(p, seed);
      clips += t.clips;
      accepts += t.accepts;
      prunes += t.prune_events;
    }
  }
  return {worst < 1e-9 && clips > 0 && accepts == clips && prunes == 0,
          fmt("endpoint error %.2e; %d/%d clips accepted, %d prune events over %zu scenarios", worst, accepts, clips,
              prunes, configs.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"metric oracles", metric_oracles},
      {"DPO exactness", dpo_exactness},
      {"DPO gradient check", dpo_gradient},
      {"DPO training effect", dpo_training},
      {"critic closed-loop value", critic_value},
      {"obstacle perception", obstacle_perception},
      {"determinism", determinism},
      {"graph invariants under fuzzing", graph_fuzz},
      {"kinematics", kinematics},
      {"zero-noise exactness", zero_noise},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
