#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "hsi/error.hpp"
#include "hsi/graph.hpp"

using namespace hsi;

namespace {

HumanState at(double x, double y, double yaw = 0.0) {
  HumanState s;
  s.root_translation = {x, y, 0.94};
  s.root_yaw = yaw;
  return s;
}

MotionClip clip_between(const HumanState& a, const HumanState& b, NodeId source, int frames = 10) {
  MotionClip c;
  c.source_node = source;
  c.nominal_frames = frames;
  for (int i = 0; i <= frames; ++i) {
    const double t = double(i) / frames;
    HumanState s = a;
    s.root_translation = a.root_translation * (1 - t) + b.root_translation * t;
    s.root_yaw = a.root_yaw * (1 - t) + b.root_yaw * t;
    c.frames.push_back(i == frames ? b : s);
  }
  return c;
}

KeyPlan plan_of(std::initializer_list<Vec3> points) {
  KeyPlan p;
  int i = 0;
  for (const Vec3& q : points) {
    p.milestones.push_back({q, std::nullopt, "m" + std::to_string(i++), 0, ""});
    p.trajectories.push_back({q});
  }
  return p;
}

ActionUnit walk() {
  ActionUnit u;
  u.verb = Verb::walk_to;
  return u;
}

NodeId step(InteractionGraph& g, const HumanState& to, NodeId candidate = kNextKey) {
  return g.extend(walk(), clip_between(g.node(g.head()).human, to, g.head()), 0, candidate);
}

}  // namespace

TEST_CASE("milestone tolerance") {
  const GoalTolerance tol;
  Milestone m{{2, 0, 0}, std::nullopt, "m", 0, ""};
  CHECK(milestone_reached(at(2.4, 0), m, tol));
  CHECK_FALSE(milestone_reached(at(2.6, 0), m, tol));
  m.facing = 0.0;
  CHECK(milestone_reached(at(2, 0, deg_to_rad(29)), m, tol));
  CHECK_FALSE(milestone_reached(at(2, 0, deg_to_rad(31)), m, tol));
  HumanState high = at(2, 0);
  high.root_translation.z += 1.0;
  CHECK_FALSE(milestone_reached(high, m, tol));
}

TEST_CASE("init lays out the key nodes") {
  const auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}, {4, 0, 0}}));
  CHECK(g.nodes().size() == 3);
  CHECK(g.edges().empty());
  CHECK(g.head() == 0);
  CHECK(g.key_order() == std::vector<NodeId>{0, 1, 2});
  CHECK(g.node(0).status == NodeStatus::reached);
  CHECK(g.node(1).status == NodeStatus::planned);
  CHECK(g.next_planned_key() == 1);
  CHECK(g.reached_milestones() == 0);
  CHECK_NOTHROW(g.check_invariants());
  CHECK_THROWS_AS(InteractionGraph::init(at(0, 0), 0, KeyPlan{}), GraphError);
}

TEST_CASE("extend reaches keys in order and adds non-key nodes otherwise") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}, {4, 0, 0}}));
  const NodeId mid = step(g, at(1, 0));
  CHECK(g.node(mid).kind == NodeKind::non_key);
  CHECK(g.head() == mid);
  CHECK(g.node(mid).timestamp == 10);

  CHECK(step(g, at(2, 0)) == 1);
  CHECK(g.node(1).status == NodeStatus::reached);
  CHECK(g.node(1).timestamp == 20);
  CHECK(g.reached_milestones() == 1);

  // kNoKey never completes a key even when the pose satisfies it.
  const NodeId n = step(g, at(4, 0), kNoKey);
  CHECK(g.node(n).kind == NodeKind::non_key);
  CHECK(g.node(2).status == NodeStatus::planned);

  CHECK(g.current_path() == DirectedPath{{0, mid, 1, n}, {0, 1, 2}});
  CHECK_NOTHROW(g.check_invariants());
}

TEST_CASE("extend rejects clips that do not continue the head") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}}));
  MotionClip c = clip_between(at(0, 0), at(1, 0), 0);
  c.source_node = 5;
  CHECK_THROWS_AS(g.extend(walk(), c, 0), GraphError);
  CHECK_THROWS_AS(g.extend(walk(), clip_between(at(0.1, 0), at(1, 0), 0), 0), GraphError);
  MotionClip one = clip_between(at(0, 0), at(1, 0), 0);
  one.frames.resize(1);
  CHECK_THROWS_AS(g.extend(walk(), one, 0), GraphError);
  CHECK_THROWS_AS(g.extend(walk(), clip_between(at(0, 0), at(1, 0), 0), 0, 0), GraphError);
  CHECK_THROWS_AS(g.extend(walk(), clip_between(at(0, 0), at(1, 0), 0), 0, 42), GraphError);
  CHECK(g.edges().empty());
}

TEST_CASE("prune_after rewinds the path and reverts keys") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}, {4, 0, 0}}));
  const NodeId a = step(g, at(1, 0));
  step(g, at(2, 0));
  const NodeId c = step(g, at(3, 0));
  CHECK(g.prune_after(a) == 4);
  CHECK(g.head() == a);
  CHECK(g.node(1).status == NodeStatus::planned);
  CHECK(g.node(1).human.root_translation == Vec3{2, 0, 0.94});
  CHECK(g.node(c).status == NodeStatus::pruned);
  CHECK(g.edge(1).status == EdgeStatus::pruned);
  CHECK(g.edge(2).status == EdgeStatus::pruned);
  CHECK(g.current_path() == DirectedPath{{0, a}, {0}});
  CHECK(g.next_planned_key() == 1);
  CHECK_NOTHROW(g.check_invariants());

  CHECK(g.prune_after(a) == 0);
  CHECK_THROWS_AS(g.prune_after(c), GraphError);

  // The graph keeps growing after a prune.
  CHECK(step(g, at(2, 0.1)) == 1);
  CHECK_NOTHROW(g.check_invariants());
}

TEST_CASE("amend_head swaps the incoming clip") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}}));
  CHECK_THROWS_AS(g.amend_head(clip_between(at(0, 0), at(1, 0), 0)), GraphError);
  const NodeId n = step(g, at(1, 0));
  g.amend_head(clip_between(at(0, 0), at(1.2, 0.3), 0, 4));
  CHECK(g.node(n).human == at(1.2, 0.3));
  CHECK(g.node(n).timestamp == 4);
  CHECK_NOTHROW(g.check_invariants());
  CHECK_THROWS_AS(g.amend_head(clip_between(at(0.5, 0), at(1, 0), 0)), GraphError);
}

TEST_CASE("append_milestones keeps existing keys") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}}));
  step(g, at(2, 0));
  g.append_milestones({{{5, 0, 0}, std::nullopt, "extra", 0, ""}});
  CHECK(g.key_order() == std::vector<NodeId>{0, 1, 2});
  CHECK(g.next_planned_key() == 2);
  CHECK(g.node(1).status == NodeStatus::reached);
}

TEST_CASE("check_invariants names corruption") {
  auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{2, 0, 0}}));
  step(g, at(1, 0));
  InteractionGraph broken = g;
  const_cast<GraphNode&>(broken.node(broken.head())).timestamp = 0;
  CHECK_THROWS_WITH_AS(broken.check_invariants(), "timestamps not monotone along the path", GraphError);
  InteractionGraph moved = g;
  const_cast<GraphNode&>(moved.node(moved.head())).human = at(9, 9);
  CHECK_THROWS_WITH_AS(moved.check_invariants(), "edge clip does not chain the node states", GraphError);
}

TEST_CASE("trace lists every node and edge") {
  auto g = InteractionGraph::init(at(0, 0), 3, plan_of({{2, 0, 0}}));
  step(g, at(1, 0));
  step(g, at(2, 0));
  std::istringstream in(g.export_trace());
  std::string line;
  int nodes = 0, edges = 0, heads = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["record"] == "node") {
      ++nodes;
      heads += j["head"].get<bool>();
    } else {
      ++edges;
      CHECK(j["verb"] == "walk_to");
      CHECK(j["frames"] == 10);
    }
  }
  CHECK(nodes == 3);
  CHECK(edges == 2);
  CHECK(heads == 1);
}

TEST_CASE("random extend and prune sequences keep the invariants") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = InteractionGraph::init(at(0, 0), 0, plan_of({{1, 0, 0}, {2, 0, 0}, {3, 0, 0}}));
    std::vector<NodeId> model{0};  // expected executed path
    for (int op = 0; op < 40; ++op) {
      const double r = u(rng);
      if (r < 0.5 || model.size() == 1) {
        const HumanState& h = g.node(g.head()).human;
        const HumanState to = at(h.root_translation.x + 0.5 + 0.3 * u(rng), 0.2 * u(rng));
        const NodeId candidate = u(rng) > 0.8 ? kNoKey : kNextKey;
        model.push_back(step(g, to, candidate));
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, model.size() - 1);
        const std::size_t keep = pick(rng);
        const std::size_t removed = g.prune_after(model[keep]);
        CHECK(removed == 2 * (model.size() - 1 - keep));
        model.resize(keep + 1);
      }
      REQUIRE_NOTHROW(g.check_invariants());
      CHECK(g.current_path().nodes == model);
      CHECK(g.head() == model.back());
      std::size_t reached = 0;
      for (NodeId id : model) reached += id >= 1 && id <= 3;
      CHECK(g.reached_milestones() == reached);
    }
  }
}
