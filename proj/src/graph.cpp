#include "hsi/graph.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

#include "hsi/error.hpp"

namespace hsi {

namespace {

HumanState placeholder_state(const Milestone& m, double pelvis_height) {
  HumanState s;
  s.root_translation = m.position + Vec3{0, 0, pelvis_height};
  s.root_yaw = m.facing.value_or(0.0);
  return s;
}

}  // namespace

std::string_view node_status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::planned: return "planned";
    case NodeStatus::reached: return "reached";
    case NodeStatus::pruned: return "pruned";
  }
  return "?";
}

std::string_view edge_status_name(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::planned: return "planned";
    case EdgeStatus::executed: return "executed";
    case EdgeStatus::pruned: return "pruned";
  }
  return "?";
}

InteractionGraph InteractionGraph::init(const HumanState& start, int scene_version, const KeyPlan& plan,
                                        GoalTolerance tolerance) {
  if (plan.milestones.empty()) throw GraphError("key plan has no milestones");
  InteractionGraph g;
  g.tolerance_ = tolerance;
  GraphNode root;
  root.id = 0;
  root.human = start;
  root.scene_version = scene_version;
  root.kind = NodeKind::key;
  root.milestone = Milestone{ground_point(start, tolerance.pelvis_height), start.root_yaw, "start", 0, "initial state"};
  root.status = NodeStatus::reached;
  g.nodes_.push_back(root);
  g.planned_state_.push_back(start);
  g.key_order_.push_back(0);
  g.append_milestones(plan.milestones);
  return g;
}

void InteractionGraph::append_milestones(const std::vector<Milestone>& milestones) {
  for (const Milestone& m : milestones) {
    GraphNode n;
    n.id = static_cast<NodeId>(nodes_.size());
    n.human = placeholder_state(m, tolerance_.pelvis_height);
    n.scene_version = nodes_.front().scene_version;
    n.kind = NodeKind::key;
    n.milestone = m;
    n.status = NodeStatus::planned;
    planned_state_.push_back(n.human);
    key_order_.push_back(n.id);
    nodes_.push_back(std::move(n));
  }
}

std::optional<NodeId> InteractionGraph::next_planned_key() const {
  for (NodeId id : key_order_)
    if (nodes_[static_cast<std::size_t>(id)].status == NodeStatus::planned) return id;
  return std::nullopt;
}

std::size_t InteractionGraph::reached_milestones() const {
  return static_cast<std::size_t>(std::count_if(key_order_.begin() + 1, key_order_.end(), [this](NodeId id) {
    return nodes_[static_cast<std::size_t>(id)].status == NodeStatus::reached;
  }));
}

std::optional<EdgeId> InteractionGraph::incoming_executed(NodeId id) const {
  for (const GraphEdge& e : edges_)
    if (e.to == id && e.status == EdgeStatus::executed) return e.id;
  return std::nullopt;
}

NodeId InteractionGraph::extend(const ActionUnit& action, const MotionClip& clip, int scene_version,
                                NodeId candidate) {
  const GraphNode& head = nodes_[static_cast<std::size_t>(head_)];
  if (clip.source_node != head_)
    throw GraphError("clip source node " + std::to_string(clip.source_node) + " is not the head " +
                     std::to_string(head_));
  if (clip.frames.size() < 2) throw GraphError("clip must advance at least one frame");
  if (clip.frames.front() != head.human) throw GraphError("clip first frame does not match head state");

  const HumanState& end_state = clip.frames.back();
  const std::int64_t timestamp = head.timestamp + clip.frame_count();

  std::optional<NodeId> key;
  if (candidate == kNextKey) {
    key = next_planned_key();
  } else if (candidate != kNoKey) {
    if (candidate < 0 || candidate >= static_cast<NodeId>(nodes_.size()) ||
        nodes_[static_cast<std::size_t>(candidate)].kind != NodeKind::key ||
        nodes_[static_cast<std::size_t>(candidate)].status != NodeStatus::planned)
      throw GraphError("node " + std::to_string(candidate) + " is not a planned key node");
    key = candidate;
  }

  NodeId target = -1;
  if (key) {
    GraphNode& k = nodes_[static_cast<std::size_t>(*key)];
    if (milestone_reached(end_state, *k.milestone, tolerance_)) {
      k.status = NodeStatus::reached;
      k.human = end_state;
      k.timestamp = timestamp;
      k.scene_version = scene_version;
      target = k.id;
    }
  }
  if (target < 0) {
    GraphNode n;
    n.id = static_cast<NodeId>(nodes_.size());
    n.human = end_state;
    n.scene_version = scene_version;
    n.timestamp = timestamp;
    n.kind = NodeKind::non_key;
    n.status = NodeStatus::reached;
    planned_state_.push_back(end_state);
    nodes_.push_back(std::move(n));
    target = nodes_.back().id;
  }

  GraphEdge e;
  e.id = static_cast<EdgeId>(edges_.size());
  e.from = head_;
  e.to = target;
  e.action = action;
  e.clip = clip;
  e.status = EdgeStatus::executed;
  edges_.push_back(std::move(e));
  head_ = target;
  return target;
}

DirectedPath InteractionGraph::current_path() const {
  DirectedPath path;
  NodeId cur = head_;
  path.nodes.push_back(cur);
  while (cur != 0) {
    const auto e = incoming_executed(cur);
    if (!e) throw GraphError("executed path is broken at node " + std::to_string(cur));
    path.edges.push_back(*e);
    cur = edges_[static_cast<std::size_t>(*e)].from;
    path.nodes.push_back(cur);
  }
  std::reverse(path.nodes.begin(), path.nodes.end());
  std::reverse(path.edges.begin(), path.edges.end());
  return path;
}

std::size_t InteractionGraph::prune_after(NodeId node) {
  const DirectedPath path = current_path();
  const auto it = std::find(path.nodes.begin(), path.nodes.end(), node);
  if (it == path.nodes.end()) throw GraphError("node " + std::to_string(node) + " is not on the executed path");
  const auto pos = static_cast<std::size_t>(it - path.nodes.begin());

  std::size_t count = 0;
  for (std::size_t i = pos; i < path.edges.size(); ++i) {
    edges_[static_cast<std::size_t>(path.edges[i])].status = EdgeStatus::pruned;
    GraphNode& n = nodes_[static_cast<std::size_t>(path.nodes[i + 1])];
    if (n.kind == NodeKind::key) {
      n.status = NodeStatus::planned;
      n.human = planned_state_[static_cast<std::size_t>(n.id)];
      n.timestamp = 0;
    } else {
      n.status = NodeStatus::pruned;
    }
    count += 2;
  }
  head_ = node;
  return count;
}

void InteractionGraph::amend_head(const MotionClip& corrected) {
  const auto e = incoming_executed(head_);
  if (!e) throw GraphError("head has no incoming edge to amend");
  GraphEdge& edge = edges_[static_cast<std::size_t>(*e)];
  const GraphNode& from = nodes_[static_cast<std::size_t>(edge.from)];
  if (corrected.frames.size() < 2 || corrected.frames.front() != from.human)
    throw GraphError("amended clip must start at the edge's source state");
  GraphNode& head = nodes_[static_cast<std::size_t>(head_)];
  edge.clip = corrected;
  head.human = corrected.frames.back();
  head.timestamp = from.timestamp + corrected.frame_count();
}

void InteractionGraph::check_invariants() const {
  const GraphNode& head = node(head_);
  if (head.status != NodeStatus::reached) throw GraphError("head is not a reached node");

  const DirectedPath path = current_path();
  std::size_t executed = 0;
  for (const GraphEdge& e : edges_) {
    if (e.from < 0 || e.to < 0 || e.from >= static_cast<NodeId>(nodes_.size()) ||
        e.to >= static_cast<NodeId>(nodes_.size()))
      throw GraphError("edge references a missing node");
    if (e.from == e.to) throw GraphError("self-loop edge");
    if (e.status == EdgeStatus::executed) ++executed;
  }
  if (executed != path.edges.size()) throw GraphError("executed edges do not form a single path");

  for (std::size_t i = 0; i < path.edges.size(); ++i) {
    const GraphEdge& e = edge(path.edges[i]);
    const GraphNode& a = node(path.nodes[i]);
    const GraphNode& b = node(path.nodes[i + 1]);
    if (a.status != NodeStatus::reached || b.status != NodeStatus::reached)
      throw GraphError("path contains a non-reached node");
    if (!e.clip || e.clip->frames.front() != a.human || e.clip->frames.back() != b.human)
      throw GraphError("edge clip does not chain the node states");
    if (b.timestamp <= a.timestamp) throw GraphError("timestamps not monotone along the path");
  }
  for (const GraphNode& n : nodes_)
    if (n.kind == NodeKind::key && n.status == NodeStatus::pruned) throw GraphError("key node pruned");
}

std::string InteractionGraph::export_trace() const {
  std::ostringstream out;
  for (const GraphNode& n : nodes_) {
    nlohmann::ordered_json j;
    j["record"] = "node";
    j["id"] = n.id;
    j["kind"] = n.kind == NodeKind::key ? "key" : "non_key";
    j["status"] = node_status_name(n.status);
    j["head"] = n.id == head_;
    j["timestamp"] = n.timestamp;
    j["scene_version"] = n.scene_version;
    j["milestone"] = n.milestone ? nlohmann::ordered_json(n.milestone->label) : nlohmann::ordered_json(nullptr);
    j["root"] = {n.human.root_translation.x, n.human.root_translation.y, n.human.root_translation.z};
    j["yaw"] = n.human.root_yaw;
    out << j.dump() << '\n';
  }
  for (const GraphEdge& e : edges_) {
    nlohmann::ordered_json j;
    j["record"] = "edge";
    j["id"] = e.id;
    j["from"] = e.from;
    j["to"] = e.to;
    j["status"] = edge_status_name(e.status);
    j["verb"] = verb_name(e.action.verb);
    j["frames"] = e.clip ? e.clip->frame_count() : 0;
    j["description"] = e.action.description;
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace hsi
