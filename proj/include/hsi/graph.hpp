#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hsi/kinematics.hpp"
#include "hsi/plan.hpp"

namespace hsi {

using NodeId = std::int64_t;
using EdgeId = std::int64_t;

// Key-node candidates for InteractionGraph::extend.
inline constexpr NodeId kNextKey = -1;  // first planned key in order
inline constexpr NodeId kNoKey = -2;    // the clip may not complete any key

enum class NodeKind { key, non_key };
enum class NodeStatus { planned, reached, pruned };
enum class EdgeStatus { planned, executed, pruned };

struct GraphNode {
  NodeId id = 0;
  HumanState human;
  int scene_version = 0;
  std::int64_t timestamp = 0;
  NodeKind kind = NodeKind::non_key;
  std::optional<Milestone> milestone;  // key nodes only
  NodeStatus status = NodeStatus::planned;
};

struct GraphEdge {
  EdgeId id = 0;
  NodeId from = 0, to = 0;
  ActionUnit action;
  std::optional<MotionClip> clip;
  EdgeStatus status = EdgeStatus::planned;
};

// Alternating node/edge sequence from the initial node to the head:
// nodes[0], edges[0], nodes[1], ..., nodes.back().
struct DirectedPath {
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;

  bool operator==(const DirectedPath&) const = default;
};

// The interaction graph. Executed edges always form a single path from the
// initial node to the head; pruned elements are kept (soft delete) so traces
// can report them.
class InteractionGraph {
 public:
  // Initial node is a reached key node and the head; one planned key node per
  // milestone follows. Throws GraphError on an empty plan.
  static InteractionGraph init(const HumanState& start, int scene_version, const KeyPlan& plan,
                               GoalTolerance tolerance = {});

  // Appends an executed edge from the head carrying clip. If the clip's last
  // frame satisfies the candidate key node (a planned key), that node becomes
  // the head; otherwise a new non-key node does.
  NodeId extend(const ActionUnit& action, const MotionClip& clip, int scene_version, NodeId candidate = kNextKey);

  // Marks every executed node/edge after `node` pruned and moves the head back
  // to it. Reached key nodes after it revert to planned. Returns the number of
  // elements removed from the path.
  std::size_t prune_after(NodeId node);

  // Replaces the clip on the head's incoming edge (same first frame, any
  // length >= 1) and rebinds the head state to its last frame.
  void amend_head(const MotionClip& corrected);

  // Appends planned key nodes (critic re-plan). Existing key nodes are kept.
  void append_milestones(const std::vector<Milestone>& milestones);

  DirectedPath current_path() const;

  NodeId head() const { return head_; }
  NodeId initial() const { return 0; }
  const GraphNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const GraphEdge& edge(EdgeId id) const { return edges_.at(static_cast<std::size_t>(id)); }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<NodeId>& key_order() const { return key_order_; }
  std::optional<NodeId> next_planned_key() const;
  std::size_t reached_milestones() const;
  const GoalTolerance& tolerance() const { return tolerance_; }

  // Throws GraphError naming the first violated invariant.
  void check_invariants() const;

  // Line-oriented trace, one JSON object per node then per edge
  // (docs/trace_schema.md).
  std::string export_trace() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<NodeId> key_order_;
  std::vector<HumanState> planned_state_;  // per node; restored when a key node reverts
  NodeId head_ = 0;
  GoalTolerance tolerance_;

  std::optional<EdgeId> incoming_executed(NodeId id) const;
};

std::string_view node_status_name(NodeStatus s);
std::string_view edge_status_name(EdgeStatus s);

}  // namespace hsi
