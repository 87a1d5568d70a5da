#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thoughttree/annotator.hpp"

namespace thoughttree {

using NodeId = std::size_t;

// One placement of thought `thought_index` at sketch step `step`. The
// virtual root is node 0: step 0, occurrence 0, and it stands in for thought
// 0 (the problem statement context).
struct TreeNode {
  NodeId id = 0;
  std::size_t thought_index = 0;
  int occurrence = 0;  // 1-based position in the thought's step list; 0 for the root
  int step = 0;
  // Thought had no assigned step; placed one step below the latest node.
  bool imputed = false;

  bool operator==(const TreeNode&) const = default;
};

struct TreeEdge {
  NodeId parent = 0;
  NodeId child = 0;
  ThoughtFunction function = ThoughtFunction::Continuation;

  bool operator==(const TreeEdge&) const = default;
};

class ReasoningTree {
 public:
  static constexpr NodeId kRoot = 0;

  ReasoningTree();

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const std::vector<TreeEdge>& edges() const noexcept { return edges_; }
  NodeId root() const noexcept { return kRoot; }
  NodeId latest() const noexcept { return nodes_.size() - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  // Children in creation order.
  const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }
  // Parent of a non-root node.
  NodeId parent(NodeId id) const { return parent_.at(id); }
  // Index into edges() of the edge entering `id`; not valid for the root.
  std::size_t incoming_edge(NodeId id) const { return incoming_.at(id); }

  NodeId add_child(NodeId parent, std::size_t thought_index, int occurrence, int step,
                   ThoughtFunction function, bool imputed = false);

  bool operator==(const ReasoningTree& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<TreeEdge> edges_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> parent_;
  std::vector<std::size_t> incoming_;
};

// Inserts the thoughts of `chain` in index order:
//  - a thought whose first step is deeper than the latest node hangs below it;
//  - otherwise it branches from the most recent node at (first step - 1), or,
//    when that step has no node yet, from the most recent node at the deepest
//    step still above it;
//  - the thought's remaining steps chain below its first node via
//    continuation edges.
// A thought other than thought 0 with no steps is imputed one step below the
// latest node. Thought 0's empty list means it is represented by the root.
ReasoningTree build_tree(const AnnotatedChain& chain);

// Stable encoding: {"edges": [...], "nodes": [...], "root": 0} with keys
// sorted and nodes in id order.
nlohmann::json tree_to_json(const ReasoningTree& tree);
ReasoningTree tree_from_json(const nlohmann::json& j);
std::string to_canonical_json(const ReasoningTree& tree);

}  // namespace thoughttree
