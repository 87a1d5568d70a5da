#include "thoughttree/tree_builder.hpp"

#include <algorithm>

#include "thoughttree/error.hpp"

namespace thoughttree {

ReasoningTree::ReasoningTree() {
  nodes_.push_back({kRoot, 0, 0, 0, false});
  children_.emplace_back();
  parent_.push_back(kRoot);
  incoming_.push_back(0);
}

NodeId ReasoningTree::add_child(NodeId parent, std::size_t thought_index, int occurrence,
                                int step, ThoughtFunction function, bool imputed) {
  if (parent >= nodes_.size()) {
    throw Error(ErrorCode::IntegrityError, "parent node " + std::to_string(parent) + " does not exist");
  }
  if (step <= nodes_[parent].step) {
    throw Error(ErrorCode::IntegrityError,
                "child step " + std::to_string(step) + " is not deeper than parent step " +
                    std::to_string(nodes_[parent].step));
  }
  const NodeId id = nodes_.size();
  nodes_.push_back({id, thought_index, occurrence, step, imputed});
  children_.emplace_back();
  children_[parent].push_back(id);
  parent_.push_back(parent);
  incoming_.push_back(edges_.size());
  edges_.push_back({parent, id, function});
  return id;
}

namespace {

// Most recently created node at exactly `step`, else the most recent node at
// the deepest step below `step`. The root guarantees a result for step >= 1.
NodeId branch_point(const ReasoningTree& tree, int step) {
  const auto& nodes = tree.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->step == step - 1) return it->id;
  }
  NodeId best = ReasoningTree::kRoot;
  int best_step = -1;
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->step < step && it->step > best_step) {
      best = it->id;
      best_step = it->step;
    }
  }
  return best;
}

}  // namespace

ReasoningTree build_tree(const AnnotatedChain& chain) {
  if (chain.thoughts.empty()) throw Error(ErrorCode::EmptyInput, "annotated chain has no thoughts");

  ReasoningTree tree;
  for (std::size_t i = 0; i < chain.thoughts.size(); ++i) {
    const auto& t = chain.thoughts[i];
    const ThoughtFunction function = t.function.value_or(ThoughtFunction::Continuation);

    std::vector<int> steps = t.steps;
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    if (!steps.empty() && steps.front() < 1) {
      throw Error(ErrorCode::IntegrityError,
                  "thought " + std::to_string(i) + " references step " +
                      std::to_string(steps.front()));
    }

    if (steps.empty()) {
      if (i == 0) continue;
      const NodeId latest = tree.latest();
      tree.add_child(latest, i, 1, tree.node(latest).step + 1, function, true);
      continue;
    }

    const NodeId latest = tree.latest();
    const NodeId anchor =
        steps.front() > tree.node(latest).step ? latest : branch_point(tree, steps.front());
    NodeId previous = tree.add_child(anchor, i, 1, steps.front(), function);
    for (std::size_t j = 1; j < steps.size(); ++j) {
      previous = tree.add_child(previous, i, static_cast<int>(j + 1), steps[j],
                                ThoughtFunction::Continuation);
    }
  }
  return tree;
}

nlohmann::json tree_to_json(const ReasoningTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"thought", n.thought_index},
                     {"occurrence", n.occurrence},
                     {"step", n.step},
                     {"imputed", n.imputed}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : tree.edges()) {
    edges.push_back({{"parent", e.parent}, {"child", e.child}, {"function", to_string(e.function)}});
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"root", tree.root()}};
}

ReasoningTree tree_from_json(const nlohmann::json& j) {
  try {
    auto nodes = j.at("nodes");
    std::sort(nodes.begin(), nodes.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
      return a.at("id").get<NodeId>() < b.at("id").get<NodeId>();
    });
    if (nodes.empty() || nodes[0].at("id").get<NodeId>() != ReasoningTree::kRoot ||
        j.value("root", ReasoningTree::kRoot) != ReasoningTree::kRoot) {
      throw Error(ErrorCode::IntegrityError, "tree must have root node 0");
    }

    std::vector<const nlohmann::json*> incoming(nodes.size(), nullptr);
    for (const auto& e : j.at("edges")) {
      const auto child = e.at("child").get<NodeId>();
      if (child == 0 || child >= nodes.size()) {
        throw Error(ErrorCode::IntegrityError, "edge references unknown child " + std::to_string(child));
      }
      if (incoming[child]) {
        throw Error(ErrorCode::IntegrityError, "node " + std::to_string(child) + " has two parents");
      }
      incoming[child] = &e;
    }

    ReasoningTree tree;
    for (std::size_t id = 1; id < nodes.size(); ++id) {
      const auto& n = nodes[id];
      if (n.at("id").get<NodeId>() != id) {
        throw Error(ErrorCode::IntegrityError, "node ids are not contiguous");
      }
      if (!incoming[id]) {
        throw Error(ErrorCode::IntegrityError, "node " + std::to_string(id) + " has no parent");
      }
      const auto& e = *incoming[id];
      const auto parent = e.at("parent").get<NodeId>();
      if (parent >= id) {
        throw Error(ErrorCode::IntegrityError,
                    "node " + std::to_string(id) + " precedes its parent in creation order");
      }
      const auto fname = e.at("function").get<std::string>();
      const auto function = parse_function_name(fname);
      if (!function) throw Error(ErrorCode::ParseError, "unknown edge function " + fname);
      tree.add_child(parent, n.at("thought").get<std::size_t>(), n.at("occurrence").get<int>(),
                     n.at("step").get<int>(), *function, n.value("imputed", false));
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid tree JSON: ") + e.what());
  }
}

std::string to_canonical_json(const ReasoningTree& tree) { return tree_to_json(tree).dump(); }

}  // namespace thoughttree
