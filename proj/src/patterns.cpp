#include <algorithm>
#include <cctype>
#include <map>
#include <string>

#include "thoughttree/error.hpp"
#include "thoughttree/explainer.hpp"

namespace thoughttree {

const char* to_string(ErrorPattern p) noexcept {
  switch (p) {
    case ErrorPattern::OverBranching: return "over_branching";
    case ErrorPattern::StepRedundancy: return "step_redundancy";
    case ErrorPattern::DirectReasoning: return "direct_reasoning";
    case ErrorPattern::SkippedThinking: return "skipped_thinking";
  }
  return "unknown";
}

std::optional<ErrorPattern> parse_pattern(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == ' ') c = '_';
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (auto p : kAllPatterns) {
    if (key == to_string(p)) return p;
  }
  if (key == "overbranching") return ErrorPattern::OverBranching;
  if (key == "stepredundancy") return ErrorPattern::StepRedundancy;
  if (key == "directreasoning") return ErrorPattern::DirectReasoning;
  if (key == "skippedthinking") return ErrorPattern::SkippedThinking;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const PatternThresholds& t) {
  j = {{"over_branching", t.over_branching},
       {"step_redundancy", t.step_redundancy},
       {"direct_reasoning", t.direct_reasoning},
       {"skipped_thinking", t.skipped_thinking}};
}

void from_json(const nlohmann::json& j, PatternThresholds& t) {
  const PatternThresholds d;
  t.over_branching = j.value("over_branching", d.over_branching);
  t.step_redundancy = j.value("step_redundancy", d.step_redundancy);
  t.direct_reasoning = j.value("direct_reasoning", d.direct_reasoning);
  t.skipped_thinking = j.value("skipped_thinking", d.skipped_thinking);
  if (t.over_branching < 1 || t.step_redundancy < 1 || t.direct_reasoning < 1 ||
      t.skipped_thinking < 1) {
    throw Error(ErrorCode::ConfigError, "pattern thresholds must be positive");
  }
}

void to_json(nlohmann::json& j, const PatternDetection& d) {
  j = {{"pattern", to_string(d.pattern)}, {"nodes", d.nodes}};
  if (d.step >= 0) j["step"] = d.step;
}

std::vector<PatternDetection> detect_patterns(const ReasoningTree& tree,
                                              const PatternThresholds& th) {
  std::vector<PatternDetection> out;

  for (const auto& n : tree.nodes()) {
    int branching = 0;
    for (NodeId c : tree.children(n.id)) {
      const auto f = tree.edges()[tree.incoming_edge(c)].function;
      if (f == ThoughtFunction::Exploration || f == ThoughtFunction::Verification) ++branching;
    }
    if (branching >= th.over_branching) {
      out.push_back({ErrorPattern::OverBranching, {n.id}, -1});
    }
  }

  std::map<int, std::vector<NodeId>> by_step;
  for (const auto& n : tree.nodes()) by_step[n.step].push_back(n.id);
  for (const auto& [step, ids] : by_step) {
    if (static_cast<int>(ids.size()) >= th.step_redundancy) {
      out.push_back({ErrorPattern::StepRedundancy, ids, step});
    }
  }

  // Maximal unbranched segments start at the root or at a branching node and
  // run down through single-child nodes. Length is counted in edges, so a
  // single long jump is skipped thinking rather than direct reasoning.
  for (const auto& n : tree.nodes()) {
    const auto& kids = tree.children(n.id);
    if (n.id != tree.root() && kids.size() < 2) continue;
    for (NodeId first : kids) {
      std::vector<NodeId> path{n.id, first};
      while (tree.children(path.back()).size() == 1) path.push_back(tree.children(path.back())[0]);
      if (static_cast<int>(path.size()) - 1 >= th.direct_reasoning) {
        out.push_back({ErrorPattern::DirectReasoning, std::move(path), -1});
      }
    }
  }

  for (const auto& e : tree.edges()) {
    if (tree.node(e.child).step - tree.node(e.parent).step >= th.skipped_thinking) {
      out.push_back({ErrorPattern::SkippedThinking, {e.parent, e.child}, -1});
    }
  }
  return out;
}

}  // namespace thoughttree
