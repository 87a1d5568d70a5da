#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "thoughttree/error.hpp"
#include "thoughttree/explainer.hpp"
#include "thoughttree/rng.hpp"

namespace thoughttree {

PatternMix PatternMix::only(ErrorPattern p) {
  PatternMix m;
  m.weights.fill(0.0);
  m.weights[static_cast<std::size_t>(p)] = 1.0;
  return m;
}

namespace {

// Intended tree, node 0 is the root. Children keep their emission order.
struct Draft {
  std::vector<int> parent{-1};
  std::vector<int> step{0};
  std::vector<ThoughtFunction> fn{ThoughtFunction::Continuation};
  std::vector<std::vector<int>> kids{{}};

  int size() const { return static_cast<int>(step.size()); }

  int add(int p, int s, ThoughtFunction f, bool first = false) {
    const int id = size();
    parent.push_back(p);
    step.push_back(s);
    fn.push_back(f);
    kids.emplace_back();
    if (first) {
      kids[p].insert(kids[p].begin(), id);
    } else {
      kids[p].push_back(id);
    }
    return id;
  }

  int count_at(int s) const { return static_cast<int>(std::count(step.begin(), step.end(), s)); }

  int branching(int v) const {
    int n = 0;
    for (int c : kids[v]) {
      n += fn[c] == ThoughtFunction::Exploration || fn[c] == ThoughtFunction::Verification;
    }
    return n;
  }
};

bool is_branching_function(ThoughtFunction f) {
  return f == ThoughtFunction::Exploration || f == ThoughtFunction::Verification;
}

// Ground truth by exhaustive search, kept separate from detect_patterns so
// the two can check each other.
std::vector<ErrorPattern> patterns_present(const Draft& d, const PatternThresholds& th) {
  bool found[4] = {false, false, false, false};
  for (int v = 0; v < d.size(); ++v) {
    if (d.branching(v) >= th.over_branching) found[0] = true;
  }
  std::map<int, int> hist;
  for (int s : d.step) ++hist[s];
  for (const auto& [s, n] : hist) {
    if (n >= th.step_redundancy) found[1] = true;
  }
  // Every ancestor/descendant pair whose in-between nodes all have one child,
  // measured in edges.
  for (int bottom = 1; bottom < d.size() && !found[2]; ++bottom) {
    int edges = 1;
    for (int top = d.parent[bottom]; top >= 0; top = d.parent[top], ++edges) {
      if (edges >= th.direct_reasoning) {
        found[2] = true;
        break;
      }
      if (d.kids[top].size() != 1) break;  // `top` can no longer be an inner node
    }
  }
  for (int v = 1; v < d.size(); ++v) {
    if (d.step[v] - d.step[d.parent[v]] >= th.skipped_thinking) found[3] = true;
  }
  std::vector<ErrorPattern> out;
  for (std::size_t k = 0; k < 4; ++k) {
    if (found[k]) out.push_back(kAllPatterns[k]);
  }
  return out;
}

ThoughtFunction draw_function(Rng& rng, bool allow_branching) {
  const double u = rng.uniform();
  if (u < 0.4) return ThoughtFunction::Continuation;
  if (u < 0.6) return ThoughtFunction::Backtracking;
  if (!allow_branching) return rng.bernoulli(0.5) ? ThoughtFunction::Continuation : ThoughtFunction::Backtracking;
  return u < 0.8 ? ThoughtFunction::Exploration : ThoughtFunction::Verification;
}

Draft grow_clean(Rng& rng, const PatternThresholds& th) {
  const int child_cap = std::max(1, th.over_branching - 1);
  const int branch_cap = std::max(0, th.over_branching - 2);
  const int step_cap = std::max(1, th.step_redundancy - 1);
  const int gap_cap = std::max(1, th.skipped_thinking - 1);
  for (;;) {
    Draft d;
    const int target = rng.between(8, 20);
    const int max_step = rng.between(4, 7);
    for (int tries = 0; d.size() < target && tries < 400; ++tries) {
      const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(d.size())));
      if (static_cast<int>(d.kids[p].size()) >= child_cap) continue;
      // A multi-step jump is only emitted as a first child so the builder
      // reaches it through the "deeper than latest" rule.
      const int gap = d.kids[p].empty() && gap_cap > 1 && rng.bernoulli(0.15) ? rng.between(2, gap_cap) : 1;
      const int s = d.step[p] + gap;
      if (s > max_step || d.count_at(s) >= step_cap) continue;
      d.add(p, s, draw_function(rng, d.branching(p) < branch_cap));
    }
    if (d.size() >= 6 && patterns_present(d, th).empty()) return d;
  }
}

int pick(Rng& rng, const std::vector<int>& items) {
  return items[rng.below(items.size())];
}

// Adds one pattern in place. Returns the draft node ids whose incoming edges
// carry it, or nothing when this draft cannot host the pattern.
std::optional<std::vector<int>> plant(Rng& rng, Draft& d, ErrorPattern p, const PatternThresholds& th) {
  std::vector<int> hosts;
  std::vector<int> carried;
  switch (p) {
    case ErrorPattern::OverBranching: {
      for (int v = 0; v < d.size(); ++v) {
        const int add = th.over_branching - d.branching(v);
        if (d.count_at(d.step[v] + 1) + add + 1 < th.step_redundancy) hosts.push_back(v);
      }
      if (hosts.empty()) return std::nullopt;
      const int hub = pick(rng, hosts);
      const int add = th.over_branching + rng.between(0, 1) - d.branching(hub);
      const int s = d.step[hub] + 1;
      for (int k = 0; k < add && d.count_at(s) + 1 < th.step_redundancy; ++k) {
        d.add(hub, s, rng.bernoulli(0.5) ? ThoughtFunction::Exploration : ThoughtFunction::Verification);
      }
      for (int c : d.kids[hub]) {
        if (is_branching_function(d.fn[c])) carried.push_back(c);
      }
      return carried;
    }
    case ErrorPattern::StepRedundancy: {
      int deepest = *std::max_element(d.step.begin(), d.step.end());
      std::vector<int> steps;
      for (int s = 1; s <= deepest; ++s) {
        if (d.count_at(s - 1) > 0) steps.push_back(s);
      }
      const int s = pick(rng, steps);
      std::vector<int> parents;
      for (int v = 0; v < d.size(); ++v) {
        if (d.step[v] == s - 1) parents.push_back(v);
      }
      const int want = th.step_redundancy + rng.between(0, 1);
      while (d.count_at(s) < want) {
        const ThoughtFunction f = rng.bernoulli(0.5) ? ThoughtFunction::Continuation : ThoughtFunction::Backtracking;
        carried.push_back(d.add(pick(rng, parents), s, f));
      }
      return carried;
    }
    case ErrorPattern::DirectReasoning: {
      hosts.resize(static_cast<std::size_t>(d.size()));
      std::iota(hosts.begin(), hosts.end(), 0);
      int v = pick(rng, hosts);
      const int length = th.direct_reasoning + rng.between(0, 1);
      for (int k = 0; k < length; ++k) {
        const ThoughtFunction f = k == 0 || rng.bernoulli(0.7) ? ThoughtFunction::Continuation : ThoughtFunction::Backtracking;
        v = d.add(v, d.step[v] + 1, f);
        carried.push_back(v);
      }
      return carried;
    }
    case ErrorPattern::SkippedThinking: {
      for (int v = 0; v < d.size(); ++v) {
        if (!d.kids[v].empty() && d.step[d.kids[v][0]] == d.step[v] + 1) hosts.push_back(v);
      }
      if (hosts.empty()) return std::nullopt;
      const int u = pick(rng, hosts);
      const int gap = th.skipped_thinking + rng.between(0, 1);
      carried.push_back(d.add(u, d.step[u] + gap, draw_function(rng, false), /*first=*/true));
      return carried;
    }
  }
  return std::nullopt;
}

struct Emitted {
  AnnotatedChain chain;
  std::vector<int> order;  // draft node id of each built node, in build order
};

// Preorder walk; a node may absorb its first child into the same thought
// when that child continues it.
Emitted emit(Rng& rng, const Draft& d, const std::string& sample_id) {
  Emitted e;
  e.chain.sample_id = sample_id;
  const int deepest = *std::max_element(d.step.begin(), d.step.end());
  for (int s = 1; s <= deepest; ++s) e.chain.sketch.steps.push_back({s, "step " + std::to_string(s)});

  AnnotatedThought root;
  root.thought = {0, "problem statement", 0, static_cast<std::size_t>(rng.between(20, 80))};
  root.thought.word_count = root.thought.token_count;
  e.chain.thoughts.push_back(root);
  e.order.push_back(0);

  std::vector<int> stack;
  for (auto it = d.kids[0].rbegin(); it != d.kids[0].rend(); ++it) stack.push_back(*it);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    AnnotatedThought t;
    t.thought.index = e.chain.thoughts.size();
    t.thought.text = "thought " + std::to_string(t.thought.index);
    t.thought.token_count = static_cast<std::size_t>(rng.between(10, 150));
    t.thought.word_count = t.thought.token_count;
    t.function = d.fn[v];
    for (;;) {
      t.steps.push_back(d.step[v]);
      e.order.push_back(v);
      const auto& kids = d.kids[v];
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
      if (kids.empty() || t.steps.size() >= 3) break;
      const int next = kids.front();
      if (d.fn[next] != ThoughtFunction::Continuation || !rng.bernoulli(0.3)) break;
      stack.pop_back();
      v = next;
    }
    e.chain.thoughts.push_back(std::move(t));
  }
  return e;
}

bool builder_matches(const ReasoningTree& tree, const Draft& d, const std::vector<int>& order) {
  if (tree.size() != order.size()) return false;
  std::vector<NodeId> built(static_cast<std::size_t>(d.size()));
  for (NodeId k = 0; k < order.size(); ++k) built[static_cast<std::size_t>(order[k])] = k;
  for (NodeId k = 1; k < order.size(); ++k) {
    const int v = order[k];
    const auto& edge = tree.edges()[tree.incoming_edge(k)];
    if (tree.parent(k) != built[static_cast<std::size_t>(d.parent[v])] || tree.node(k).step != d.step[v] ||
        edge.function != d.fn[v]) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<PlantedSample> generate_planted_dataset(std::size_t n_per_class, const PatternMix& mix,
                                                    std::uint64_t seed, const PatternThresholds& th) {
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  if (!(total > 0) || std::any_of(mix.weights.begin(), mix.weights.end(), [](double w) { return w < 0; })) {
    throw Error(ErrorCode::ConfigError, "pattern mix needs non-negative weights with a positive sum");
  }
  Rng master(seed);
  std::vector<PlantedSample> out;
  out.reserve(2 * n_per_class);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    Rng rng(master.next_u64());
    const bool positive = i % 2 == 0;
    std::optional<ErrorPattern> planted;
    if (!positive) {
      double u = rng.uniform() * total;
      std::size_t chosen = 0;
      for (std::size_t k = 0; k < mix.weights.size(); ++k) {
        if (mix.weights[k] <= 0) continue;
        chosen = k;
        if (u < mix.weights[k]) break;
        u -= mix.weights[k];
      }
      planted = kAllPatterns[chosen];
    }

    char id[32];
    std::snprintf(id, sizeof id, "planted-%06zu", i);
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) {
        throw Error(ErrorCode::ConfigError, std::string("thresholds leave no room to plant ") +
                                                (planted ? to_string(*planted) : "a clean tree"));
      }
      Draft d = grow_clean(rng, th);
      std::vector<int> carried;
      if (planted) {
        auto c = plant(rng, d, *planted, th);
        if (!c) continue;
        carried = std::move(*c);
      }
      const auto truth = patterns_present(d, th);
      if (planted ? truth != std::vector<ErrorPattern>{*planted} : !truth.empty()) continue;

      Emitted e = emit(rng, d, id);
      ReasoningTree tree = build_tree(e.chain);
      if (!builder_matches(tree, d, e.order)) continue;

      std::vector<NodeId> built(static_cast<std::size_t>(d.size()));
      for (NodeId k = 0; k < e.order.size(); ++k) built[static_cast<std::size_t>(e.order[k])] = k;

      PlantedSample s;
      s.planted = planted;
      s.ground_truth = truth;
      for (int v : carried) s.planted_edges.push_back(tree.incoming_edge(built[static_cast<std::size_t>(v)]));
      std::sort(s.planted_edges.begin(), s.planted_edges.end());
      std::vector<std::size_t> tokens;
      for (const auto& t : e.chain.thoughts) tokens.push_back(t.thought.token_count);
      s.graph = featurize(tree, tokens, id, positive ? 1 : 0);
      s.tree = std::move(tree);
      s.chain = std::move(e.chain);
      out.push_back(std::move(s));
      break;
    }
  }
  return out;
}

nlohmann::json to_json(const PlantedSample& s) {
  nlohmann::json truth = nlohmann::json::array();
  for (auto p : s.ground_truth) truth.push_back(to_string(p));
  return {{"chain", s.chain},
          {"tree", tree_to_json(s.tree)},
          {"graph", s.graph},
          {"planted", s.planted ? nlohmann::json(to_string(*s.planted)) : nlohmann::json(nullptr)},
          {"planted_edges", s.planted_edges},
          {"ground_truth", std::move(truth)}};
}

}  // namespace thoughttree
