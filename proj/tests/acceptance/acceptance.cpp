// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checks.hpp"
#include "cli_runner.hpp"
#include "generators.hpp"
#include "test_paths.hpp"
#include "thoughttree/dataset.hpp"
#include "thoughttree/explainer.hpp"
#include "thoughttree/gnn_classifier.hpp"
#include "thoughttree/selector.hpp"
#include "thoughttree/tree_builder.hpp"

using namespace thoughttree;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome worked_example() {
  const auto chain = read_json_file(fixture_path("worked_example_chain.json")).get<AnnotatedChain>();
  const auto tree = build_tree(chain);
  const bool exact = tree_to_json(tree) == read_json_file(golden_path("worked_example_tree.json"));
  // N_8^1 under the step-0 root, N_8^2 and N_8^3 chained below it.
  const bool shape = tree.size() == 11 && tree.node(8).thought_index == 8 && tree.parent(8) == 0 &&
                     tree.parent(9) == 8 && tree.parent(10) == 9 && tree.node(7).step == 3;
  return {exact && shape, exact && shape ? "exact match with the golden tree" : "tree differs from the golden file"};
}

// ---- 2 ---------------------------------------------------------------------

Outcome segmenter_lossless() {
  const SeparatorProfile profiles[] = {SeparatorProfile::deepseek_family(), SeparatorProfile::extended()};
  const std::regex regexes[] = {testgen::separator_regex(profiles[0]), testgen::separator_regex(profiles[1])};
  Rng rng(1000);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = trial % 2;
    const auto s = testgen::random_transcript(rng, profiles[p]);
    const auto ts = split_thoughts(s, profiles[p]);
    std::string joined;
    for (const auto& t : ts) joined += t.text;
    if (joined != s || ts.size() != 1 + testgen::count_separators(regexes[p], s)) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " failures over 1000 transcripts"};
}

// ---- 3 ---------------------------------------------------------------------

Outcome tree_invariants() {
  const auto data = generate_planted_dataset(5000, {}, 3);
  int failures = 0;
  for (const auto& s : data) {
    const auto& t = s.tree;
    bool ok = true;
    std::size_t expected = 1;
    for (std::size_t i = 0; i < s.chain.thoughts.size(); ++i) {
      const std::set<int> steps(s.chain.thoughts[i].steps.begin(), s.chain.thoughts[i].steps.end());
      expected += steps.empty() ? (i > 0 ? 1 : 0) : steps.size();
    }
    ok &= t.size() == expected;
    std::size_t roots = 0;
    for (const auto& n : t.nodes()) {
      if (n.id == t.root()) continue;
      ok &= t.parent(n.id) < n.id;
    }
    for (const auto& n : t.nodes()) roots += n.step == 0;
    ok &= roots == 1 && t.node(t.root()).step == 0;
    for (const auto& e : t.edges()) ok &= t.node(e.child).step > t.node(e.parent).step;
    ok &= t.edges().size() + 1 == t.size();
    failures += !ok;
  }
  return {failures == 0, std::to_string(failures) + " failures over " + std::to_string(data.size()) + " trees"};
}

// ---- 4 ---------------------------------------------------------------------

Outcome gradient_check() {
  Rng rng(4);
  TreeClassifier model(ClassifierConfig{});
  model.initialize(4);
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) model.parameters()[i] += 0.1 * rng.normal();
  const auto g = testgen::random_graph(rng, 15);
  const auto r = testgen::check_parameter_gradients(model, g, 1, 150, rng);
  std::vector<double> mask(g.num_tree_edges());
  for (auto& v : mask) v = rng.uniform(0.1, 0.9);
  const auto m = testgen::check_mask_gradients(model, g, mask);
  const bool ok = r.checked >= 100 && r.worst_relative_error <= 1e-3 && m.worst_relative_error <= 1e-3;
  std::ostringstream d;
  d << r.checked << " parameters, worst relative error " << r.worst_relative_error << "; " << m.checked
    << " mask entries, worst " << m.worst_relative_error;
  return {ok, d.str()};
}

// ---- 5 ---------------------------------------------------------------------

std::optional<TreeClassifier> planted_model;

Outcome planted_classification() {
  const auto data = generate_planted_dataset(1000, {}, 11);
  std::vector<std::optional<int>> labels;
  for (const auto& s : data) labels.push_back(s.graph.label);
  const auto split = stratified_split(labels, {4, 1}, 3);
  std::vector<GraphSample> train_set, test_set;
  for (auto i : split.train) train_set.push_back(data[i].graph);
  for (auto i : split.test) test_set.push_back(data[i].graph);

  ClassifierConfig config;
  config.seed = 3;
  const auto t0 = Clock::now();
  auto result = train(train_set, config);
  const double took = seconds_since(t0);
  const double acc = accuracy(result.model, test_set);
  planted_model = result.model;
  std::ostringstream d;
  d << "train " << train_set.size() << " / test " << test_set.size() << ", test accuracy " << acc << " (best epoch "
    << result.best_epoch << " of " << result.log.size() << "), training " << fmt("%.1f s", took);
  return {acc >= 0.90 && result.log.size() <= 100 && took < 300.0, d.str()};
}

// ---- 6 ---------------------------------------------------------------------

double baseline_accuracy(const std::vector<LengthExample>& train_set, const std::vector<LengthExample>& test_set) {
  const auto model = train_length_baseline(train_set);
  std::size_t correct = 0;
  for (const auto& e : test_set) correct += (baseline_score(model, e.token_length) > 0.5 ? 1 : 0) == e.label;
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

Outcome length_baseline() {
  Rng rng(6);
  std::vector<LengthExample> sep_train, sep_test, mix_train, mix_test;
  // Separable: correct responses are always shorter.
  for (int k = 0; k < 2000; ++k) {
    auto& dst = k < 1600 ? sep_train : sep_test;
    dst.push_back({rng.uniform(300, 2900), 1});
    dst.push_back({rng.uniform(3100, 9000), 0});
  }
  // Symmetric overlap: both classes drawn from the same length distribution.
  for (int k = 0; k < 20000; ++k) {
    auto& dst = k < 4000 ? mix_train : mix_test;
    for (int label : {0, 1}) dst.push_back({std::exp(7.5 + 0.6 * rng.normal()), label});
  }
  const double sep = baseline_accuracy(sep_train, sep_test);
  const double mix = baseline_accuracy(mix_train, mix_test);
  std::ostringstream d;
  d << "separable " << sep << ", symmetric overlap " << mix;
  return {sep >= 0.99 && std::abs(mix - 0.5) <= 0.05, d.str()};
}

// ---- 7 ---------------------------------------------------------------------

Outcome explainer_recall() {
  if (!planted_model) planted_classification();
  const auto trials = generate_planted_dataset(50, PatternMix::only(ErrorPattern::OverBranching), 99);
  int hits = 0, n = 0;
  double worst = 0, chance = 0;
  for (const auto& s : trials) {
    if (!s.planted) continue;
    const auto t0 = Clock::now();
    const auto importance = explain(*planted_model, s.graph, 0);
    worst = std::max(worst, seconds_since(t0));
    const auto band = top_band(importance, 0.2);
    // chance that a uniformly random band of the same size holds a planted edge
    const auto m = importance.weights.size(), b = band.size(), p = s.planted_edges.size();
    double miss = 1;
    for (std::size_t k = 0; k < b; ++k) miss *= static_cast<double>(m - p - std::min(m - p, k)) / (m - k);
    chance += 1 - miss;
    hits += std::any_of(band.begin(), band.end(), [&](std::size_t e) {
      return std::find(s.planted_edges.begin(), s.planted_edges.end(), e) != s.planted_edges.end();
    });
    ++n;
  }
  const double recall = static_cast<double>(hits) / n;
  std::ostringstream d;
  d << hits << "/" << n << " trials with a planted edge in the top 20%, slowest explanation " << fmt("%.3f s", worst)
    << ", random band would average " << fmt("%.1f", chance);
  return {n == 50 && recall >= 0.80 && worst < 2.0, d.str()};
}

// ---- 8 ---------------------------------------------------------------------

Outcome detector_agreement() {
  int disagreements = 0;
  for (const auto& s : generate_planted_dataset(1000, {}, 8)) {
    std::set<ErrorPattern> found;
    for (const auto& d : detect_patterns(s.tree)) found.insert(d.pattern);
    const std::set<ErrorPattern> truth(s.ground_truth.begin(), s.ground_truth.end());
    const bool ok = found == truth && (s.planted ? found.count(*s.planted) == 1 : found.empty());
    disagreements += !ok;
  }
  Rng rng(88);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ReasoningTree t;
    const int n = rng.between(1, 30);
    for (int k = 1; k < n; ++k) {
      const NodeId p = rng.below(t.size());
      t.add_child(p, static_cast<std::size_t>(k), 1, t.node(p).step + rng.between(1, 5), function_from_code(rng.between(1, 4)));
    }
    const PatternThresholds low{rng.between(1, 6), rng.between(1, 7), rng.between(1, 6), rng.between(1, 5)};
    PatternThresholds high = low;
    high.over_branching += rng.between(0, 2);
    high.step_redundancy += rng.between(0, 2);
    high.direct_reasoning += rng.between(0, 2);
    high.skipped_thinking += rng.between(0, 2);
    const auto a = detect_patterns(t, high);
    const auto b = detect_patterns(t, low);
    for (const auto& d : a) violations += std::find(b.begin(), b.end(), d) == b.end();
  }
  std::ostringstream d;
  d << disagreements << " disagreements over 2000 generated trees, " << violations
    << " monotonicity violations over 1000 random trees";
  return {disagreements == 0 && violations == 0, d.str()};
}

// ---- 9 ---------------------------------------------------------------------

Outcome selector_oracle() {
  Rng rng(9);
  int questions_with_correct = 0, oracle_misses = 0;
  for (int q = 0; q < 1000; ++q) {
    auto cs = testgen::random_candidates(rng, 1 + rng.below(10), 4, false);
    const std::string gold(1, static_cast<char>('A' + rng.below(4)));
    bool any = false;
    for (auto& c : cs) {
      c.gold_answer = gold;
      c.score = normalize_answer(c.extracted_answer) == gold ? 1.0 : 0.0;
      any |= *c.score == 1.0;
    }
    if (!any) continue;
    ++questions_with_correct;
    const Selection s = select({"q", cs}, Strategy::OursBest);
    oracle_misses += s.correct != true;
  }
  // The bundled candidate file, scored by the same oracle.
  std::vector<Candidate> bundled;
  for (const auto& row : read_jsonl(fixture_path("candidates.jsonl"))) {
    auto c = candidate_from_json(row);
    c.score = normalize_answer(c.extracted_answer) == normalize_answer(c.gold_answer.value_or("")) ? 1.0 : 0.0;
    bundled.push_back(std::move(c));
  }
  for (const auto& q : group_by_question(bundled)) {
    if (std::none_of(q.candidates.begin(), q.candidates.end(), [](const Candidate& c) { return *c.score == 1.0; })) continue;
    ++questions_with_correct;
    oracle_misses += select(q, Strategy::OursBest).correct != true;
  }

  int vote_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cs = testgen::random_candidates(rng, 1 + rng.below(20), rng.between(1, 5), true);
    vote_mismatches += ours_vote(cs) != majority_vote(cs);
  }

  int argmax_changes = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto cs = testgen::random_candidates(rng, 1 + rng.below(12), 3, false);
    const long before = ours_best(cs);
    const double a = rng.uniform(0.5, 4.0), b = rng.uniform(-2.0, 2.0);
    switch (trial % 3) {
      case 0: for (auto& c : cs) c.score = a * *c.score + b; break;
      case 1: for (auto& c : cs) c.score = std::exp(a * *c.score); break;
      default: for (auto& c : cs) c.score = std::pow(*c.score, a) + b; break;
    }
    argmax_changes += ours_best(cs) != before;
  }
  std::ostringstream d;
  d << "oracle ours_best correct on " << questions_with_correct - oracle_misses << "/" << questions_with_correct
    << " questions; " << vote_mismatches << " vote mismatches; " << argmax_changes << " argmax changes";
  return {oracle_misses == 0 && vote_mismatches == 0 && argmax_changes == 0, d.str()};
}

// ---- 10 --------------------------------------------------------------------

std::vector<std::string> replay_pipeline(const std::filesystem::path& dir, std::string& failure) {
  const auto s = [](const std::filesystem::path& p) { return p.string(); };
  const std::vector<std::vector<std::string>> steps{
      {"segment", "--in", s(fixture_path("corpus.jsonl")), "--out", s(dir / "segmented.jsonl")},
      {"annotate", "--cache", s(fixture_path("cache")), "--mode", "replay", "--in", s(dir / "segmented.jsonl"),
       "--out", s(dir / "annotated")},
      {"build-tree", "--in", s(dir / "annotated"), "--out", s(dir / "trees")},
      {"featurize", "--trees", s(dir / "trees"), "--out", s(dir / "graphs.jsonl")},
      {"predict", "--model", s(fixture_path("model.json")), "--trees", s(dir / "trees"), "--out",
       s(dir / "predictions.jsonl")}};
  for (const auto& args : steps) {
    const auto r = testgen::run_cli(args);
    if (r.code != 0) {
      failure = args[0] + " failed: " + r.err;
      return {};
    }
  }
  // Every produced file, relative path first, then its bytes.
  std::vector<std::string> files;
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    files.push_back(std::filesystem::relative(p, dir).generic_string());
    files.push_back(read_text_file(p));
  }
  return files;
}

Outcome end_to_end_replay() {
  const auto t0 = Clock::now();
  TempDir a, b;
  std::string failure;
  const auto first = replay_pipeline(a.path(), failure);
  if (first.empty()) return {false, failure};
  const auto second = replay_pipeline(b.path(), failure);
  if (second.empty()) return {false, failure};
  const double took = seconds_since(t0);

  std::vector<std::string> golden;
  std::vector<std::filesystem::path> paths;
  const auto root = golden_path("pipeline");
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    golden.push_back(std::filesystem::relative(p, root).generic_string());
    golden.push_back(read_text_file(p));
  }
  const bool same_runs = first == second;
  const bool same_golden = first == golden;
  std::ostringstream d;
  d << first.size() / 2 << " files, runs " << (same_runs ? "identical" : "differ") << ", golden "
    << (same_golden ? "identical" : "differs") << ", two runs in " << fmt("%.2f s", took);
  return {same_runs && same_golden && took < 30.0, d.str()};
}

struct Criterion {
  int number;
  const char* name;
  double time_limit;  // seconds, 0 when the criterion times itself
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "worked-example golden tree", 1.0, worked_example},
      {2, "segmenter lossless property", 5.0, segmenter_lossless},
      {3, "tree invariants over planted trees", 30.0, tree_invariants},
      {4, "classifier gradient check", 10.0, gradient_check},
      {5, "planted-pattern classification", 0, planted_classification},
      {6, "length-baseline sanity", 0, length_baseline},
      {7, "explainer recall", 0, explainer_recall},
      {8, "pattern detectors", 0, detector_agreement},
      {9, "selector oracle", 0, selector_oracle},
      {10, "end-to-end replay", 0, end_to_end_replay},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.number)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double took = seconds_since(t0);
    if (c.time_limit > 0 && took >= c.time_limit) {
      o.pass = false;
      o.detail += "; exceeded " + fmt("%.0f s", c.time_limit);
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.number << ". " << c.name << ": " << o.detail << " ["
              << fmt("%.2f s", took) << "]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
